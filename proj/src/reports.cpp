#include "cbmir/reports.hpp"

#include "cbmir/datasets.hpp"
#include "cbmir/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cbmir {
namespace {

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) {
        throw ValidationError("cells.csv line " + std::to_string(line_no) + ": unterminated quote");
    }
    return fields;
}

template <typename T>
T parse_number(const std::string& s, const char* column, std::size_t line_no) {
    T value{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ValidationError("cells.csv line " + std::to_string(line_no) + ": bad " + column + " '" + s + "'");
    }
    return value;
}

std::string file_stem_for(const std::string& dataset) {
    std::string out;
    for (char c : dataset) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_';
        out += ok ? c : '_';
    }
    return out.empty() ? "dataset" : out;
}

std::vector<std::string> in_order(std::span<const CellResult> results, std::string CellResult::*field) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : results) {
        if (seen.insert(r.*field).second) {
            out.push_back(r.*field);
        }
    }
    return out;
}

} // namespace

std::string format_cells_csv(std::span<const CellResult> results) {
    std::string out(kCellsCsvHeader);
    out += '\n';
    for (const auto& r : results) {
        const auto& m = r.report;
        out += csv_field(r.model) + ',' + csv_field(r.dataset) + ',' + std::to_string(r.size) + ',' +
               fixed(m.map_at_5, 4) + ',' + fixed(m.mmv_at_5, 4) + ',' + fixed(m.acc_at_1, 4) + ',' +
               fixed(m.acc_at_3, 4) + ',' + fixed(m.acc_at_5, 4) + ',' + fixed(m.timing.build_s, 3) + ',' +
               fixed(m.timing.test_s, 3) + '\n';
    }
    return out;
}

std::vector<CellResult> parse_cells_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<CellResult> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1) {
            if (line != kCellsCsvHeader) {
                throw ValidationError("cells.csv header must be '" + std::string(kCellsCsvHeader) + "'");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line, line_no);
        if (f.size() != 10) {
            throw ValidationError("cells.csv line " + std::to_string(line_no) + ": expected 10 fields, got " +
                                  std::to_string(f.size()));
        }
        CellResult r;
        r.model = f[0];
        r.dataset = f[1];
        r.size = parse_number<std::uint32_t>(f[2], "size", line_no);
        r.is_3d = dataset_is_3d(r.dataset);
        auto& m = r.report;
        m.map_at_5 = parse_number<double>(f[3], "map5", line_no);
        m.mmv_at_5 = parse_number<double>(f[4], "mmv5", line_no);
        m.acc_at_1 = parse_number<double>(f[5], "acc1", line_no);
        m.acc_at_3 = parse_number<double>(f[6], "acc3", line_no);
        m.acc_at_5 = parse_number<double>(f[7], "acc5", line_no);
        m.timing.build_s = parse_number<double>(f[8], "build_s", line_no);
        m.timing.test_s = parse_number<double>(f[9], "test_s", line_no);
        for (double v : {m.map_at_5, m.mmv_at_5, m.acc_at_1, m.acc_at_3, m.acc_at_5}) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("cells.csv line " + std::to_string(line_no) + ": metric outside [0, 1]");
            }
        }
        out.push_back(std::move(r));
    }
    if (line_no == 0) {
        throw ValidationError("cells.csv is empty");
    }
    return out;
}

std::vector<CellResult> read_cells_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    return parse_cells_csv(text.str());
}

std::string format_averages_table(const std::vector<AverageRow>& rows, Group group) {
    std::string out = std::string("# ") + (group == Group::TwoD ? "2D" : "3D") +
                      " averages over all datasets and sizes (%)\n\n"
                      "| Model | mAP@5 | mMV@5 | ACC@1 | ACC@3 | ACC@5 | Cells |\n"
                      "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& r : rows) {
        out += "| " + r.model + " | " + fixed(r.map5, 2) + " | " + fixed(r.mmv5, 2) + " | " + fixed(r.acc1, 2) +
               " | " + fixed(r.acc3, 2) + " | " + fixed(r.acc5, 2) + " | " + std::to_string(r.cells) + " |\n";
    }
    return out;
}

std::string format_range_table(const RangeTable& table) {
    std::string out = "# ACC@1 range across image sizes (percentage points)\n\n"
                      "| Dataset | Most robust | Range (%) | Most sensitive | Range (%) |\n"
                      "|---|---|---:|---|---:|\n";
    auto row = [&](const RangeRow& r) {
        out += "| " + r.dataset + " | " + r.most_robust_model + " | " + fixed(r.robust_range, 2) + " | " +
               r.most_sensitive_model + " | " + fixed(r.sensitive_range, 2) + " |\n";
    };
    for (const auto& r : table.rows) {
        row(r);
    }
    row(table.overall);
    return out;
}

std::string format_timing_table(std::span<const CellResult> results) {
    std::string out = "# Database build and test time per cell\n\n"
                      "| Dataset | Model | Size | Build (s) | Test (s) | Build (min) | Test (min) |\n"
                      "|---|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r : results) {
        const auto& t = r.report.timing;
        out += "| " + r.dataset + " | " + r.model + " | " + std::to_string(r.size) + " | " + fixed(t.build_s, 3) +
               " | " + fixed(t.test_s, 3) + " | " + fixed(t.build_s / 60.0, 4) + " | " +
               fixed(t.test_s / 60.0, 4) + " |\n";
    }
    return out;
}

std::string format_figure_csv(std::span<const CellResult> results, const std::string& dataset) {
    std::string out = "model,size,acc1\n";
    for (const auto& model : in_order(results, &CellResult::model)) {
        std::vector<const CellResult*> cells;
        for (const auto& r : results) {
            if (r.dataset == dataset && r.model == model) {
                cells.push_back(&r);
            }
        }
        std::stable_sort(cells.begin(), cells.end(),
                         [](const CellResult* a, const CellResult* b) { return a->size < b->size; });
        for (const auto* r : cells) {
            out += csv_field(model) + ',' + std::to_string(r->size) + ',' + fixed(r->report.acc_at_1 * 100.0, 2) +
                   '\n';
        }
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw IoError("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

ReportInventory emit_reports(std::span<const CellResult> results, const std::filesystem::path& output_dir) {
    if (results.empty()) {
        throw ValidationError("no cell results to report");
    }
    std::error_code ec;
    std::filesystem::create_directories(output_dir / "figures", ec);
    if (ec) {
        throw IoError("cannot create " + (output_dir / "figures").string() + ": " + ec.message());
    }

    ReportInventory inv;
    auto emit = [&](const std::filesystem::path& path, const std::string& content) {
        write_file_atomic(path, content);
        inv.files.push_back(path);
    };

    emit(output_dir / "cells.csv", format_cells_csv(results));
    emit(output_dir / "timing.md", format_timing_table(results));

    for (const auto group : {Group::TwoD, Group::ThreeD}) {
        const bool want_3d = group == Group::ThreeD;
        if (std::none_of(results.begin(), results.end(), [&](const CellResult& r) { return r.is_3d == want_3d; })) {
            continue;
        }
        const auto name = want_3d ? "averages_3d.md" : "averages_2d.md";
        try {
            emit(output_dir / name, format_averages_table(aggregate_averages(results, group), group));
        } catch (const IoError&) {
            throw;
        } catch (const Error& e) {
            inv.warnings.push_back(std::string(name) + " skipped: " + e.what());
        }
    }

    try {
        emit(output_dir / "robustness.md", format_range_table(robustness_ranges(results)));
    } catch (const IoError&) {
        throw;
    } catch (const Error& e) {
        inv.warnings.push_back(std::string("robustness.md skipped: ") + e.what());
    }

    for (const auto& dataset : in_order(results, &CellResult::dataset)) {
        emit(output_dir / "figures" / (file_stem_for(dataset) + ".csv"), format_figure_csv(results, dataset));
    }
    return inv;
}

} // namespace cbmir
