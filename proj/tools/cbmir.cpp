// cbmir: exact cosine retrieval and evaluation over FSET1 feature files.

#include "cbmir/errors.hpp"
#include "cbmir/feature_store.hpp"
#include "cbmir/harness.hpp"
#include "cbmir/metrics.hpp"
#include "cbmir/reports.hpp"
#include "cbmir/synth.hpp"
#include "cbmir/volume3d.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

void print_report(const cbmir::CellResult& cell) {
    const auto& m = cell.report;
    std::printf("%s / %s / %u: %zu queries\n", cell.model.c_str(), cell.dataset.c_str(), cell.size, m.query_count);
    for (const auto& k : m.by_k) {
        std::printf("  k=%-3zu mAP %.4f  mMV %.4f  ACC %.4f\n", k.k, k.map, k.mmv, k.acc);
    }
    std::printf("  build %.3fs  test %.3fs (load %.3fs, scan %.3fs)\n", m.timing.build_s, m.timing.test_s,
                m.timing.test_load_s, m.timing.test_scan_s);
}

struct EvaluateArgs {
    std::string db;
    std::string query;
    std::vector<std::size_t> ks{1, 3, 5};
    std::string out;
    unsigned workers = 0;
};

int run_evaluate(const EvaluateArgs& args) {
    const auto build_start = Clock::now();
    const auto database = cbmir::read_feature_set(args.db);
    const cbmir::CosineIndex index(database);
    const double build_s = seconds_since(build_start);

    const auto load_start = Clock::now();
    const auto queries = cbmir::read_feature_set(args.query);
    const double load_s = seconds_since(load_start);

    cbmir::CellSpec expected;
    expected.model = database.meta.model_name;
    expected.dataset = database.meta.dataset_name;
    expected.size = database.meta.image_size;
    cbmir::check_provenance(database, queries, expected);

    cbmir::CellResult cell;
    cell.model = expected.model;
    cell.dataset = expected.dataset;
    cell.size = expected.size;
    cell.is_3d = database.meta.is_3d;
    cell.report = cbmir::evaluate(queries, index, {args.ks, args.workers});
    cell.report.timing.build_s = build_s;
    cell.report.timing.test_load_s = load_s;
    cell.report.timing.test_s += load_s;
    print_warnings(cell.report.warnings);
    print_report(cell);

    if (!args.out.empty()) {
        const auto inv = cbmir::emit_reports(std::span(&cell, 1), args.out);
        print_warnings(inv.warnings);
    }
    return kExitOk;
}

int run_grid(const std::string& manifest_path, std::string out, unsigned workers) {
    auto manifest = cbmir::load_manifest(manifest_path);
    if (!out.empty()) {
        manifest.output_dir = out;
    }
    if (manifest.output_dir.empty()) {
        throw cbmir::ValidationError("no output directory: pass --out or set output_dir in the manifest");
    }
    const auto run = cbmir::run_grid(manifest, workers);
    for (const auto& f : run.failures) {
        std::cerr << "cell " << f.cell_index << " (" << f.model << ", " << f.dataset << ", " << f.size
                  << ") failed: " << f.message << '\n';
    }
    if (!run.results.empty()) {
        const auto inv = cbmir::emit_reports(run.results, manifest.output_dir);
        print_warnings(inv.warnings);
    }
    std::printf("%zu of %zu cells evaluated\n", run.results.size(), manifest.cells.size());
    for (const auto& f : run.failures) {
        if (f.io) {
            return kExitIo;
        }
    }
    return run.failures.empty() ? kExitOk : kExitInvalid;
}

int run_concat3d(const std::string& pattern, const std::string& out) {
    const auto files = cbmir::collect_slice_files(pattern);
    cbmir::SliceStack stack;
    for (const auto& f : files) {
        stack.slices.push_back(cbmir::read_feature_set(f));
    }
    const auto volume = cbmir::concat_slices(stack);
    const auto bytes = cbmir::write_feature_set(volume, std::filesystem::path(out));
    std::printf("%zu slices -> %zu records of dim %u (%zu bytes)\n", files.size(), volume.size(), volume.dim(),
                bytes);
    return kExitOk;
}

int run_validate(const std::string& path, bool strict) {
    const auto set = cbmir::read_feature_set_unvalidated(std::filesystem::path(path));
    const auto violations = cbmir::validate_feature_set(set);
    const auto warnings = cbmir::validation_warnings(set);
    std::printf("%s: %s/%s size %u, %s, %s, %zu records, dim %u, %u classes\n", path.c_str(),
                set.meta.model_name.c_str(), set.meta.dataset_name.c_str(), set.meta.image_size,
                set.meta.is_3d ? "3D" : "2D", std::string(cbmir::to_string(set.meta.role)).c_str(), set.size(),
                set.dim(), set.meta.num_classes);
    for (const auto& v : violations) {
        std::printf("violation [%s]: %s\n", std::string(cbmir::to_string(v.kind)).c_str(), v.message.c_str());
    }
    for (const auto& w : warnings) {
        std::printf("warning: %s\n", w.c_str());
    }
    const bool ok = violations.empty() && (!strict || warnings.empty());
    std::printf("%s\n", ok ? "OK" : "INVALID");
    return ok ? kExitOk : kExitInvalid;
}

int run_synth(const cbmir::SynthSpec& spec, const std::string& out_db, const std::string& out_q) {
    const auto split = cbmir::make_synthetic(spec);
    cbmir::write_feature_set(split.database, std::filesystem::path(out_db));
    cbmir::write_feature_set(split.queries, std::filesystem::path(out_q));
    std::printf("wrote %zu database and %zu query records of dim %u\n", split.database.size(), split.queries.size(),
                spec.dim);
    return kExitOk;
}

int run_report(const std::string& cells, const std::string& out) {
    const auto results = cbmir::read_cells_csv(cells);
    const auto inv = cbmir::emit_reports(results, out);
    print_warnings(inv.warnings);
    for (const auto& f : inv.files) {
        std::printf("%s\n", f.string().c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact content-based image retrieval over FSET1 feature files"};
    app.require_subcommand(1);

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score a query set against a database");
    evaluate->add_option("--db", eval_args.db, "Database feature file")->required();
    evaluate->add_option("--query", eval_args.query, "Query feature file")->required();
    evaluate->add_option("--k", eval_args.ks, "Cutoffs, e.g. 1,3,5")->delimiter(',')->check(CLI::PositiveNumber);
    evaluate->add_option("--out", eval_args.out, "Report directory");
    evaluate->add_option("--workers", eval_args.workers, "Search threads (default: CBMIR_WORKERS or all cores)");

    std::string manifest;
    std::string grid_out;
    unsigned grid_workers = 0;
    auto* grid = app.add_subcommand("grid", "Evaluate every cell of an experiment manifest");
    grid->add_option("--manifest", manifest, "Manifest (JSON)")->required();
    grid->add_option("--out", grid_out, "Report directory (overrides the manifest)");
    grid->add_option("--workers", grid_workers, "Worker threads (default: CBMIR_WORKERS or all cores)");

    std::string slices;
    std::string concat_out;
    auto* concat = app.add_subcommand("concat3d", "Concatenate per-slice feature files into volume features");
    concat->add_option("--slices", slices, "Glob matching <dataset>_<model>_<size>_slice<NNN>.fset")->required();
    concat->add_option("--out", concat_out, "Output feature file")->required();

    std::string validate_path;
    bool strict = false;
    auto* validate = app.add_subcommand("validate", "Check a feature file");
    validate->add_option("file", validate_path, "Feature file")->required();
    validate->add_flag("--strict", strict, "Treat warnings as failures");

    cbmir::SynthSpec spec;
    std::string synth_db;
    std::string synth_q;
    auto* synth = app.add_subcommand("synth", "Generate class-clustered Gaussian features");
    synth->add_option("--classes", spec.classes)->required()->check(CLI::PositiveNumber);
    synth->add_option("--per-class", spec.per_class)->required()->check(CLI::PositiveNumber);
    synth->add_option("--dim", spec.dim)->required()->check(CLI::PositiveNumber);
    synth->add_option("--sep", spec.sep, "Centroid distance in intra-class standard deviations")->required();
    synth->add_option("--seed", spec.seed)->required();
    synth->add_option("--model", spec.model, "Model name recorded in the files")->capture_default_str();
    synth->add_option("--dataset", spec.dataset, "Dataset name recorded in the files")->capture_default_str();
    synth->add_option("--size", spec.image_size, "Image size recorded in the files")->capture_default_str();
    synth->add_option("--out-db", synth_db)->required();
    synth->add_option("--out-q", synth_q)->required();

    std::string cells;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Rebuild tables and figure data from cells.csv");
    report->add_option("--cells", cells)->required();
    report->add_option("--out", report_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (*evaluate) {
            return run_evaluate(eval_args);
        }
        if (*grid) {
            return run_grid(manifest, grid_out, grid_workers);
        }
        if (*concat) {
            return run_concat3d(slices, concat_out);
        }
        if (*validate) {
            return run_validate(validate_path, strict);
        }
        if (*synth) {
            return run_synth(spec, synth_db, synth_q);
        }
        if (*report) {
            return run_report(cells, report_out);
        }
    } catch (const cbmir::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}
