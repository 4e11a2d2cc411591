#include "cbmir/tables.hpp"

#include "cbmir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace cbmir {
namespace {

// First-appearance order of a string key.
class Ordering {
public:
    void add(const std::string& key) {
        if (seen_.insert(key).second) {
            order_.push_back(key);
        }
    }
    const std::vector<std::string>& items() const { return order_; }

private:
    std::set<std::string> seen_;
    std::vector<std::string> order_;
};

struct Ranked {
    std::string model;
    double range;
};

// Smallest (or largest) range, alphabetical among ties.
const Ranked& pick(const std::vector<Ranked>& ranges, bool smallest) {
    const Ranked* best = &ranges.front();
    for (const auto& r : ranges) {
        const double diff = smallest ? best->range - r.range : r.range - best->range;
        if (diff > kRangeTieTolerance || (std::abs(diff) <= kRangeTieTolerance && r.model < best->model)) {
            best = &r;
        }
    }
    return *best;
}

RangeRow make_row(std::string dataset, const std::vector<Ranked>& ranges) {
    const auto& lo = pick(ranges, true);
    const auto& hi = pick(ranges, false);
    return {std::move(dataset), lo.model, lo.range, hi.model, hi.range};
}

} // namespace

std::vector<AverageRow> aggregate_averages(std::span<const CellResult> results, Group group) {
    const bool want_3d = group == Group::ThreeD;
    Ordering models;
    std::set<std::pair<std::string, std::uint32_t>> grid;
    std::map<std::tuple<std::string, std::string, std::uint32_t>, const CellResult*> cells;
    for (const auto& r : results) {
        if (r.is_3d != want_3d) {
            continue;
        }
        models.add(r.model);
        grid.emplace(r.dataset, r.size);
        if (!cells.emplace(std::tuple{r.model, r.dataset, r.size}, &r).second) {
            throw ValidationError("duplicate cell (" + r.model + ", " + r.dataset + ", " + std::to_string(r.size) +
                                  ")");
        }
    }
    if (cells.empty()) {
        throw ValidationError(std::string("no ") + (want_3d ? "3D" : "2D") + " cells to aggregate");
    }

    std::vector<AverageRow> rows;
    for (const auto& model : models.items()) {
        AverageRow row;
        row.model = model;
        for (const auto& [dataset, size] : grid) {
            auto it = cells.find({model, dataset, size});
            if (it == cells.end()) {
                throw RaggedGridError("missing cell: model " + model + ", dataset " + dataset + ", size " +
                                      std::to_string(size));
            }
            const auto& rep = it->second->report;
            row.map5 += rep.map_at_5;
            row.mmv5 += rep.mmv_at_5;
            row.acc1 += rep.acc_at_1;
            row.acc3 += rep.acc_at_3;
            row.acc5 += rep.acc_at_5;
            ++row.cells;
        }
        const double scale = 100.0 / static_cast<double>(row.cells);
        row.map5 *= scale;
        row.mmv5 *= scale;
        row.acc1 *= scale;
        row.acc3 *= scale;
        row.acc5 *= scale;
        rows.push_back(std::move(row));
    }
    return rows;
}

RangeTable robustness_ranges(std::span<const CellResult> results) {
    if (results.empty()) {
        throw ValidationError("no cells for robustness ranges");
    }
    Ordering datasets;
    Ordering models;
    // (dataset, model) -> ACC@1 per size
    std::map<std::pair<std::string, std::string>, std::vector<double>> acc;
    for (const auto& r : results) {
        datasets.add(r.dataset);
        models.add(r.model);
        acc[{r.dataset, r.model}].push_back(r.report.acc_at_1);
    }

    RangeTable table;
    std::map<std::string, double> range_sum;
    for (const auto& dataset : datasets.items()) {
        std::vector<Ranked> ranges;
        for (const auto& model : models.items()) {
            auto it = acc.find({dataset, model});
            if (it == acc.end()) {
                throw RaggedGridError("model " + model + " has no cells for dataset " + dataset);
            }
            if (it->second.size() < 2) {
                throw ValidationError("model " + model + " has a single image size for dataset " + dataset +
                                      "; a range needs at least two");
            }
            const auto [lo, hi] = std::minmax_element(it->second.begin(), it->second.end());
            const double range = (*hi - *lo) * 100.0;
            ranges.push_back({model, range});
            range_sum[model] += range;
        }
        table.rows.push_back(make_row(dataset, ranges));
    }

    std::vector<Ranked> overall;
    for (const auto& model : models.items()) {
        overall.push_back({model, range_sum[model] / static_cast<double>(datasets.items().size())});
    }
    table.overall = make_row("All", overall);
    return table;
}

} // namespace cbmir
