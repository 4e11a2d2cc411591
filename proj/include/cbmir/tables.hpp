#pragma once

#include "cbmir/harness.hpp"

#include <span>
#include <string>
#include <vector>

namespace cbmir {

enum class Group { TwoD, ThreeD };

/// Per-model unweighted mean over every (dataset, size) cell of a group, in
/// percent.
struct AverageRow {
    std::string model;
    double map5 = 0.0;
    double mmv5 = 0.0;
    double acc1 = 0.0;
    double acc3 = 0.0;
    double acc5 = 0.0;
    std::size_t cells = 0;
};

/// Rows in order of each model's first appearance. Throws ValidationError
/// when the group is empty or has duplicate cells, and RaggedGridError naming
/// the first (model, dataset, size) hole.
std::vector<AverageRow> aggregate_averages(std::span<const CellResult> results, Group group);

/// Spread of ACC@1 across image sizes, in percentage points.
struct RangeRow {
    std::string dataset;
    std::string most_robust_model;
    double robust_range = 0.0;
    std::string most_sensitive_model;
    double sensitive_range = 0.0;
};

struct RangeTable {
    std::vector<RangeRow> rows;  // datasets in order of first appearance
    RangeRow overall;            // dataset = "All"; per-model ranges averaged over datasets
};

/// Ranges below this many percentage points apart count as tied.
inline constexpr double kRangeTieTolerance = 1e-9;

/// max - min ACC@1 over sizes for every (dataset, model); argmin/argmax per
/// dataset with ties broken alphabetically by model. Throws ValidationError
/// for a (model, dataset) with fewer than two sizes and RaggedGridError when a
/// model is missing from a dataset.
RangeTable robustness_ranges(std::span<const CellResult> results);

} // namespace cbmir
