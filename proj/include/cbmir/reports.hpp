#pragma once

#include "cbmir/harness.hpp"
#include "cbmir/tables.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cbmir {

inline constexpr std::string_view kCellsCsvHeader = "model,dataset,size,map5,mmv5,acc1,acc3,acc5,build_s,test_s";

/// One row per cell: metrics as fractions to 4 decimals, seconds to 3.
std::string format_cells_csv(std::span<const CellResult> results);

/// Parses cells.csv. 2D/3D membership is derived from the dataset name.
/// Throws ValidationError on malformed rows.
std::vector<CellResult> parse_cells_csv(const std::string& text);
std::vector<CellResult> read_cells_csv(const std::filesystem::path& path);

std::string format_averages_table(const std::vector<AverageRow>& rows, Group group);
std::string format_range_table(const RangeTable& table);
std::string format_timing_table(std::span<const CellResult> results);

/// Long-format ACC@1 (percent) per (model, size) for one dataset, sizes ascending.
std::string format_figure_csv(std::span<const CellResult> results, const std::string& dataset);

/// Replaces `path` through a temporary file in the same directory.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

struct ReportInventory {
    std::vector<std::filesystem::path> files;
    /// Tables that could not be produced (ragged grid, single-size dataset, ...).
    std::vector<std::string> warnings;
};

/// Writes cells.csv, timing.md, averages_2d.md / averages_3d.md,
/// robustness.md and figures/<dataset>.csv under `output_dir`. Every file
/// except cells.csv and timing.md is free of timing values.
ReportInventory emit_reports(std::span<const CellResult> results, const std::filesystem::path& output_dir);

} // namespace cbmir
