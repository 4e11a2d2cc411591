#pragma once

#include "cbmir/metrics.hpp"
#include "cbmir/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cbmir {

/// Generated in memory instead of read from files.
struct SyntheticCellSpec {
    std::uint32_t classes = 2;
    std::uint64_t per_class = 10;
    std::uint32_t dim = 8;
    double sep = 10.0;
};

struct CellSpec {
    std::filesystem::path database_path;
    std::filesystem::path query_path;
    std::string model;
    std::string dataset;
    std::uint32_t size = 0;
    std::optional<std::uint32_t> dim;
    std::optional<SyntheticCellSpec> synthetic;
};

/// A grid of (model, dataset, image size) cells evaluated with the same
/// cutoffs. JSON form:
///
///   {"cells": [{"database": "db.fset", "query": "q.fset", "model": "UNI",
///               "dataset": "BreastMNIST", "size": 224, "dim": 1024}, ...],
///    "ks": [1, 3, 5], "output_dir": "out", "seed": 0}
///
/// A cell may give "synthetic": {"classes", "per_class", "dim", "sep"}
/// instead of file paths. Relative paths resolve against the manifest's
/// directory.
struct ExperimentManifest {
    std::vector<CellSpec> cells;
    std::vector<std::size_t> ks{1, 3, 5};
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
};

/// Throws ValidationError on malformed JSON, missing fields, duplicate
/// (model, dataset, size) cells, duplicate paths or bad ks.
ExperimentManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentManifest load_manifest(const std::filesystem::path& path);

struct CellResult {
    std::string model;
    std::string dataset;
    std::uint32_t size = 0;
    bool is_3d = false;
    MetricReport report;
};

struct CellFailure {
    std::size_t cell_index = 0;
    std::string model;
    std::string dataset;
    std::uint32_t size = 0;
    std::string message;
    bool io = false;
};

struct GridRun {
    std::vector<CellResult> results;  // manifest order, failed cells omitted
    std::vector<CellFailure> failures;
};

/// Checks a database/query pair against each other and against the expected
/// provenance. Throws ProvenanceError.
void check_provenance(const FeatureSet& database, const FeatureSet& queries, const CellSpec& expected);

/// Loads (or generates) one cell and evaluates it. Build time covers database
/// load and index construction, test time covers query load, search and
/// metrics.
CellResult run_cell(const CellSpec& cell, const std::vector<std::size_t>& ks, std::uint64_t seed,
                    std::size_t cell_index, unsigned search_workers = 1);

/// Runs every cell on a pool of `workers` threads (0 = default_workers()).
/// A failing cell is recorded and the rest continue.
GridRun run_grid(const ExperimentManifest& manifest, unsigned workers = 0);

/// Seed of the synthetic generator for a manifest cell.
std::uint64_t cell_seed(std::uint64_t manifest_seed, std::size_t cell_index);

} // namespace cbmir
