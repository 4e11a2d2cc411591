#include "cbmir/datasets.hpp"
#include "cbmir/errors.hpp"
#include "cbmir/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <optional>
#include <thread>

namespace cbmir {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void expect_equal(const std::string& what, const std::string& file, const std::string& actual,
                  const std::string& expected) {
    if (actual != expected) {
        throw ProvenanceError(file + " " + what + " is '" + actual + "', manifest expects '" + expected + "'");
    }
}

} // namespace

std::uint64_t cell_seed(std::uint64_t manifest_seed, std::size_t cell_index) {
    // splitmix64 of (seed, index)
    std::uint64_t z = manifest_seed + 0x9E3779B97F4A7C15ULL * (cell_index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void check_provenance(const FeatureSet& database, const FeatureSet& queries, const CellSpec& expected) {
    for (const auto* set : {&database, &queries}) {
        const std::string file = set == &database ? "database" : "query";
        expect_equal("model", file, set->meta.model_name, expected.model);
        expect_equal("dataset", file, set->meta.dataset_name, expected.dataset);
        expect_equal("image size", file, std::to_string(set->meta.image_size), std::to_string(expected.size));
        if (expected.dim && set->dim() != *expected.dim) {
            throw ProvenanceError(file + " dim is " + std::to_string(set->dim()) + ", manifest expects " +
                                  std::to_string(*expected.dim));
        }
    }
    if (database.meta.role != Role::Database) {
        throw ProvenanceError("database file has role " + std::string(to_string(database.meta.role)));
    }
    if (queries.meta.role != Role::Query) {
        throw ProvenanceError("query file has role " + std::string(to_string(queries.meta.role)));
    }
    if (database.dim() != queries.dim()) {
        throw ProvenanceError("database dim " + std::to_string(database.dim()) + " != query dim " +
                              std::to_string(queries.dim()));
    }
    if (database.meta.is_3d != queries.meta.is_3d) {
        throw ProvenanceError("database and query disagree on is_3d");
    }
}

CellResult run_cell(const CellSpec& cell, const std::vector<std::size_t>& ks, std::uint64_t seed,
                    std::size_t cell_index, unsigned search_workers) {
    FeatureSet database;
    FeatureSet queries;
    std::optional<SyntheticSplit> generated;

    const auto build_start = Clock::now();
    if (cell.synthetic) {
        SynthSpec spec;
        spec.classes = cell.synthetic->classes;
        spec.per_class = cell.synthetic->per_class;
        spec.dim = cell.synthetic->dim;
        spec.sep = cell.synthetic->sep;
        spec.seed = cell_seed(seed, cell_index);
        spec.model = cell.model;
        spec.dataset = cell.dataset;
        spec.image_size = cell.size;
        spec.is_3d = dataset_is_3d(cell.dataset);
        generated = make_synthetic(spec);
        database = std::move(generated->database);
    } else {
        database = read_feature_set(cell.database_path);
    }
    const CosineIndex index(database);
    const double build_s = seconds_since(build_start);

    const auto load_start = Clock::now();
    queries = generated ? std::move(generated->queries) : read_feature_set(cell.query_path);
    const double load_s = seconds_since(load_start);

    check_provenance(database, queries, cell);

    EvaluationOptions options;
    options.ks = ks;
    options.workers = search_workers;
    CellResult result;
    result.model = cell.model;
    result.dataset = cell.dataset;
    result.size = cell.size;
    result.is_3d = database.meta.is_3d;
    result.report = evaluate(queries, index, options);
    result.report.timing.build_s = build_s;
    result.report.timing.test_load_s = load_s;
    result.report.timing.test_s += load_s;
    return result;
}

GridRun run_grid(const ExperimentManifest& manifest, unsigned workers) {
    const std::size_t n = manifest.cells.size();
    std::vector<std::optional<CellResult>> results(n);
    std::vector<std::optional<CellFailure>> failures(n);

    const unsigned pool_size = static_cast<unsigned>(
        std::clamp<std::size_t>(workers == 0 ? default_workers() : workers, 1, std::max<std::size_t>(n, 1)));
    const unsigned total = workers == 0 ? default_workers() : workers;
    const unsigned search_workers = std::max(1u, total / pool_size);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& cell = manifest.cells[i];
            try {
                results[i] = run_cell(cell, manifest.ks, manifest.seed, i, search_workers);
            } catch (const Error& e) {
                failures[i] = CellFailure{i, cell.model, cell.dataset, cell.size, e.what(),
                                          dynamic_cast<const IoError*>(&e) != nullptr};
            } catch (const std::exception& e) {
                failures[i] = CellFailure{i, cell.model, cell.dataset, cell.size, e.what(), false};
            }
        }
    };
    if (pool_size <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < pool_size; ++w) {
            pool.emplace_back(worker);
        }
    }

    GridRun run;
    for (std::size_t i = 0; i < n; ++i) {
        if (results[i]) {
            run.results.push_back(std::move(*results[i]));
        }
        if (failures[i]) {
            run.failures.push_back(std::move(*failures[i]));
        }
    }
    return run;
}

} // namespace cbmir
