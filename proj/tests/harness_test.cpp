#include "cbmir/errors.hpp"
#include "cbmir/harness.hpp"
#include "cbmir/reports.hpp"
#include "cbmir/tables.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace cbmir;

namespace {

CellResult cell(const std::string& model, const std::string& dataset, std::uint32_t size, double acc1,
                bool is_3d = false) {
    CellResult r;
    r.model = model;
    r.dataset = dataset;
    r.size = size;
    r.is_3d = is_3d;
    r.report.acc_at_1 = acc1;
    r.report.acc_at_3 = std::min(1.0, acc1 + 0.1);
    r.report.acc_at_5 = std::min(1.0, acc1 + 0.2);
    r.report.map_at_5 = acc1 / 2;
    r.report.mmv_at_5 = acc1;
    return r;
}

CellSpec synthetic_cell(const std::string& model, const std::string& dataset, std::uint32_t size, double sep) {
    CellSpec c;
    c.model = model;
    c.dataset = dataset;
    c.size = size;
    c.synthetic = SyntheticCellSpec{4, 25, 16, sep};
    return c;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("cbmir_harness_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST(Manifest, ParsesCellsAndResolvesPaths) {
    const auto m = parse_manifest(R"({
        "cells": [
          {"database": "a_db.fset", "query": "/abs/a_q.fset", "model": "UNI", "dataset": "BreastMNIST",
           "size": 224, "dim": 1024},
          {"model": "Toy", "dataset": "Synthetic", "size": 28,
           "synthetic": {"classes": 3, "per_class": 5, "dim": 8, "sep": 4.5}}
        ],
        "ks": [5, 1, 10], "output_dir": "out", "seed": 9})",
                                  "/base");
    ASSERT_EQ(m.cells.size(), 2u);
    EXPECT_EQ(m.cells[0].database_path, std::filesystem::path("/base/a_db.fset"));
    EXPECT_EQ(m.cells[0].query_path, std::filesystem::path("/abs/a_q.fset"));
    EXPECT_EQ(m.cells[0].dim, 1024u);
    EXPECT_FALSE(m.cells[1].dim.has_value());
    ASSERT_TRUE(m.cells[1].synthetic.has_value());
    EXPECT_EQ(m.cells[1].synthetic->per_class, 5u);
    EXPECT_EQ(m.cells[1].synthetic->sep, 4.5);
    EXPECT_EQ(m.ks, (std::vector<std::size_t>{5, 1, 10}));
    EXPECT_EQ(m.seed, 9u);
    EXPECT_EQ(m.output_dir, std::filesystem::path("/base/out"));
}

TEST(Manifest, RejectsMalformedInput) {
    EXPECT_THROW(parse_manifest("{"), ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": {}})"), ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [], "ks": []})"), ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [], "ks": [0]})"), ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [{"model": "m", "dataset": "d"}]})"), ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [{"model": "m", "dataset": "d", "size": "28",
                                    "database": "a", "query": "b"}]})"),
                 ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [
        {"model": "m", "dataset": "d", "size": 28, "database": "a", "query": "b"},
        {"model": "m", "dataset": "d", "size": 28, "database": "c", "query": "e"}]})"),
                 ValidationError);
    EXPECT_THROW(parse_manifest(R"({"cells": [
        {"model": "m", "dataset": "d", "size": 28, "database": "a", "query": "b"},
        {"model": "m", "dataset": "d", "size": 64, "database": "a", "query": "e"}]})"),
                 ValidationError);
    EXPECT_THROW(load_manifest("/nonexistent/manifest.json"), IoError);
}

TEST(Grid, SingleCellMatchesDirectEvaluate) {
    ExperimentManifest m;
    m.cells.push_back(synthetic_cell("Toy", "Synthetic", 28, 3.0));
    m.seed = 5;
    const auto run = run_grid(m, 1);
    ASSERT_EQ(run.results.size(), 1u);
    ASSERT_TRUE(run.failures.empty());

    SynthSpec spec;
    spec.classes = 4;
    spec.per_class = 25;
    spec.dim = 16;
    spec.sep = 3.0;
    spec.seed = cell_seed(5, 0);
    spec.model = "Toy";
    spec.dataset = "Synthetic";
    const auto split = make_synthetic(spec);
    const auto direct = evaluate(split.queries, split.database);
    const auto& got = run.results[0].report;
    EXPECT_EQ(got.map_at_5, direct.map_at_5);
    EXPECT_EQ(got.mmv_at_5, direct.mmv_at_5);
    EXPECT_EQ(got.acc_at_1, direct.acc_at_1);
    EXPECT_EQ(got.acc_at_3, direct.acc_at_3);
    EXPECT_EQ(got.acc_at_5, direct.acc_at_5);
    EXPECT_EQ(got.per_query_ap, direct.per_query_ap);
    EXPECT_GT(got.timing.build_s, 0.0);
    EXPECT_GE(got.timing.test_s, got.timing.test_scan_s + got.timing.test_load_s);
}

TEST(Grid, ProvenanceMismatchFailsOnlyThatCell) {
    const auto dir = scratch("provenance");
    for (const auto& [model, dim] : {std::pair<std::string, std::uint32_t>{"ResNet50", 2048}, {"UNI", 1024}}) {
        SynthSpec spec;
        spec.classes = 2;
        spec.per_class = 6;
        spec.dim = dim;
        spec.model = model;
        spec.dataset = "BreastMNIST";
        spec.image_size = 224;
        const auto split = make_synthetic(spec);
        write_feature_set(split.database, dir / (model + "_db.fset"));
        write_feature_set(split.queries, dir / (model + "_q.fset"));
    }
    const auto m = parse_manifest(R"({"cells": [
        {"model": "ResNet50", "dataset": "BreastMNIST", "size": 224, "dim": 512,
         "database": "ResNet50_db.fset", "query": "ResNet50_q.fset"},
        {"model": "UNI", "dataset": "BreastMNIST", "size": 224, "dim": 1024,
         "database": "UNI_db.fset", "query": "UNI_q.fset"},
        {"model": "VGG19", "dataset": "BreastMNIST", "size": 224,
         "database": "missing_db.fset", "query": "missing_q.fset"}]})",
                                  dir);
    const auto run = run_grid(m, 2);
    ASSERT_EQ(run.results.size(), 1u);
    EXPECT_EQ(run.results[0].model, "UNI");
    ASSERT_EQ(run.failures.size(), 2u);
    EXPECT_EQ(run.failures[0].cell_index, 0u);
    EXPECT_FALSE(run.failures[0].io);
    EXPECT_NE(run.failures[0].message.find("dim is 2048"), std::string::npos) << run.failures[0].message;
    EXPECT_EQ(run.failures[1].cell_index, 2u);
    EXPECT_TRUE(run.failures[1].io);
    std::filesystem::remove_all(dir);
}

TEST(Grid, CheckProvenanceFields) {
    SynthSpec spec;
    spec.model = "UNI";
    spec.dataset = "BloodMNIST";
    spec.image_size = 64;
    const auto split = make_synthetic(spec);
    CellSpec expected;
    expected.model = "UNI";
    expected.dataset = "BloodMNIST";
    expected.size = 64;
    EXPECT_NO_THROW(check_provenance(split.database, split.queries, expected));
    auto wrong = expected;
    wrong.size = 128;
    EXPECT_THROW(check_provenance(split.database, split.queries, wrong), ProvenanceError);
    wrong = expected;
    wrong.model = "CONCH";
    EXPECT_THROW(check_provenance(split.database, split.queries, wrong), ProvenanceError);
    EXPECT_THROW(check_provenance(split.queries, split.database, expected), ProvenanceError);
}

TEST(Grid, RepeatedRunsGiveIdenticalCsv) {
    ExperimentManifest m;
    m.seed = 77;
    for (const auto* model : {"A", "B"}) {
        for (std::uint32_t size : {28u, 64u}) {
            m.cells.push_back(synthetic_cell(model, "Synthetic", size, 1.5));
        }
    }
    auto strip_timing = [](std::vector<CellResult> results) {
        for (auto& r : results) {
            r.report.timing = {};
        }
        return format_cells_csv(results);
    };
    const auto first = strip_timing(run_grid(m, 1).results);
    EXPECT_EQ(strip_timing(run_grid(m, 1).results), first);
    EXPECT_EQ(strip_timing(run_grid(m, 4).results), first);
    m.seed = 78;
    EXPECT_NE(strip_timing(run_grid(m, 1).results), first);
}

TEST(Averages, UnweightedMeanInPercent) {
    const std::vector cells{cell("UNI", "BreastMNIST", 28, 0.70), cell("UNI", "BreastMNIST", 64, 0.80)};
    const auto rows = aggregate_averages(cells, Group::TwoD);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_NEAR(rows[0].acc1, 75.0, 1e-9);
    EXPECT_NEAR(rows[0].map5, 37.5, 1e-9);
    EXPECT_EQ(rows[0].cells, 2u);
    EXPECT_THROW(aggregate_averages(cells, Group::ThreeD), ValidationError);
}

TEST(Averages, MatchesIndependentMeanPerModel) {
    std::vector<CellResult> cells;
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto* model : {"VGG19", "UNI", "CONCH"}) {
        for (const auto* dataset : {"BloodMNIST", "DermaMNIST", "AdrenalMNIST3D"}) {
            for (std::uint32_t size : {28u, 64u}) {
                cells.push_back(cell(model, dataset, size, u(rng), std::string(dataset).ends_with("3D")));
            }
        }
    }
    const auto rows = aggregate_averages(cells, Group::TwoD);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].model, "UNI");
    for (const auto& row : rows) {
        double sum = 0.0;
        int n = 0;
        for (const auto& c : cells) {
            if (c.model == row.model && !c.is_3d) {
                sum += c.report.acc_at_1;
                ++n;
            }
        }
        EXPECT_NEAR(row.acc1, 100.0 * sum / n, 1e-9);
        EXPECT_EQ(row.cells, 4u);
    }
    EXPECT_EQ(aggregate_averages(cells, Group::ThreeD)[0].cells, 2u);
}

TEST(Averages, RaggedGridNamesTheHole) {
    const std::vector cells{cell("UNI", "BloodMNIST", 28, 0.7), cell("UNI", "BloodMNIST", 64, 0.7),
                            cell("CONCH", "BloodMNIST", 28, 0.6)};
    try {
        aggregate_averages(cells, Group::TwoD);
        FAIL();
    } catch (const RaggedGridError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("CONCH"), std::string::npos) << msg;
        EXPECT_NE(msg.find("64"), std::string::npos) << msg;
    }
}

TEST(Ranges, ConstantModelIsMostRobust) {
    std::vector<CellResult> cells;
    const double flat[4] = {0.7, 0.7, 0.7, 0.7};
    const double wavy[4] = {0.6, 0.75, 0.7, 0.65};
    const std::uint32_t sizes[4] = {28, 64, 128, 224};
    for (int i = 0; i < 4; ++i) {
        cells.push_back(cell("Flat", "RetinaMNIST", sizes[i], flat[i]));
        cells.push_back(cell("Wavy", "RetinaMNIST", sizes[i], wavy[i]));
    }
    const auto table = robustness_ranges(cells);
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_EQ(table.rows[0].most_robust_model, "Flat");
    EXPECT_EQ(table.rows[0].robust_range, 0.0);
    EXPECT_EQ(table.rows[0].most_sensitive_model, "Wavy");
    EXPECT_NEAR(table.rows[0].sensitive_range, 15.0, 1e-9);
    EXPECT_EQ(table.overall.dataset, "All");
}

TEST(Ranges, TiesBreakAlphabetically) {
    std::vector<CellResult> cells;
    for (const auto* model : {"Zeta", "Alpha", "Mid"}) {
        const double spread = std::string(model) == "Mid" ? 0.01 : 0.03;
        cells.push_back(cell(model, "DermaMNIST", 28, 0.5));
        cells.push_back(cell(model, "DermaMNIST", 64, 0.5 + spread));
    }
    const auto table = robustness_ranges(cells);
    EXPECT_EQ(table.rows[0].most_robust_model, "Mid");
    EXPECT_EQ(table.rows[0].most_sensitive_model, "Alpha");
    EXPECT_NEAR(table.rows[0].sensitive_range, 3.0, 1e-9);
}

TEST(Ranges, OverallAveragesPerModelRanges) {
    std::vector<CellResult> cells;
    // A: 10 and 2 -> 6; B: 4 and 4 -> 4
    cells.push_back(cell("A", "BloodMNIST", 28, 0.50));
    cells.push_back(cell("A", "BloodMNIST", 64, 0.60));
    cells.push_back(cell("A", "PathMNIST", 28, 0.50));
    cells.push_back(cell("A", "PathMNIST", 64, 0.52));
    cells.push_back(cell("B", "BloodMNIST", 28, 0.50));
    cells.push_back(cell("B", "BloodMNIST", 64, 0.54));
    cells.push_back(cell("B", "PathMNIST", 28, 0.50));
    cells.push_back(cell("B", "PathMNIST", 64, 0.46));
    const auto table = robustness_ranges(cells);
    EXPECT_EQ(table.overall.most_robust_model, "B");
    EXPECT_NEAR(table.overall.robust_range, 4.0, 1e-9);
    EXPECT_EQ(table.overall.most_sensitive_model, "A");
    EXPECT_NEAR(table.overall.sensitive_range, 6.0, 1e-9);
    for (const auto& row : table.rows) {
        EXPECT_GE(row.robust_range, 0.0);
    }
}

TEST(Ranges, Errors) {
    EXPECT_THROW(robustness_ranges(std::vector{cell("A", "BloodMNIST", 28, 0.5)}), ValidationError);
    const std::vector ragged{cell("A", "BloodMNIST", 28, 0.5), cell("A", "BloodMNIST", 64, 0.5),
                             cell("B", "PathMNIST", 28, 0.5), cell("B", "PathMNIST", 64, 0.5)};
    EXPECT_THROW(robustness_ranges(ragged), RaggedGridError);
}

TEST(Grid, SyntheticCellTakes3dFlagFromDatasetName) {
    ExperimentManifest m;
    m.cells.push_back(synthetic_cell("Toy", "SynapseMNIST3D", 28, 2.0));
    m.cells.push_back(synthetic_cell("Toy", "BloodMNIST", 28, 2.0));
    const auto run = run_grid(m, 1);
    ASSERT_EQ(run.results.size(), 2u);
    EXPECT_TRUE(run.results[0].is_3d);
    EXPECT_FALSE(run.results[1].is_3d);
}
