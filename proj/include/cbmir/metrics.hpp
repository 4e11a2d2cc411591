#pragma once

#include "cbmir/feature_store.hpp"
#include "cbmir/similarity.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cbmir {

/// Ground truth for one query: its label and the labels of its ranked hits.
/// A retrieved item is relevant when its label equals the query label.
struct RelevanceJudgment {
    Label query_label = 0;
    std::vector<Label> retrieved_labels;
};

/// Average precision over the first k ranks, normalized by the number of
/// relevant items within those ranks; 0 when none is relevant.
/// Throws ValidationError for k == 0 or an empty retrieved list.
double ap_at_k(const RelevanceJudgment& judgment, std::size_t k);

/// Most frequent label; ties go to the label whose first occurrence ranks
/// highest. Throws ValidationError on an empty list.
Label majority_label(std::span<const Label> labels);

/// Means over queries. Each throws ValidationError on an empty list.
double map_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k);
double mmv_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k);
double acc_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k);

std::vector<RelevanceJudgment> make_judgments(const BatchResult& batch, const FeatureSet& queries);

struct Timing {
    double build_s = 0.0;      // database load + norm precomputation
    double test_load_s = 0.0;  // query set load
    double test_scan_s = 0.0;  // batch search
    double test_s = 0.0;       // load + scan + metric computation
};

struct KMetrics {
    std::size_t k = 0;
    double map = 0.0;
    double mmv = 0.0;
    double acc = 0.0;
};

struct MetricReport {
    double map_at_5 = 0.0;
    double mmv_at_5 = 0.0;
    double acc_at_1 = 0.0;
    double acc_at_3 = 0.0;
    double acc_at_5 = 0.0;
    std::vector<double> per_query_ap;  // at k = 5
    std::size_t query_count = 0;
    std::vector<KMetrics> by_k;        // every evaluated cutoff, ascending
    Timing timing;
    std::vector<std::string> warnings;

    const KMetrics* at(std::size_t k) const;
};

struct EvaluationOptions {
    /// Extra cutoffs; 1, 3 and 5 are always evaluated.
    std::vector<std::size_t> ks{1, 3, 5};
    unsigned workers = 0;
};

/// Retrieves every query against the database at the deepest requested
/// cutoff and scores the ranking with label-match relevance.
MetricReport evaluate(const FeatureSet& queries, const CosineIndex& index, const EvaluationOptions& options = {});
MetricReport evaluate(const FeatureSet& queries, const FeatureSet& database, const EvaluationOptions& options = {});

} // namespace cbmir
