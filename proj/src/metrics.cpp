#include "cbmir/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

namespace cbmir {
namespace {

void require_cutoff(std::size_t k) {
    if (k == 0) {
        throw ValidationError("k must be positive");
    }
}

void require_nonempty(std::span<const RelevanceJudgment> judgments) {
    if (judgments.empty()) {
        throw ValidationError("metric over an empty judgment list");
    }
}

std::span<const Label> top(const RelevanceJudgment& j, std::size_t k) {
    if (j.retrieved_labels.empty()) {
        throw ValidationError("judgment has no retrieved labels");
    }
    return std::span<const Label>(j.retrieved_labels).first(std::min(k, j.retrieved_labels.size()));
}

template <typename PerQuery>
double mean(std::span<const RelevanceJudgment> judgments, PerQuery&& per_query) {
    require_nonempty(judgments);
    double sum = 0.0;
    for (const auto& j : judgments) {
        sum += per_query(j);
    }
    return sum / static_cast<double>(judgments.size());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

double ap_at_k(const RelevanceJudgment& judgment, std::size_t k) {
    require_cutoff(k);
    const auto labels = top(judgment, k);
    std::size_t relevant = 0;
    double sum = 0.0;
    for (std::size_t rank = 1; rank <= labels.size(); ++rank) {
        if (labels[rank - 1] == judgment.query_label) {
            ++relevant;
            sum += static_cast<double>(relevant) / static_cast<double>(rank);
        }
    }
    return relevant == 0 ? 0.0 : sum / static_cast<double>(relevant);
}

Label majority_label(std::span<const Label> labels) {
    if (labels.empty()) {
        throw ValidationError("majority vote over no labels");
    }
    // Scanning in rank order and replacing only on a strictly larger count
    // keeps the earliest-occurring label among tied classes.
    std::map<Label, std::size_t> counts;
    for (Label l : labels) {
        ++counts[l];
    }
    Label best = labels.front();
    std::size_t best_count = 0;
    for (Label l : labels) {
        if (counts[l] > best_count) {
            best = l;
            best_count = counts[l];
        }
    }
    return best;
}

double map_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k) {
    require_cutoff(k);
    return mean(judgments, [k](const RelevanceJudgment& j) { return ap_at_k(j, k); });
}

double mmv_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k) {
    require_cutoff(k);
    return mean(judgments, [k](const RelevanceJudgment& j) {
        return majority_label(top(j, k)) == j.query_label ? 1.0 : 0.0;
    });
}

double acc_at_k(std::span<const RelevanceJudgment> judgments, std::size_t k) {
    require_cutoff(k);
    return mean(judgments, [k](const RelevanceJudgment& j) {
        const auto labels = top(j, k);
        return std::find(labels.begin(), labels.end(), j.query_label) != labels.end() ? 1.0 : 0.0;
    });
}

std::vector<RelevanceJudgment> make_judgments(const BatchResult& batch, const FeatureSet& queries) {
    std::vector<RelevanceJudgment> out;
    out.reserve(batch.results.size());
    for (const auto& r : batch.results) {
        RelevanceJudgment j;
        j.query_label = queries.labels.at(r.query_index);
        j.retrieved_labels.reserve(r.hits.size());
        for (const auto& h : r.hits) {
            j.retrieved_labels.push_back(h.label);
        }
        out.push_back(std::move(j));
    }
    return out;
}

const KMetrics* MetricReport::at(std::size_t k) const {
    for (const auto& m : by_k) {
        if (m.k == k) {
            return &m;
        }
    }
    return nullptr;
}

MetricReport evaluate(const FeatureSet& queries, const CosineIndex& index, const EvaluationOptions& options) {
    const auto& database = index.database();
    if (auto violations = validate_feature_set(queries); !violations.empty()) {
        throw ValidationError("query set is invalid: " + violations.front().message);
    }
    if (queries.meta.num_classes != database.meta.num_classes) {
        throw ValidationError("query num_classes " + std::to_string(queries.meta.num_classes) +
                              " differs from database num_classes " +
                              std::to_string(database.meta.num_classes));
    }
    std::set<std::size_t> cutoffs{1, 3, 5};
    for (std::size_t k : options.ks) {
        require_cutoff(k);
        cutoffs.insert(k);
    }

    MetricReport report;
    const auto start = std::chrono::steady_clock::now();
    const auto batch = batch_search(queries, index, *cutoffs.rbegin(), options.workers);
    if (!batch.ok()) {
        std::string message = std::to_string(batch.errors.size()) + " queries failed: ";
        for (std::size_t i = 0; i < std::min<std::size_t>(batch.errors.size(), 5); ++i) {
            message += (i ? "; " : "") + batch.errors[i].message;
        }
        throw ValidationError(message);
    }
    report.warnings = batch.warnings;
    report.timing.test_scan_s = batch.wall_seconds;

    const auto judgments = make_judgments(batch, queries);
    report.query_count = judgments.size();
    for (std::size_t k : cutoffs) {
        report.by_k.push_back({k, map_at_k(judgments, k), mmv_at_k(judgments, k), acc_at_k(judgments, k)});
    }
    report.map_at_5 = report.at(5)->map;
    report.mmv_at_5 = report.at(5)->mmv;
    report.acc_at_1 = report.at(1)->acc;
    report.acc_at_3 = report.at(3)->acc;
    report.acc_at_5 = report.at(5)->acc;
    report.per_query_ap.reserve(judgments.size());
    for (const auto& j : judgments) {
        report.per_query_ap.push_back(ap_at_k(j, 5));
    }
    report.timing.test_s = seconds_since(start);
    return report;
}

MetricReport evaluate(const FeatureSet& queries, const FeatureSet& database, const EvaluationOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const CosineIndex index(database);
    const double build = seconds_since(start);
    auto report = evaluate(queries, index, options);
    report.timing.build_s = build;
    return report;
}

} // namespace cbmir
