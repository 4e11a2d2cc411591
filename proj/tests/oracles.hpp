#pragma once

// Reference implementations written without any library code paths.

#include "cbmir/feature_store.hpp"
#include "cbmir/metrics.hpp"
#include "cbmir/similarity.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace cbmir::oracle {

/// Scores every record with plain double sums and sorts them all.
inline std::vector<Hit> top_k(const Eigen::VectorXf& q, const FeatureSet& db, std::size_t k) {
    auto plain_dot = [](const float* a, const float* b, Eigen::Index n) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        }
        return s;
    };
    const auto n = q.size();
    const double qn = std::sqrt(plain_dot(q.data(), q.data(), n));
    std::vector<Hit> all;
    for (std::size_t r = 0; r < db.size(); ++r) {
        const Eigen::VectorXf row = db.vectors.row(static_cast<Eigen::Index>(r)).transpose();
        const double rn = std::sqrt(plain_dot(row.data(), row.data(), n));
        all.push_back({r, static_cast<float>(plain_dot(q.data(), row.data(), n) / (qn * rn)), db.labels[r]});
    }
    std::sort(all.begin(), all.end(), [&](const Hit& a, const Hit& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return db.item_ids[a.db_index] < db.item_ids[b.db_index];
    });
    all.resize(std::min(k, all.size()));
    return all;
}

/// Random small search instance with duplicated and power-of-two scaled rows,
/// so exact score ties occur.
struct SearchInstance {
    FeatureSet db;
    Eigen::VectorXf query;
    std::size_t k;
};

inline SearchInstance random_search_instance(std::mt19937_64& rng) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const auto dim = std::uniform_int_distribution<std::uint32_t>(1, 16)(rng);
    SearchInstance inst{testing::random_set(rng, n, dim, 4), {}, 0};
    for (std::size_t r = 1; r < n; r += 5) {
        inst.db.vectors.row(static_cast<Eigen::Index>(r)) = inst.db.vectors.row(static_cast<Eigen::Index>(r / 2)) * 2.0f;
    }
    for (std::size_t r = 0; r < n; ++r) {
        if (inst.db.vectors.row(static_cast<Eigen::Index>(r)).isZero()) {
            inst.db.vectors(static_cast<Eigen::Index>(r), 0) = 1.0f;
        }
    }
    inst.query = testing::random_set(rng, 1, dim, 4, Role::Query).vectors.row(0).transpose();
    if (inst.query.isZero()) {
        inst.query[0] = 1.0f;
    }
    inst.k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
    return inst;
}

inline double ap(const RelevanceJudgment& j, std::size_t k) {
    const std::size_t n = std::min(k, j.retrieved_labels.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (j.retrieved_labels[r] == j.query_label) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

inline bool mv_hit(const RelevanceJudgment& j, std::size_t k) {
    const std::size_t n = std::min(k, j.retrieved_labels.size());
    std::map<Label, std::pair<std::size_t, std::size_t>> stats;  // label -> (count, first rank)
    for (std::size_t r = 0; r < n; ++r) {
        auto it = stats.try_emplace(j.retrieved_labels[r], 0, r).first;
        ++it->second.first;
    }
    Label best = 0;
    std::size_t best_count = 0, best_rank = 0;
    for (const auto& [label, s] : stats) {
        if (s.first > best_count || (s.first == best_count && s.second < best_rank)) {
            best = label;
            best_count = s.first;
            best_rank = s.second;
        }
    }
    return best == j.query_label;
}

inline bool acc_hit(const RelevanceJudgment& j, std::size_t k) {
    const std::size_t n = std::min(k, j.retrieved_labels.size());
    return std::find(j.retrieved_labels.begin(), j.retrieved_labels.begin() + static_cast<std::ptrdiff_t>(n),
                     j.query_label) != j.retrieved_labels.begin() + static_cast<std::ptrdiff_t>(n);
}

template <typename F>
double mean(const std::vector<RelevanceJudgment>& js, F f) {
    double s = 0.0;
    for (const auto& j : js) {
        s += static_cast<double>(f(j));
    }
    return s / static_cast<double>(js.size());
}

inline double map(const std::vector<RelevanceJudgment>& js, std::size_t k) {
    return mean(js, [&](const auto& j) { return ap(j, k); });
}
inline double mmv(const std::vector<RelevanceJudgment>& js, std::size_t k) {
    return mean(js, [&](const auto& j) { return mv_hit(j, k); });
}
inline double acc(const std::vector<RelevanceJudgment>& js, std::size_t k) {
    return mean(js, [&](const auto& j) { return acc_hit(j, k); });
}

/// 1-30 queries, up to 10 classes, 1-5 retrieved labels each.
inline std::vector<RelevanceJudgment> random_judgments(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> queries(1, 30), length(1, 5);
    const Label classes = std::uniform_int_distribution<Label>(1, 10)(rng);
    std::uniform_int_distribution<Label> label(0, classes - 1);
    std::vector<RelevanceJudgment> out(queries(rng));
    for (auto& j : out) {
        j.query_label = label(rng);
        j.retrieved_labels.resize(length(rng));
        for (auto& l : j.retrieved_labels) {
            l = label(rng);
        }
    }
    return out;
}

/// Two records of dim 3: (id 0, label 1, (1, -2, 0.5)) and (id 5, label 0, (0.25, 3, -1)).
inline FeatureSet two_record_set() {
    ProvenanceMeta meta = testing::make_meta(2);
    meta.model_name = "m";
    meta.dataset_name = "d";
    FeatureRecord a{0, 1, FeatureVector(3)};
    a.vector << 1.0f, -2.0f, 0.5f;
    FeatureRecord b{5, 0, FeatureVector(3)};
    b.vector << 0.25f, 3.0f, -1.0f;
    return make_feature_set(meta, {a, b});
}

/// two_record_set() encoded by hand, little-endian field by field.
inline std::string two_record_bytes() {
    const std::string json = R"({"model_name":"m","dataset_name":"d","extra":{}})";
    std::string b;
    b += "FSET1";
    b += '\x01';                                   // version
    b += '\x00';                                   // role: database
    b += '\x00';                                   // is_3d
    b += std::string("\x02\0\0\0\0\0\0\0", 8);     // count
    b += std::string("\x03\0\0\0", 4);             // dim
    b += std::string("\x02\0\0\0", 4);             // num_classes
    b += std::string("\x1c\0\0\0", 4);             // image_size 28
    b += std::string(1, static_cast<char>(json.size())) + std::string(3, '\0');
    b += json;
    // record 0: id 0, label 1, (1, -2, 0.5)
    b += std::string(8, '\0');
    b += std::string("\x01\0\0\0", 4);
    b += std::string("\x00\x00\x80\x3f", 4);
    b += std::string("\x00\x00\x00\xc0", 4);
    b += std::string("\x00\x00\x00\x3f", 4);
    // record 1: id 5, label 0, (0.25, 3, -1)
    b += std::string("\x05\0\0\0\0\0\0\0", 8);
    b += std::string(4, '\0');
    b += std::string("\x00\x00\x80\x3e", 4);
    b += std::string("\x00\x00\x40\x40", 4);
    b += std::string("\x00\x00\x80\xbf", 4);
    return b;
}

/// Random set whose components are arbitrary finite float bit patterns.
inline FeatureSet random_bit_pattern_set(std::mt19937_64& rng) {
    const auto n = std::uniform_int_distribution<std::size_t>(1, 50)(rng);
    const auto dim = std::uniform_int_distribution<std::uint32_t>(1, 40)(rng);
    const auto classes = std::uniform_int_distribution<std::uint32_t>(1, 12)(rng);
    auto set = testing::random_set(rng, n, dim, classes, rng() % 2 ? Role::Query : Role::Database);
    set.meta.is_3d = rng() % 2;
    set.meta.image_size = std::uniform_int_distribution<std::uint32_t>(1, 512)(rng);
    set.meta.model_name = "model-" + std::to_string(rng() % 1000) + " \xc3\xa9\"q\"";
    set.meta.extra = {{"seed", std::to_string(rng())}, {"note", "tab\there"}};
    std::uint64_t next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
        next_id += 1 + rng() % 1000;
        set.item_ids[i] = next_id;
        for (std::uint32_t c = 0; c < dim; ++c) {
            float v;
            do {
                const auto bits = static_cast<std::uint32_t>(rng());
                std::memcpy(&v, &bits, 4);
            } while (!std::isfinite(v));
            set.vectors(static_cast<Eigen::Index>(i), c) = v;
        }
    }
    return set;
}

} // namespace cbmir::oracle
