#include "cbmir/similarity.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace cbmir {
namespace {

// Bounded best-first list under the (score desc, db_index asc) total order.
// Database item_ids are strictly increasing, so db_index order is item_id order.
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

    void offer(float score, std::size_t index) {
        if (items_.size() == k_) {
            const auto& worst = items_.back();
            if (score < worst.score || (score == worst.score && index > worst.index)) {
                return;
            }
            items_.pop_back();
        }
        const Entry e{score, index};
        auto pos = std::upper_bound(items_.begin(), items_.end(), e, [](const Entry& x, const Entry& y) {
            return x.score > y.score || (x.score == y.score && x.index < y.index);
        });
        items_.insert(pos, e);
    }

    std::vector<Hit> hits(const FeatureSet& db) const {
        std::vector<Hit> out;
        out.reserve(items_.size());
        for (const auto& e : items_) {
            out.push_back({e.index, e.score, db.labels[e.index]});
        }
        return out;
    }

private:
    struct Entry {
        float score;
        std::size_t index;
    };
    std::size_t k_;
    std::vector<Entry> items_;
};

constexpr std::size_t kQueryBlock = 64;
constexpr std::size_t kTileBytes = 512 * 1024;

std::size_t rows_per_tile(std::size_t dim) {
    const std::size_t rows = kTileBytes / (std::max<std::size_t>(dim, 1) * sizeof(float));
    return std::max<std::size_t>(4, rows - rows % 4);
}

struct Scratch {
    std::vector<double> scores;
    std::vector<float> block;
};

// Scans the whole index for `count` contiguous query vectors.
void scan(const CosineIndex& index, const float* queries, const double* query_norms, std::size_t count,
          std::vector<TopK>& out, Scratch& scratch) {
    const auto& db = index.database();
    const std::size_t dim = db.dim();
    const std::size_t n = db.size();
    const std::size_t tile = std::min(rows_per_tile(dim), n);
    const auto norms = index.norms();
    scratch.scores.resize(count * tile);
    for (std::size_t first = 0; first < n; first += tile) {
        const std::size_t rows = std::min(tile, n - first);
        kernel::dot_block(queries, count, db.vectors.data() + first * dim, rows, dim, scratch.scores.data(),
                          tile);
        for (std::size_t a = 0; a < count; ++a) {
            const double* s = scratch.scores.data() + a * tile;
            const double qn = query_norms[a];
            for (std::size_t b = 0; b < rows; ++b) {
                out[a].offer(static_cast<float>(s[b] / (qn * norms[first + b])), first + b);
            }
        }
    }
}

enum class QueryStatus { Ok, NonFinite, ZeroNorm };

struct QueryCheck {
    QueryStatus status = QueryStatus::Ok;
    double norm = 0.0;
    std::string message;
};

QueryCheck check_query(std::span<const float> q) {
    for (std::size_t c = 0; c < q.size(); ++c) {
        if (!std::isfinite(q[c])) {
            return {QueryStatus::NonFinite, 0.0, "component " + std::to_string(c) + " is not finite"};
        }
    }
    const double norm = std::sqrt(kernel::dot(q.data(), q.data(), q.size()));
    if (!(norm > 0.0)) {
        return {QueryStatus::ZeroNorm, 0.0, "query has zero Euclidean norm"};
    }
    return {QueryStatus::Ok, norm, {}};
}

std::string clamp_warning(std::size_t k, std::size_t n) {
    return "k=" + std::to_string(k) + " exceeds database size " + std::to_string(n) + "; clamped to " +
           std::to_string(n);
}

} // namespace

CosineIndex::CosineIndex(const FeatureSet& database) : database_(&database) {
    if (auto violations = validate_feature_set(database); !violations.empty()) {
        throw ValidationError("database set is invalid: " + violations.front().message);
    }
    const std::size_t dim = database.dim();
    norms_.resize(database.size());
    for (std::size_t i = 0; i < database.size(); ++i) {
        const float* row = database.vectors.data() + i * dim;
        norms_[i] = std::sqrt(kernel::dot(row, row, dim));
        if (!(norms_[i] > 0.0)) {
            throw ZeroNormError("database record " + std::to_string(i) + " (item_id " +
                                std::to_string(database.item_ids[i]) + ") has zero norm");
        }
    }
}

RankedResult top_k_search(std::span<const float> query, const CosineIndex& index, std::size_t k) {
    if (query.size() != index.dim()) {
        throw DimensionMismatch("query has length " + std::to_string(query.size()) + ", database dim is " +
                                std::to_string(index.dim()));
    }
    if (k == 0) {
        throw ValidationError("k must be positive");
    }
    const auto check = check_query(query);
    if (check.status == QueryStatus::ZeroNorm) {
        throw ZeroNormError(check.message);
    }
    if (check.status == QueryStatus::NonFinite) {
        throw ValidationError(check.message);
    }
    const double qn = check.norm;
    RankedResult result;
    result.k_clamped = k > index.size();
    std::vector<TopK> best(1, TopK(std::min(k, index.size())));
    Scratch scratch;
    scan(index, query.data(), &qn, 1, best, scratch);
    result.hits = best.front().hits(index.database());
    return result;
}

RankedResult top_k_search(const FeatureRecord& query, const FeatureSet& database, std::size_t k) {
    const CosineIndex index(database);
    return top_k_search(query.vector, index, k);
}

unsigned default_workers() {
    if (const char* env = std::getenv("CBMIR_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

BatchResult batch_search(const FeatureSet& queries, const CosineIndex& index, std::size_t k, unsigned workers) {
    if (queries.dim() != index.dim()) {
        throw DimensionMismatch("query dim " + std::to_string(queries.dim()) + " != database dim " +
                                std::to_string(index.dim()));
    }
    if (k == 0) {
        throw ValidationError("k must be positive");
    }
    const auto start = std::chrono::steady_clock::now();
    const std::size_t dim = queries.dim();
    const std::size_t nq = queries.size();
    const std::size_t depth = std::min(k, index.size());

    BatchResult batch;
    batch.results.resize(nq);
    if (k > index.size()) {
        batch.warnings.push_back(clamp_warning(k, index.size()));
    }

    std::vector<double> qnorms(nq, 0.0);
    std::vector<std::size_t> valid;
    valid.reserve(nq);
    for (std::size_t i = 0; i < nq; ++i) {
        batch.results[i].query_index = i;
        batch.results[i].k_clamped = k > index.size();
        const std::span<const float> q(queries.vectors.data() + i * dim, dim);
        const auto check = check_query(q);
        if (check.status != QueryStatus::Ok) {
            batch.errors.push_back({i, "query " + std::to_string(i) + ": " + check.message});
        } else {
            qnorms[i] = check.norm;
            valid.push_back(i);
        }
    }

    const std::size_t blocks = (valid.size() + kQueryBlock - 1) / kQueryBlock;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        Scratch scratch;
        std::vector<double> bnorms;
        for (std::size_t b = next++; b < blocks; b = next++) {
            const std::size_t first = b * kQueryBlock;
            const std::size_t count = std::min(kQueryBlock, valid.size() - first);
            scratch.block.resize(count * dim);
            bnorms.resize(count);
            for (std::size_t j = 0; j < count; ++j) {
                const std::size_t qi = valid[first + j];
                std::copy_n(queries.vectors.data() + qi * dim, dim, scratch.block.data() + j * dim);
                bnorms[j] = qnorms[qi];
            }
            std::vector<TopK> best(count, TopK(depth));
            scan(index, scratch.block.data(), bnorms.data(), count, best, scratch);
            for (std::size_t j = 0; j < count; ++j) {
                batch.results[valid[first + j]].hits = best[j].hits(index.database());
            }
        }
    };

    const unsigned n_workers =
        static_cast<unsigned>(std::min<std::size_t>(workers == 0 ? default_workers() : workers,
                                                    std::max<std::size_t>(blocks, 1)));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
    }

    batch.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return batch;
}

BatchResult batch_search(const FeatureSet& queries, const FeatureSet& database, std::size_t k, unsigned workers) {
    const CosineIndex index(database);
    return batch_search(queries, index, k, workers);
}

} // namespace cbmir
