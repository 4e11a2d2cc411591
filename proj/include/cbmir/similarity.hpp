#pragma once

#include "cbmir/errors.hpp"
#include "cbmir/feature_store.hpp"
#include "cbmir/types.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace cbmir {

namespace kernel {

/// Lane count of the canonical dot product. Element i is accumulated into
/// lane i % kLanes with a fused multiply-add in double precision; lanes are
/// then summed as ((l0+l4)+(l2+l6))+((l1+l5)+(l3+l7)). Every scoring path in
/// the library uses this order, so results do not depend on SIMD width,
/// batching or thread count.
inline constexpr std::size_t kLanes = 8;

double dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

/// out[i * ldo + j] = dot(queries + i * dim, rows + j * dim, dim), bitwise.
void dot_block(const float* queries, std::size_t query_count, const float* rows, std::size_t row_count,
               std::size_t dim, double* out, std::size_t ldo);

/// Instruction set the kernel was compiled for ("avx512", "avx2", "scalar").
const char* isa();

} // namespace kernel

namespace detail {

template <typename Derived>
auto contiguous(const Eigen::MatrixBase<Derived>& v) {
    EIGEN_STATIC_ASSERT_VECTOR_ONLY(Derived);
    using Scalar = typename Derived::Scalar;
    static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>,
                  "feature vectors must be float or double");
    return Vector<Scalar>(v.derived().reshaped());
}

template <typename Scalar>
double checked_norm(const Vector<Scalar>& v) {
    const double norm = std::sqrt(kernel::dot(v.data(), v.data(), static_cast<std::size_t>(v.size())));
    if (!(norm > 0.0)) {
        throw ZeroNormError("vector has zero Euclidean norm");
    }
    return norm;
}

} // namespace detail

/// Euclidean norm accumulated in double precision.
template <typename Derived>
double norm(const Eigen::MatrixBase<Derived>& v) {
    const auto c = detail::contiguous(v);
    return std::sqrt(kernel::dot(c.data(), c.data(), static_cast<std::size_t>(c.size())));
}

/// dot(a, b) / (|a| |b|) with 64-bit accumulation, rounded to 32 bits.
/// Throws DimensionMismatch or ZeroNormError.
template <typename DerivedA, typename DerivedB>
float cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    static_assert(std::is_same_v<typename DerivedA::Scalar, typename DerivedB::Scalar>);
    if (a.size() != b.size()) {
        throw DimensionMismatch("cosine_similarity: lengths " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    }
    const auto ca = detail::contiguous(a);
    const auto cb = detail::contiguous(b);
    const double na = detail::checked_norm(ca);
    const double nb = detail::checked_norm(cb);
    const double d = kernel::dot(ca.data(), cb.data(), static_cast<std::size_t>(ca.size()));
    return static_cast<float>(d / (na * nb));
}

/// Unit vector in the direction of v (computed in double, stored in v's scalar type).
template <typename Derived>
Vector<typename Derived::Scalar> normalize(const Eigen::MatrixBase<Derived>& v) {
    const auto c = detail::contiguous(v);
    const double n = detail::checked_norm(c);
    return (c.template cast<double>() / n).template cast<typename Derived::Scalar>();
}

struct Hit {
    std::size_t db_index = 0;
    float score = 0.0f;
    Label label = 0;

    bool operator==(const Hit&) const = default;
};

struct RankedResult {
    std::size_t query_index = 0;
    /// Best first: score descending, ties by ascending database item_id.
    std::vector<Hit> hits;
    /// k exceeded the database size and was reduced to it.
    bool k_clamped = false;

    bool operator==(const RankedResult&) const = default;
};

/// A database prepared for exact cosine scanning. Norms are computed once at
/// construction; the referenced FeatureSet must outlive the index.
class CosineIndex {
public:
    /// Throws ValidationError for an invalid or empty set and ZeroNormError
    /// naming the first zero-norm record.
    explicit CosineIndex(const FeatureSet& database);

    const FeatureSet& database() const { return *database_; }
    std::span<const double> norms() const { return norms_; }
    std::size_t size() const { return database_->size(); }
    std::uint32_t dim() const { return database_->dim(); }

private:
    const FeatureSet* database_;
    std::vector<double> norms_;
};

/// Top-k for one query vector. Throws DimensionMismatch, ZeroNormError, or
/// ValidationError for a non-finite query.
RankedResult top_k_search(std::span<const float> query, const CosineIndex& index, std::size_t k);

template <typename Derived>
RankedResult top_k_search(const Eigen::MatrixBase<Derived>& query, const CosineIndex& index, std::size_t k) {
    const Vector<float> q = detail::contiguous(query.template cast<float>());
    return top_k_search(std::span<const float>(q.data(), static_cast<std::size_t>(q.size())), index, k);
}

RankedResult top_k_search(const FeatureRecord& query, const FeatureSet& database, std::size_t k);

struct QueryError {
    std::size_t query_index;
    std::string message;
};

struct BatchResult {
    /// One entry per query, in query order. Failed queries have no hits.
    std::vector<RankedResult> results;
    std::vector<QueryError> errors;
    std::vector<std::string> warnings;
    double wall_seconds = 0.0;

    bool ok() const { return errors.empty(); }
};

/// Worker count from CBMIR_WORKERS when set to a positive integer, otherwise
/// the hardware concurrency.
unsigned default_workers();

/// Runs top_k_search for every query. Queries are partitioned across
/// `workers` threads (0 = default_workers()); the output is bitwise identical
/// for any worker count. Per-query failures are reported in `errors` without
/// affecting other queries. Throws DimensionMismatch when the sets' dims differ.
BatchResult batch_search(const FeatureSet& queries, const CosineIndex& index, std::size_t k,
                         unsigned workers = 0);

BatchResult batch_search(const FeatureSet& queries, const FeatureSet& database, std::size_t k,
                         unsigned workers = 0);

} // namespace cbmir
