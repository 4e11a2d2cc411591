#include "cbmir/similarity.hpp"

#include <cmath>

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

namespace cbmir::kernel {
namespace {

constexpr std::size_t L = kLanes;

inline double reduce(const double* s) {
    return ((s[0] + s[4]) + (s[2] + s[6])) + ((s[1] + s[5]) + (s[3] + s[7]));
}

// Lanes for the last n % 8 elements, shared by every path.
template <typename T>
inline void tail(const T* a, const T* b, std::size_t from, std::size_t n, double* lanes) {
    for (std::size_t i = from; i < n; ++i) {
        lanes[i - from] = std::fma(static_cast<double>(a[i]), static_cast<double>(b[i]), lanes[i - from]);
    }
}

#if defined(__AVX512F__)

inline __m512d load8(const float* p) { return _mm512_cvtps_pd(_mm256_loadu_ps(p)); }
inline __m512d load8(const double* p) { return _mm512_loadu_pd(p); }

// MR x NR pairs at once; each (a, b) accumulator sees the same operation
// sequence as a lone dot(a, b).
template <std::size_t MR, std::size_t NR, typename T>
void tile(const T* q, const T* r, std::size_t dim, double* out, std::size_t ldo) {
    __m512d acc[MR][NR];
    for (std::size_t a = 0; a < MR; ++a) {
        for (std::size_t b = 0; b < NR; ++b) {
            acc[a][b] = _mm512_setzero_pd();
        }
    }
    const std::size_t body = dim - dim % L;
    for (std::size_t i = 0; i < body; i += L) {
        __m512d rv[NR];
        for (std::size_t b = 0; b < NR; ++b) {
            rv[b] = load8(r + b * dim + i);
        }
        for (std::size_t a = 0; a < MR; ++a) {
            const __m512d qv = load8(q + a * dim + i);
            for (std::size_t b = 0; b < NR; ++b) {
                acc[a][b] = _mm512_fmadd_pd(qv, rv[b], acc[a][b]);
            }
        }
    }
    for (std::size_t a = 0; a < MR; ++a) {
        for (std::size_t b = 0; b < NR; ++b) {
            alignas(64) double lanes[L];
            _mm512_store_pd(lanes, acc[a][b]);
            tail(q + a * dim, r + b * dim, body, dim, lanes);
            out[a * ldo + b] = reduce(lanes);
        }
    }
}

#elif defined(__AVX2__) && defined(__FMA__)

struct Pair {
    __m256d lo, hi;
};

inline Pair load8(const float* p) {
    const __m256 v = _mm256_loadu_ps(p);
    return {_mm256_cvtps_pd(_mm256_castps256_ps128(v)), _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1))};
}
inline Pair load8(const double* p) { return {_mm256_loadu_pd(p), _mm256_loadu_pd(p + 4)}; }

template <std::size_t MR, std::size_t NR, typename T>
void tile(const T* q, const T* r, std::size_t dim, double* out, std::size_t ldo) {
    Pair acc[MR][NR];
    for (std::size_t a = 0; a < MR; ++a) {
        for (std::size_t b = 0; b < NR; ++b) {
            acc[a][b] = {_mm256_setzero_pd(), _mm256_setzero_pd()};
        }
    }
    const std::size_t body = dim - dim % L;
    for (std::size_t i = 0; i < body; i += L) {
        Pair rv[NR];
        for (std::size_t b = 0; b < NR; ++b) {
            rv[b] = load8(r + b * dim + i);
        }
        for (std::size_t a = 0; a < MR; ++a) {
            const Pair qv = load8(q + a * dim + i);
            for (std::size_t b = 0; b < NR; ++b) {
                acc[a][b].lo = _mm256_fmadd_pd(qv.lo, rv[b].lo, acc[a][b].lo);
                acc[a][b].hi = _mm256_fmadd_pd(qv.hi, rv[b].hi, acc[a][b].hi);
            }
        }
    }
    for (std::size_t a = 0; a < MR; ++a) {
        for (std::size_t b = 0; b < NR; ++b) {
            alignas(32) double lanes[L];
            _mm256_store_pd(lanes, acc[a][b].lo);
            _mm256_store_pd(lanes + 4, acc[a][b].hi);
            tail(q + a * dim, r + b * dim, body, dim, lanes);
            out[a * ldo + b] = reduce(lanes);
        }
    }
}

#else

template <std::size_t MR, std::size_t NR, typename T>
void tile(const T* q, const T* r, std::size_t dim, double* out, std::size_t ldo) {
    for (std::size_t a = 0; a < MR; ++a) {
        for (std::size_t b = 0; b < NR; ++b) {
            double lanes[L] = {};
            tail(q + a * dim, r + b * dim, 0, dim, lanes);
            out[a * ldo + b] = reduce(lanes);
        }
    }
}

#endif

constexpr std::size_t kRowsPerTile = 4;
constexpr std::size_t kQueriesPerTile = 4;

template <std::size_t MR>
void row_strip(const float* q, const float* rows, std::size_t row_count, std::size_t dim, double* out,
               std::size_t ldo) {
    std::size_t j = 0;
    for (; j + kRowsPerTile <= row_count; j += kRowsPerTile) {
        tile<MR, kRowsPerTile>(q, rows + j * dim, dim, out + j, ldo);
    }
    switch (row_count - j) {
    case 3: tile<MR, 3>(q, rows + j * dim, dim, out + j, ldo); break;
    case 2: tile<MR, 2>(q, rows + j * dim, dim, out + j, ldo); break;
    case 1: tile<MR, 1>(q, rows + j * dim, dim, out + j, ldo); break;
    default: break;
    }
}

} // namespace

double dot(const float* a, const float* b, std::size_t n) {
    double out = 0.0;
    tile<1, 1>(a, b, n, &out, 1);
    return out;
}

double dot(const double* a, const double* b, std::size_t n) {
    double out = 0.0;
    tile<1, 1>(a, b, n, &out, 1);
    return out;
}

void dot_block(const float* queries, std::size_t query_count, const float* rows, std::size_t row_count,
               std::size_t dim, double* out, std::size_t ldo) {
    std::size_t i = 0;
    for (; i + kQueriesPerTile <= query_count; i += kQueriesPerTile) {
        row_strip<kQueriesPerTile>(queries + i * dim, rows, row_count, dim, out + i * ldo, ldo);
    }
    switch (query_count - i) {
    case 3: row_strip<3>(queries + i * dim, rows, row_count, dim, out + i * ldo, ldo); break;
    case 2: row_strip<2>(queries + i * dim, rows, row_count, dim, out + i * ldo, ldo); break;
    case 1: row_strip<1>(queries + i * dim, rows, row_count, dim, out + i * ldo, ldo); break;
    default: break;
    }
}

const char* isa() {
#if defined(__AVX512F__)
    return "avx512";
#elif defined(__AVX2__) && defined(__FMA__)
    return "avx2";
#else
    return "scalar";
#endif
}

} // namespace cbmir::kernel
