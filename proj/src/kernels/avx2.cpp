#include "brokerage/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__)
#include <immintrin.h>
#define BROKERAGE_HAVE_AVX2 1
#else
#define BROKERAGE_HAVE_AVX2 0
#endif

namespace brokerage::kernels::avx2 {

#if BROKERAGE_HAVE_AVX2

namespace {

double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

bool available() { return __builtin_cpu_supports("avx2"); }

Moments gft_moments(double price, std::span<const double> v, std::span<const double> w) {
    const std::size_t n = v.size();
    const std::size_t body = n & ~std::size_t{3};
    const __m256d p = _mm256_set1_pd(price);
    __m256d s = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d a = _mm256_loadu_pd(v.data() + i);
        const __m256d b = _mm256_loadu_pd(w.data() + i);
        const __m256d lo = _mm256_min_pd(a, b);
        const __m256d hi = _mm256_max_pd(a, b);
        const __m256d trade = _mm256_and_pd(_mm256_cmp_pd(lo, p, _CMP_LE_OQ), _mm256_cmp_pd(p, hi, _CMP_LE_OQ));
        const __m256d g = _mm256_and_pd(trade, _mm256_sub_pd(hi, lo));
        s = _mm256_add_pd(s, g);
        s2 = _mm256_add_pd(s2, _mm256_mul_pd(g, g));
    }
    Moments tail = scalar::gft_moments(price, v.subspan(body), w.subspan(body));
    return {hsum(s) + tail.sum, hsum(s2) + tail.sum_sq, n};
}

Moments absdiff_moments(std::span<const double> v, std::span<const double> w) {
    const std::size_t n = v.size();
    const std::size_t body = n & ~std::size_t{3};
    __m256d s = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d a = _mm256_loadu_pd(v.data() + i);
        const __m256d b = _mm256_loadu_pd(w.data() + i);
        const __m256d g = _mm256_sub_pd(_mm256_max_pd(a, b), _mm256_min_pd(a, b));
        s = _mm256_add_pd(s, g);
        s2 = _mm256_add_pd(s2, _mm256_mul_pd(g, g));
    }
    Moments tail = scalar::absdiff_moments(v.subspan(body), w.subspan(body));
    return {hsum(s) + tail.sum, hsum(s2) + tail.sum_sq, n};
}

void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out) {
    const std::size_t n = u.size();
    const std::size_t body = n & ~std::size_t{3};
    const std::size_t pieces = dist.heights.size();
    const double* bp = dist.breakpoints.data();
    const double* cdf = dist.cdf_at.data();
    const double* h = dist.heights.data();
    const __m256i one = _mm256_set1_epi64x(1);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d uu = _mm256_loadu_pd(u.data() + i);
        __m256i idx = _mm256_setzero_si256();
        for (std::size_t k = 1; k < pieces; ++k) {
            const __m256d le = _mm256_cmp_pd(_mm256_set1_pd(cdf[k]), uu, _CMP_LE_OQ);
            // all-ones lanes are -1 as integers
            idx = _mm256_sub_epi64(idx, _mm256_castpd_si256(le));
        }
        const __m256d lo = _mm256_i64gather_pd(bp, idx, 8);
        const __m256d hi = _mm256_i64gather_pd(bp, _mm256_add_epi64(idx, one), 8);
        const __m256d c = _mm256_i64gather_pd(cdf, idx, 8);
        const __m256d hh = _mm256_i64gather_pd(h, idx, 8);
        const __m256d x = _mm256_add_pd(lo, _mm256_div_pd(_mm256_sub_pd(uu, c), hh));
        _mm256_storeu_pd(out.data() + i, _mm256_min_pd(_mm256_max_pd(x, lo), hi));
    }
    scalar::inverse_cdf(dist, u.subspan(body), out.subspan(body));
}

#else

bool available() { return false; }

Moments gft_moments(double price, std::span<const double> v, std::span<const double> w) {
    return scalar::gft_moments(price, v, w);
}

Moments absdiff_moments(std::span<const double> v, std::span<const double> w) {
    return scalar::absdiff_moments(v, w);
}

void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out) {
    scalar::inverse_cdf(dist, u, out);
}

#endif

}  // namespace brokerage::kernels::avx2
