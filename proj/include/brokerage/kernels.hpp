#pragma once

// Data-parallel inner loops used by the Monte Carlo oracles and batch sampling.
// Every kernel has a scalar reference implementation and an AVX2 variant; the
// dispatching entry points pick one at runtime.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

namespace brokerage::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

// Best instruction set this binary and CPU support.
Isa detected_isa();
// ISA used by the dispatching entry points. BROKERAGE_SIMD=scalar forces the reference path.
Isa active_isa();

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    [[nodiscard]] double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    [[nodiscard]] double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    }
    [[nodiscard]] double standard_error() const {
        return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
    }
};

// Piecewise-constant density on [0,1] as flat arrays: breakpoints b_0..b_m,
// cdf values at the breakpoints, and m heights.
struct PiecewiseView {
    std::span<const double> breakpoints;
    std::span<const double> cdf_at;
    std::span<const double> heights;
};

// Sum and sum of squares of (max(v,w) - min(v,w)) * [min(v,w) <= price <= max(v,w)].
Moments gft_moments(double price, std::span<const double> v, std::span<const double> w);
// Sum and sum of squares of |v - w|.
Moments absdiff_moments(std::span<const double> v, std::span<const double> w);
// out[i] = inverse CDF of u[i]; u[i] in [0,1).
void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out);

namespace scalar {
Moments gft_moments(double price, std::span<const double> v, std::span<const double> w);
Moments absdiff_moments(std::span<const double> v, std::span<const double> w);
void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out);
double inverse_cdf_one(const PiecewiseView& dist, double u);
}  // namespace scalar

namespace avx2 {
// False when the library was built without AVX2 support or the CPU lacks it.
bool available();
Moments gft_moments(double price, std::span<const double> v, std::span<const double> w);
Moments absdiff_moments(std::span<const double> v, std::span<const double> w);
void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out);
}  // namespace avx2

}  // namespace brokerage::kernels
