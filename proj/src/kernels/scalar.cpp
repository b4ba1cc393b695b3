#include <algorithm>

#include "brokerage/kernels.hpp"

namespace brokerage::kernels::scalar {

Moments gft_moments(double price, std::span<const double> v, std::span<const double> w) {
    Moments m;
    m.n = v.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double lo = std::min(v[i], w[i]);
        const double hi = std::max(v[i], w[i]);
        const double g = (lo <= price && price <= hi) ? hi - lo : 0.0;
        m.sum += g;
        m.sum_sq += g * g;
    }
    return m;
}

Moments absdiff_moments(std::span<const double> v, std::span<const double> w) {
    Moments m;
    m.n = v.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double g = std::max(v[i], w[i]) - std::min(v[i], w[i]);
        m.sum += g;
        m.sum_sq += g * g;
    }
    return m;
}

double inverse_cdf_one(const PiecewiseView& dist, double u) {
    // Last piece whose starting cdf is <= u. Zero-height pieces share their cdf
    // value with the next piece and are therefore skipped.
    const std::size_t pieces = dist.heights.size();
    std::size_t j = 0;
    for (std::size_t k = 1; k < pieces; ++k) j += dist.cdf_at[k] <= u ? 1 : 0;
    const double lo = dist.breakpoints[j];
    const double hi = dist.breakpoints[j + 1];
    const double x = lo + (u - dist.cdf_at[j]) / dist.heights[j];
    return std::min(std::max(x, lo), hi);
}

void inverse_cdf(const PiecewiseView& dist, std::span<const double> u, std::span<double> out) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = inverse_cdf_one(dist, u[i]);
}

}  // namespace brokerage::kernels::scalar
