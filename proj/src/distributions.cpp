#include "brokerage/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "brokerage/error.hpp"

namespace brokerage {

BoundedDensity BoundedDensity::from_pieces(std::vector<double> breakpoints, std::vector<double> heights) {
    if (breakpoints.size() < 2 || heights.size() + 1 != breakpoints.size()) {
        throw DomainError("density needs m >= 1 heights and m + 1 breakpoints");
    }
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
        throw DomainError("density breakpoints must start at 0 and end at 1");
    }
    for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
        if (!(breakpoints[k] < breakpoints[k + 1])) {
            throw DomainError("density breakpoints must be strictly increasing");
        }
    }
    for (double h : heights) {
        if (!std::isfinite(h) || h < 0.0) throw DomainError("density heights must be finite and >= 0");
    }

    auto d = std::make_shared<Data>();
    const std::size_t m = heights.size();
    d->cdf_at.assign(m + 1, 0.0);
    d->cdf_integral_at.assign(m + 1, 0.0);
    double mean = 0.0;
    double bound = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double a = breakpoints[k];
        const double b = breakpoints[k + 1];
        const double w = b - a;
        d->cdf_at[k + 1] = d->cdf_at[k] + heights[k] * w;
        d->cdf_integral_at[k + 1] = d->cdf_integral_at[k] + d->cdf_at[k] * w + 0.5 * heights[k] * w * w;
        mean += 0.5 * heights[k] * (b - a) * (b + a);
        bound = std::max(bound, heights[k]);
    }
    // tall narrow pieces lose bits in height * width
    if (std::abs(d->cdf_at[m] - 1.0) > kDensityTolerance * std::max(1.0, bound)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "density integrates to %.17g, not 1", d->cdf_at[m]);
        throw DomainError(buf);
    }
    d->breakpoints = std::move(breakpoints);
    d->heights = std::move(heights);
    d->mean = mean;
    d->bound = bound;
    return BoundedDensity(std::move(d));
}

BoundedDensity BoundedDensity::uniform() { return from_pieces({0.0, 1.0}, {1.0}); }

BoundedDensity BoundedDensity::uniform_on(double lo, double hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) throw DomainError("uniform support must satisfy 0 <= lo < hi <= 1");
    std::vector<double> b{0.0};
    std::vector<double> h;
    if (lo > 0.0) {
        b.push_back(lo);
        h.push_back(0.0);
    }
    b.push_back(hi);
    h.push_back(1.0 / (hi - lo));
    if (hi < 1.0) {
        b.push_back(1.0);
        h.push_back(0.0);
    }
    return from_pieces(std::move(b), std::move(h));
}

std::size_t BoundedDensity::piece_of(double x) const {
    const auto& b = data_->breakpoints;
    // piece k covers [b_k, b_{k+1}); x == 1 belongs to the last piece
    auto it = std::upper_bound(b.begin() + 1, b.end() - 1, x);
    return static_cast<std::size_t>(it - (b.begin() + 1));
}

double BoundedDensity::pdf(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) return 0.0;
    return data_->heights[piece_of(x)];
}

double BoundedDensity::cdf(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("cdf argument outside [0,1]");
    if (x == 1.0) return 1.0;
    const std::size_t k = piece_of(x);
    const double v = data_->cdf_at[k] + data_->heights[k] * (x - data_->breakpoints[k]);
    return std::clamp(v, 0.0, 1.0);
}

double BoundedDensity::cdf_integral(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("cdf integral argument outside [0,1]");
    const std::size_t k = piece_of(x);
    const double dx = x - data_->breakpoints[k];
    return data_->cdf_integral_at[k] + data_->cdf_at[k] * dx + 0.5 * data_->heights[k] * dx * dx;
}

double BoundedDensity::quantile(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("quantile level outside [0,1)");
    return kernels::scalar::inverse_cdf_one(view(), u);
}

double BoundedDensity::sample(RngStream& rng) const {
    return kernels::scalar::inverse_cdf_one(view(), rng.uniform());
}

void BoundedDensity::sample_n(RngStream& rng, std::span<double> out) const {
    for (auto& u : out) u = rng.uniform();
    kernels::inverse_cdf(view(), out, out);
}

ValuationPair ValuationPair::make(BoundedDensity left, BoundedDensity right) {
    if (std::abs(left.mean() - right.mean()) > kDensityTolerance) {
        throw DomainError("valuation laws must share their mean (got " + std::to_string(left.mean()) + " and " +
                          std::to_string(right.mean()) + ")");
    }
    const double mu = left.mean();
    return ValuationPair{std::move(left), std::move(right), mu};
}

double ValuationPair::density_bound() const { return std::max(left.density_bound(), right.density_bound()); }

ValuationPair make_uniform_pair() { return ValuationPair::make(BoundedDensity::uniform(), BoundedDensity::uniform()); }

ValuationPair make_tight_ratio_pair(double delta) {
    if (!(delta > 0.0 && delta < 1.0 / 6.0)) throw DomainError("delta must lie in (0, 1/6)");
    const double h = 1.0 / (2.0 * delta);
    auto left = BoundedDensity::from_pieces({0.0, delta, 1.0 - delta, 1.0}, {h, 0.0, h});
    auto right = BoundedDensity::from_pieces({0.0, 0.5 - delta, 0.5 + delta, 1.0}, {0.0, h, 0.0});
    // Both laws are symmetric about 1/2.
    return ValuationPair{std::move(left), std::move(right), 0.5};
}

BoundedDensity make_lowerbound_density(int sign, double epsilon) {
    if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0, 1]");
    const double s = sign * epsilon;
    return BoundedDensity::from_pieces({0.0, 1.0 / 7.0, 3.0 / 14.0, 2.0 / 7.0, 1.0}, {1.0, 1.0 - s, 1.0 + s, 1.0});
}

ValuationPair make_lowerbound_pair(int sign, double epsilon) {
    auto d = make_lowerbound_density(sign, epsilon);
    return ValuationPair::make(d, d);
}

namespace {

double clamp_half_width(double mu, double half_width) {
    if (!(mu > 0.0 && mu < 1.0)) throw DomainError("market value must lie in (0,1)");
    if (!(half_width > 0.0)) throw DomainError("half width must be positive");
    return std::min({half_width, mu, 1.0 - mu});
}

}  // namespace

ValuationPair make_window_pair(double mu, double half_width) {
    const double h = clamp_half_width(mu, half_width);
    auto d = BoundedDensity::uniform_on(mu - h, mu + h);
    return ValuationPair::make(d, d);
}

ValuationPair make_stepped_pair(double mu, double half_width, double inner_mass) {
    if (!(inner_mass > 0.0 && inner_mass < 1.0)) throw DomainError("inner mass must lie in (0,1)");
    const double h = clamp_half_width(mu, half_width);
    const double lo = mu - h;
    const double hi = mu + h;
    const double q = h / 2.0;
    std::vector<double> b{0.0};
    std::vector<double> heights;
    if (lo > 0.0) {
        b.push_back(lo);
        heights.push_back(0.0);
    }
    const double outer = (1.0 - inner_mass) / (2.0 * q);
    const double inner = inner_mass / (2.0 * q);
    for (double edge : {mu - q, mu, mu + q}) b.push_back(edge);
    for (double height : {outer, inner, inner}) heights.push_back(height);
    b.push_back(hi);
    heights.push_back(outer);
    if (hi < 1.0) {
        b.push_back(1.0);
        heights.push_back(0.0);
    }
    auto right = BoundedDensity::from_pieces(std::move(b), std::move(heights));
    return ValuationPair::make(BoundedDensity::uniform_on(lo, hi), std::move(right));
}

namespace {

constexpr int kRandomPairAttempts = 64;
constexpr double kMinPieceWidth = 1e-6;
// recentring snaps support edges this close to 0 or 1 onto the boundary
constexpr double kEdgeSnap = 1e-14;

std::optional<BoundedDensity> random_density(RngStream& rng, std::size_t pieces, double density_cap) {
    std::vector<double> b{0.0};
    for (std::size_t k = 1; k < pieces; ++k) b.push_back(rng.uniform());
    b.push_back(1.0);
    std::sort(b.begin(), b.end());
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        if (b[k + 1] - b[k] < kMinPieceWidth) return std::nullopt;
    }
    std::vector<double> h(pieces);
    double mass = 0.0;
    for (std::size_t k = 0; k < pieces; ++k) {
        // occasional empty pieces give gaps in the support
        h[k] = (pieces > 1 && rng.uniform() < 0.2) ? 0.0 : 0.05 + rng.uniform();
        mass += h[k] * (b[k + 1] - b[k]);
    }
    if (mass <= 0.0) return std::nullopt;
    for (auto& v : h) v /= mass;
    if (*std::max_element(h.begin(), h.end()) > density_cap) return std::nullopt;
    try {
        return BoundedDensity::from_pieces(std::move(b), std::move(h));
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

// Maps `d` affinely onto [a, a + s] so that its mean becomes `target`.
std::optional<BoundedDensity> recenter(const BoundedDensity& d, double target, double density_cap) {
    const double m = d.mean();
    double s = std::min({1.0, target / m, (1.0 - target) / (1.0 - m)});
    if (!(s > 0.0)) return std::nullopt;
    double a = target - s * m;
    if (a < kEdgeSnap) a = 0.0;
    if (d.density_bound() / s > density_cap) return std::nullopt;

    std::vector<double> b{0.0};
    std::vector<double> h;
    if (a > 0.0) {
        b.push_back(a);
        h.push_back(0.0);
    }
    const auto src_b = d.breakpoints();
    const auto src_h = d.heights();
    for (std::size_t k = 0; k < src_h.size(); ++k) {
        b.push_back(k + 1 == src_h.size() ? a + s : a + s * src_b[k + 1]);
        h.push_back(src_h[k] / s);
    }
    if (b.back() > 1.0 - kEdgeSnap) {
        b.back() = 1.0;
    } else {
        b.push_back(1.0);
        h.push_back(0.0);
    }
    // renormalize the clipped pieces
    double mass = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) mass += h[k] * (b[k + 1] - b[k]);
    for (auto& v : h) v /= mass;
    try {
        auto out = BoundedDensity::from_pieces(std::move(b), std::move(h));
        if (out.density_bound() > density_cap) return std::nullopt;
        return out;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

}  // namespace

ValuationPair make_random_pair(RngStream& rng, std::size_t pieces, double density_cap) {
    if (pieces == 0) throw DomainError("random densities need at least one piece");
    if (!(density_cap > 1.0)) throw DomainError("density cap must exceed 1");
    for (int attempt = 0; attempt < kRandomPairAttempts; ++attempt) {
        auto left = random_density(rng, pieces, density_cap);
        if (!left) continue;
        auto right = random_density(rng, pieces, density_cap);
        if (!right) continue;
        auto moved = recenter(*right, left->mean(), density_cap);
        if (!moved) continue;
        if (std::abs(moved->mean() - left->mean()) > kDensityTolerance) continue;
        return ValuationPair::make(std::move(*left), std::move(*moved));
    }
    throw GenerationError("could not generate a mean-matched random pair");
}

}  // namespace brokerage
