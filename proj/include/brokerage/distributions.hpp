#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "brokerage/kernels.hpp"
#include "brokerage/rng.hpp"

namespace brokerage {

// Absolute tolerance for normalization and mean matching of closed-form densities.
inline constexpr double kDensityTolerance = 1e-12;

// Piecewise-constant probability density on [0,1]. Immutable; copies share storage.
class BoundedDensity {
public:
    // Breakpoints 0 = b_0 < ... < b_m = 1 and m non-negative heights integrating to 1.
    static BoundedDensity from_pieces(std::vector<double> breakpoints, std::vector<double> heights);
    static BoundedDensity uniform();
    // Uniform on [lo, hi] within [0,1].
    static BoundedDensity uniform_on(double lo, double hi);

    [[nodiscard]] std::span<const double> breakpoints() const { return data_->breakpoints; }
    [[nodiscard]] std::span<const double> heights() const { return data_->heights; }
    [[nodiscard]] std::size_t piece_count() const { return data_->heights.size(); }
    [[nodiscard]] double mean() const { return data_->mean; }
    [[nodiscard]] double density_bound() const { return data_->bound; }

    [[nodiscard]] double pdf(double x) const;
    [[nodiscard]] double cdf(double x) const;
    // Integral of the cdf over [0, x]; piecewise quadratic.
    [[nodiscard]] double cdf_integral(double x) const;
    [[nodiscard]] double quantile(double u) const;

    double sample(RngStream& rng) const;
    void sample_n(RngStream& rng, std::span<double> out) const;

    [[nodiscard]] kernels::PiecewiseView view() const {
        return {data_->breakpoints, data_->cdf_at, data_->heights};
    }

private:
    struct Data {
        std::vector<double> breakpoints;
        std::vector<double> heights;
        std::vector<double> cdf_at;
        std::vector<double> cdf_integral_at;
        double mean = 0.5;
        double bound = 1.0;
    };

    explicit BoundedDensity(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
    [[nodiscard]] std::size_t piece_of(double x) const;

    std::shared_ptr<const Data> data_;
};

// Laws of the two traders' valuations; both share the market value as mean.
struct ValuationPair {
    BoundedDensity left;
    BoundedDensity right;
    double common_mean = 0.5;

    // Throws DomainError when the means differ by more than kDensityTolerance.
    static ValuationPair make(BoundedDensity left, BoundedDensity right);

    [[nodiscard]] double density_bound() const;
};

ValuationPair make_uniform_pair();

// Two-block left law on [0,delta] u [1-delta,1] against a centred block of
// width 2*delta; the pair on which posting the mean earns only 1/(2(1-delta))
// of the first-best. delta in (0, 1/6).
ValuationPair make_tight_ratio_pair(double delta);

// Uniform density with the mass on [1/7, 3/14] and (3/14, 2/7] tilted by
// -sign*epsilon and +sign*epsilon. Mean 1/2 + sign*epsilon/196, bound 1+epsilon.
BoundedDensity make_lowerbound_density(int sign, double epsilon);
ValuationPair make_lowerbound_pair(int sign, double epsilon);

// Both traders uniform on [mu - h, mu + h] with h = min(half_width, mu, 1 - mu).
ValuationPair make_window_pair(double mu, double half_width);
// Left uniform on the window, right a symmetric step density on it (inner half
// carries `inner_mass` of the probability). Same support, same mean.
ValuationPair make_stepped_pair(double mu, double half_width, double inner_mass = 0.75);

// Two random piecewise-constant densities with `pieces` pieces each; the right one
// is affinely recentred so both means agree. Throws GenerationError if no
// feasible pair was found within the retry budget.
ValuationPair make_random_pair(RngStream& rng, std::size_t pieces, double density_cap);

}  // namespace brokerage
