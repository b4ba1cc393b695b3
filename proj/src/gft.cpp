#include "brokerage/gft.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>
#include <vector>

#include "brokerage/error.hpp"

namespace brokerage {

namespace {

void check_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(std::string(what) + " outside [0,1]");
}

// int_0^1 F G over the merged breakpoints; F G is quadratic on each merged
// piece, so Simpson's rule is exact there.
double integral_of_cdf_product(const BoundedDensity& f, const BoundedDensity& g) {
    std::vector<double> grid;
    grid.reserve(f.breakpoints().size() + g.breakpoints().size());
    std::merge(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(), g.breakpoints().end(),
               std::back_inserter(grid));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = grid[k];
        const double b = grid[k + 1];
        const double m = 0.5 * (a + b);
        const double fa = f.cdf(a) * g.cdf(a);
        const double fm = f.cdf(m) * g.cdf(m);
        const double fb = f.cdf(b) * g.cdf(b);
        total += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    return total;
}

}  // namespace

double realized_gft(double p, double v, double w) {
    check_unit(p, "price");
    check_unit(v, "valuation");
    check_unit(w, "valuation");
    const double lo = std::min(v, w);
    const double hi = std::max(v, w);
    return (lo <= p && p <= hi) ? hi - lo : 0.0;
}

double expected_gft(const ValuationPair& pair, double p) {
    check_unit(p, "price");
    const double integral = pair.left.cdf_integral(p) + pair.right.cdf_integral(p);
    const double at_p = pair.left.cdf(p) + pair.right.cdf(p);
    return integral + (pair.common_mean - p) * at_p;
}

double first_best(const ValuationPair& pair) {
    const double int_f = pair.left.cdf_integral(1.0);
    const double int_g = pair.right.cdf_integral(1.0);
    return int_f + int_g - 2.0 * integral_of_cdf_product(pair.left, pair.right);
}

double approx_ratio(const ValuationPair& pair) {
    const double fb = first_best(pair);
    if (!(fb > 0.0)) throw UndefinedRatioError("first-best value is zero; ratio undefined");
    return expected_gft(pair, pair.common_mean) / fb;
}

double best_fixed_price(const ValuationPair& pair) { return pair.common_mean; }

GftQuote quote(const ValuationPair& pair, double p) {
    const double at_p = expected_gft(pair, p);
    return {p, at_p, expected_gft(pair, pair.common_mean) - at_p};
}

PriceScan scan_prices(const ValuationPair& pair, double step, double tolerance) {
    if (!(step > 0.0 && step <= 1.0)) throw DomainError("scan step must lie in (0,1]");
    PriceScan scan;
    scan.value_at_mean = expected_gft(pair, pair.common_mean);
    scan.best_grid_value = -1.0;
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / step));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double p = std::min(1.0, static_cast<double>(k) * step);
        const double v = expected_gft(pair, p);
        if (v > scan.best_grid_value) {
            scan.best_grid_value = v;
            scan.best_grid_price = p;
        }
    }
    scan.mean_is_optimal = scan.best_grid_value <= scan.value_at_mean + tolerance;
    return scan;
}

}  // namespace brokerage
