#pragma once

#include "brokerage/distributions.hpp"

namespace brokerage {

// Realized gain from trade at price p: |v - w| if min(v,w) <= p <= max(v,w), else 0.
double realized_gft(double p, double v, double w);

// Expected gain from trade when posting p, computed exactly from the cdfs:
//   int_0^p (F + G) + (mu - p) (F + G)(p).
double expected_gft(const ValuationPair& pair, double p);

// E|V - W| = int_0^1 F(1 - G) + G(1 - F), the value of an omniscient broker.
double first_best(const ValuationPair& pair);

// expected_gft(mu) / first_best. Throws UndefinedRatioError when first_best is 0.
double approx_ratio(const ValuationPair& pair);

// The common mean maximizes expected_gft.
double best_fixed_price(const ValuationPair& pair);

struct GftQuote {
    double price = 0.0;
    double expected_gft = 0.0;
    double instantaneous_regret = 0.0;
};

GftQuote quote(const ValuationPair& pair, double p);

// Brute-force check that no grid price beats the mean.
struct PriceScan {
    double best_grid_price = 0.0;
    double best_grid_value = 0.0;
    double value_at_mean = 0.0;
    bool mean_is_optimal = false;
};

PriceScan scan_prices(const ValuationPair& pair, double step = 1e-4, double tolerance = 1e-9);

}  // namespace brokerage
