#pragma once

// Independent reference computations used to pin down the analytic code:
// Monte Carlo estimates and brute-force quadrature over the densities.

#include <cstddef>

#include "brokerage/distributions.hpp"
#include "brokerage/kernels.hpp"
#include "brokerage/rng.hpp"

namespace oracle {

// Monte Carlo estimate of the expected gain from trade at price p.
brokerage::kernels::Moments mc_expected_gft(const brokerage::ValuationPair& pair, double p, std::size_t draws,
                                            brokerage::RngStream rng);
// Monte Carlo estimate of E|V - W|.
brokerage::kernels::Moments mc_first_best(const brokerage::ValuationPair& pair, std::size_t draws,
                                          brokerage::RngStream rng);

// Composite midpoint rule on the pdfs only, `cells` panels inside each piece.
double quad_expected_gft(const brokerage::ValuationPair& pair, double p, std::size_t cells = 2000);
double quad_first_best(const brokerage::ValuationPair& pair, std::size_t cells = 400);

}  // namespace oracle
