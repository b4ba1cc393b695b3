#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "brokerage/distributions.hpp"
#include "brokerage/rng.hpp"

namespace brokerage {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    std::size_t failures = 0;
    // Smallest slack over all cases; negative when some case fails.
    double margin = 0.0;
    std::string detail;
};

using ExpectedGftFn = std::function<double(const ValuationPair&, double)>;

// Direct double integrals over pairs of pieces, without going through the cdf identities.
double first_best_direct(const ValuationPair& pair);
double expected_gft_direct(const ValuationPair& pair, double p);

// Random pairs used by the suites: 1..6 pieces, density cap 8.
ValuationPair random_suite_pair(RngStream& rng);

// expected_gft(mu) >= first_best / 2 on random pairs.
CheckResult check_half_approximation(std::size_t n_pairs, RngStream rng);
// Ratio of the tight two-block pair equals 1/2 + eps for delta = 2 eps / (1 + 2 eps).
CheckResult check_tight_ratio(const std::vector<double>& eps_grid = {0.01, 0.05, 0.09});
// 0 <= E g(mu) - E g(p) <= M (mu - p)^2 over a price grid.
CheckResult check_quadratic_bound(std::size_t n_pairs, std::size_t n_prices, RngStream rng,
                                  const ExpectedGftFn& gft = nullptr);
// First-best via the cdf formula against the direct double integral and the
// closed form (1 - delta) / 2 of the tight pair.
CheckResult check_first_best_identity(std::size_t n_pairs, RngStream rng);
// For the tilted-uniform pair, E g(mu) - E g(p) = (mu - p)^2 on [2/7, 1].
CheckResult check_lowerbound_identity(double epsilon = 0.1, std::size_t n_prices = 50);
// Grid scan never beats posting the mean.
CheckResult check_best_price(std::size_t n_pairs, RngStream rng, double step = 1e-4);
// Random-context runs of both learners keep the partition valid, bisect ExBis
// cells with exactly 4^level exploration records, and grow trees that do not
// depend on the valuations.
CheckResult check_partition_invariants(std::size_t rounds, std::size_t dim, RngStream rng);

std::vector<CheckResult> approx_suite(std::size_t n_pairs, RngStream rng);
std::vector<CheckResult> verify_suite(std::size_t n_pairs, std::uint64_t seed = 2024);

}  // namespace brokerage
