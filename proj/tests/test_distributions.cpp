#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "brokerage/distributions.hpp"
#include "brokerage/error.hpp"
#include "brokerage/serialization.hpp"

using namespace brokerage;

namespace {

// Kolmogorov-Smirnov distance between samples and a cdf.
double ks_distance(std::vector<double> xs, const BoundedDensity& d) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = d.cdf(xs[i]);
        worst = std::max({worst, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return worst;
}

}  // namespace

TEST_CASE("uniform cdf and quantile") {
    const auto u = BoundedDensity::uniform();
    CHECK(u.cdf(0.3) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(u.cdf(1.0) == 1.0);
    CHECK(u.quantile(0.42) == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(u.mean() == 0.5);
    CHECK_THROWS_AS((void)u.cdf(1.5), DomainError);
    CHECK_THROWS_AS((void)u.cdf(-0.01), DomainError);
}

TEST_CASE("cdf at 1 is 1 for random densities") {
    RngStream rng(11);
    for (int k = 0; k < 20; ++k) {
        const auto p = make_random_pair(rng, 1 + k % 6, 8.0);
        CHECK(p.left.cdf(1.0) == 1.0);
        CHECK(p.right.cdf(1.0) == 1.0);
    }
}

TEST_CASE("two-block density") {
    const auto pair = make_tight_ratio_pair(0.1);
    const auto& f = pair.left;
    CHECK(f.cdf(0.05) == doctest::Approx(0.25).epsilon(1e-14));
    // cdf is flat at 1/2 across the gap, the inverse jumps to the upper block
    CHECK(f.quantile(0.5) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(f.cdf(0.9) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pair.left.mean() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pair.right.mean() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.density_bound() == doctest::Approx(5.0));
    CHECK_THROWS_AS(make_tight_ratio_pair(0.0), DomainError);
    CHECK_THROWS_AS(make_tight_ratio_pair(1.0 / 6.0), DomainError);
}

TEST_CASE("tilted uniform densities") {
    const auto plus = make_lowerbound_density(+1, 0.2);
    CHECK(plus.mean() == doctest::Approx(0.5 + 0.2 / 196).epsilon(1e-14));
    CHECK(std::abs(plus.mean() - (0.5 + 0.2 / 196)) < 1e-14);

    const auto minus = make_lowerbound_density(-1, 1.0);
    CHECK(minus.density_bound() == 2.0);
    CHECK(minus.cdf(1.0) == 1.0);
    CHECK(std::abs(minus.mean() - (0.5 - 1.0 / 196)) < 1e-14);

    const auto flat = make_lowerbound_density(+1, 0.0);
    CHECK(flat.mean() == doctest::Approx(0.5));
    CHECK(flat.density_bound() == 1.0);

    CHECK_THROWS_AS(make_lowerbound_density(+1, 1.5), DomainError);
    CHECK_THROWS_AS(make_lowerbound_density(0, 0.5), DomainError);
}

TEST_CASE("sample mean of the tilted density") {
    const auto d = make_lowerbound_density(+1, 0.1);
    RngStream rng(99);
    std::vector<double> xs(1000000);
    d.sample_n(rng, xs);
    double sum = 0.0, sq = 0.0;
    for (double x : xs) {
        sum += x;
        sq += x * x;
    }
    const double n = static_cast<double>(xs.size());
    const double m = sum / n;
    const double se = std::sqrt((sq / n - m * m) / n);
    CHECK(std::abs(m - (0.5 + 0.1 / 196)) <= 3 * se);
}

TEST_CASE("samples follow the cdf (KS test)") {
    RngStream gen(5);
    const std::vector<BoundedDensity> cases{
        BoundedDensity::uniform(),
        make_tight_ratio_pair(0.1).left,
        make_tight_ratio_pair(0.1).right,
        make_lowerbound_density(-1, 1.0),
        make_random_pair(gen, 5, 8.0).left,
        make_random_pair(gen, 6, 8.0).right,
    };
    const std::size_t n = 100000;
    // critical value of the KS statistic at level 0.001
    const double crit = 1.949 / std::sqrt(static_cast<double>(n));
    std::uint64_t key = 1000;
    for (const auto& d : cases) {
        RngStream rng(key++);
        std::vector<double> xs(n);
        d.sample_n(rng, xs);
        CHECK(ks_distance(xs, d) < crit);
        // the one-at-a-time path agrees with the batch path
        RngStream r1(key), r2(key);
        std::vector<double> batch(64);
        d.sample_n(r1, batch);
        for (double b : batch) CHECK(d.sample(r2) == b);
    }
}

TEST_CASE("random pairs satisfy their postconditions") {
    RngStream rng(2024);
    for (int k = 0; k < 300; ++k) {
        const std::size_t pieces = 1 + k % 6;
        const auto p = make_random_pair(rng, pieces, 8.0);
        CHECK(std::abs(p.left.mean() - p.right.mean()) <= 1e-12);
        CHECK(p.left.density_bound() <= 8.0);
        CHECK(p.right.density_bound() <= 8.0);
        if (pieces == 1) {
            CHECK(p.left.mean() == doctest::Approx(0.5));
        }
    }
}

TEST_CASE("from_pieces validation") {
    CHECK_THROWS_AS(BoundedDensity::from_pieces({0.0, 0.5, 1.0}, {1.0, 0.5}), DomainError);
    CHECK_THROWS_AS(BoundedDensity::from_pieces({0.0, 0.6, 0.5, 1.0}, {1.0, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(BoundedDensity::from_pieces({0.0, 1.0}, {-1.0}), DomainError);
    CHECK_THROWS_AS(BoundedDensity::from_pieces({0.1, 1.0}, {1.0 / 0.9}), DomainError);
    CHECK_NOTHROW(BoundedDensity::from_pieces({0.0, 0.25, 1.0}, {2.0, 2.0 / 3.0}));
}

TEST_CASE("pairs must share their mean") {
    CHECK_THROWS_AS(ValuationPair::make(BoundedDensity::uniform(), BoundedDensity::uniform_on(0.0, 0.5)),
                    DomainError);
}

TEST_CASE("window and stepped pairs") {
    const auto w = make_window_pair(0.3, 0.15);
    CHECK(w.common_mean == doctest::Approx(0.3));
    const auto s = make_stepped_pair(0.3, 0.15);
    CHECK(std::abs(s.left.mean() - s.right.mean()) <= 1e-12);
    CHECK(s.right.cdf(0.3) == doctest::Approx(0.5));
    const auto edge = make_window_pair(0.05, 0.15);
    CHECK(edge.left.cdf(0.1) == doctest::Approx(1.0));
}

TEST_CASE("json round trip keeps every bit") {
    RngStream rng(8);
    const auto p = make_random_pair(rng, 4, 8.0);
    const auto q = pair_from_json(nlohmann::json::parse(pair_to_json(p).dump()));
    CHECK(std::equal(p.left.breakpoints().begin(), p.left.breakpoints().end(), q.left.breakpoints().begin()));
    CHECK(std::equal(p.right.heights().begin(), p.right.heights().end(), q.right.heights().begin()));
    CHECK(p.common_mean == q.common_mean);
}
