#include "doctest.h"

#include <cmath>
#include <vector>

#include "brokerage/distributions.hpp"
#include "brokerage/kernels.hpp"

using namespace brokerage;
namespace k = brokerage::kernels;

namespace {

std::vector<double> uniforms(std::size_t n, std::uint64_t key) {
    RngStream r(key);
    std::vector<double> u(n);
    for (auto& x : u) x = r.uniform();
    return u;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace

TEST_CASE("scalar inverse cdf matches quantile") {
    const auto d = make_tight_ratio_pair(0.1).left;
    for (double u : {0.0, 0.1, 0.25, 0.4999, 0.5, 0.75, 0.999999}) {
        CHECK(k::scalar::inverse_cdf_one(d.view(), u) == doctest::Approx(d.quantile(u)).epsilon(1e-15));
    }
}

TEST_CASE("avx2 kernels reproduce the scalar reference") {
    if (!k::avx2::available()) {
        MESSAGE("AVX2 not available, skipping equivalence");
        return;
    }
    RngStream gen(21);
    std::vector<BoundedDensity> dists{BoundedDensity::uniform(), make_tight_ratio_pair(0.05).left,
                                      make_lowerbound_density(+1, 1.0)};
    for (int i = 0; i < 20; ++i) dists.push_back(make_random_pair(gen, 1 + i % 6, 8.0).right);

    // lengths that exercise the vector tail
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{7},
                          std::size_t{1001}, std::size_t{65536}}) {
        const auto u = uniforms(n, 1000 + n);
        for (const auto& d : dists) {
            std::vector<double> a(n), b(n);
            k::scalar::inverse_cdf(d.view(), u, a);
            k::avx2::inverse_cdf(d.view(), u, b);
            CHECK(a == b);
        }
        const auto v = uniforms(n, 2000 + n);
        const auto w = uniforms(n, 3000 + n);
        for (double price : {0.0, 0.25, 0.5, 1.0}) {
            const auto s = k::scalar::gft_moments(price, v, w);
            const auto x = k::avx2::gft_moments(price, v, w);
            CHECK(s.n == x.n);
            CHECK(close(s.sum, x.sum));
            CHECK(close(s.sum_sq, x.sum_sq));
        }
        const auto s = k::scalar::absdiff_moments(v, w);
        const auto x = k::avx2::absdiff_moments(v, w);
        CHECK(close(s.sum, x.sum));
        CHECK(close(s.sum_sq, x.sum_sq));
    }
}

TEST_CASE("boundary prices count as trades in every kernel") {
    const std::vector<double> v{0.2, 0.2, 0.2, 0.2, 0.9};
    const std::vector<double> w{0.8, 0.8, 0.8, 0.8, 0.1};
    for (double price : {0.2, 0.8}) {
        const auto s = k::scalar::gft_moments(price, v, w);
        CHECK(s.sum == doctest::Approx(4 * 0.6 + 0.8));
        if (k::avx2::available()) CHECK(k::avx2::gft_moments(price, v, w).sum == doctest::Approx(4 * 0.6 + 0.8));
    }
}

TEST_CASE("moments helpers") {
    k::Moments m;
    m.sum = 6.0;
    m.sum_sq = 14.0;
    m.n = 3;
    CHECK(m.mean() == 2.0);
    CHECK(m.variance() == doctest::Approx(1.0));
    CHECK(k::isa_name(k::Isa::Scalar) == "scalar");
}
