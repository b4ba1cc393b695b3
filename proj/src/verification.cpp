#include "brokerage/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "brokerage/dyadic_partition.hpp"
#include "brokerage/gft.hpp"
#include "brokerage/learners.hpp"

namespace brokerage {

namespace {

// Antiderivative with d^2/dx dy = |x - y|.
double abs_kernel(double x, double y) {
    const double d = std::abs(x - y);
    return -d * d * d / 6.0;
}

// Mass and first moment of a density restricted to [lo, hi].
struct Partial {
    double mass = 0.0;
    double moment = 0.0;
};

Partial partial(const BoundedDensity& d, double lo, double hi) {
    Partial out;
    const auto b = d.breakpoints();
    const auto h = d.heights();
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double a = std::max(lo, b[k]);
        const double c = std::min(hi, b[k + 1]);
        if (c <= a) continue;
        out.mass += h[k] * (c - a);
        out.moment += 0.5 * h[k] * (c - a) * (c + a);
    }
    return out;
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

void record(CheckResult& r, double slack) {
    ++r.cases;
    if (r.cases == 1 || slack < r.margin) r.margin = slack;
    if (slack < 0.0) {
        ++r.failures;
        r.passed = false;
    }
}

}  // namespace

double first_best_direct(const ValuationPair& pair) {
    const auto fb = pair.left.breakpoints();
    const auto fh = pair.left.heights();
    const auto gb = pair.right.breakpoints();
    const auto gh = pair.right.heights();
    double total = 0.0;
    for (std::size_t i = 0; i < fh.size(); ++i) {
        if (fh[i] == 0.0) continue;
        for (std::size_t j = 0; j < gh.size(); ++j) {
            if (gh[j] == 0.0) continue;
            const double box = abs_kernel(fb[i + 1], gb[j + 1]) - abs_kernel(fb[i + 1], gb[j]) -
                               abs_kernel(fb[i], gb[j + 1]) + abs_kernel(fb[i], gb[j]);
            total += fh[i] * gh[j] * box;
        }
    }
    return total;
}

double expected_gft_direct(const ValuationPair& pair, double p) {
    // E[(W - V) 1{V <= p <= W}] + E[(V - W) 1{W <= p <= V}], using independence.
    const Partial v_lo = partial(pair.left, 0.0, p);
    const Partial v_hi = partial(pair.left, p, 1.0);
    const Partial w_lo = partial(pair.right, 0.0, p);
    const Partial w_hi = partial(pair.right, p, 1.0);
    return (v_lo.mass * w_hi.moment - v_lo.moment * w_hi.mass) + (w_lo.mass * v_hi.moment - w_lo.moment * v_hi.mass);
}

ValuationPair random_suite_pair(RngStream& rng) {
    const std::size_t pieces = 1 + rng.next_u64() % 6;
    return make_random_pair(rng, pieces, 8.0);
}

CheckResult check_half_approximation(std::size_t n_pairs, RngStream rng) {
    CheckResult r;
    r.name = "half-approximation of first-best";
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const auto pair = random_suite_pair(rng);
        record(r, expected_gft(pair, pair.common_mean) - 0.5 * first_best(pair) + 1e-9);
    }
    r.detail = fmt("%.0f random pairs, worst slack %.3e", static_cast<double>(n_pairs), r.margin);
    return r;
}

CheckResult check_tight_ratio(const std::vector<double>& eps_grid) {
    CheckResult r;
    r.name = "tightness of the half-approximation";
    std::string detail;
    for (double eps : eps_grid) {
        const double delta = 2.0 * eps / (1.0 + 2.0 * eps);
        const double ratio = approx_ratio(make_tight_ratio_pair(delta));
        record(r, 1e-9 - std::abs(ratio - (0.5 + eps)));
        detail += fmt("eps=%.2f ratio=%.12f; ", eps, ratio);
    }
    r.detail = detail;
    return r;
}

CheckResult check_quadratic_bound(std::size_t n_pairs, std::size_t n_prices, RngStream rng, const ExpectedGftFn& gft) {
    const ExpectedGftFn f = gft ? gft : ExpectedGftFn([](const ValuationPair& p, double x) { return expected_gft(p, x); });
    CheckResult r;
    r.name = "quadratic regret bound around the mean";
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const auto pair = random_suite_pair(rng);
        const double M = pair.density_bound();
        const double mu = pair.common_mean;
        const double best = f(pair, mu);
        for (std::size_t i = 0; i < n_prices; ++i) {
            const double p = n_prices == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n_prices - 1);
            const double gap = best - f(pair, p);
            record(r, std::min(gap + 1e-10, M * (mu - p) * (mu - p) + 1e-10 - gap));
        }
    }
    r.detail = fmt("%.0f cases, worst slack %.3e", static_cast<double>(r.cases), r.margin);
    return r;
}

CheckResult check_first_best_identity(std::size_t n_pairs, RngStream rng) {
    CheckResult r;
    r.name = "first-best integral identity";
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const auto pair = random_suite_pair(rng);
        record(r, 1e-10 - std::abs(first_best(pair) - first_best_direct(pair)));
    }
    for (double delta : {0.01, 0.05, 0.1, 0.15}) {
        record(r, 1e-10 - std::abs(first_best(make_tight_ratio_pair(delta)) - (1.0 - delta) / 2.0));
    }
    r.detail = fmt("%.0f cases, worst slack %.3e", static_cast<double>(r.cases), r.margin);
    return r;
}

CheckResult check_lowerbound_identity(double epsilon, std::size_t n_prices) {
    CheckResult r;
    r.name = "quadratic identity for tilted-uniform traders";
    for (int sign : {1, -1}) {
        const auto pair = make_lowerbound_pair(sign, epsilon);
        const double mu = pair.common_mean;
        const double best = expected_gft(pair, mu);
        for (std::size_t i = 0; i < n_prices; ++i) {
            const double p = 2.0 / 7.0 + (1.0 - 2.0 / 7.0) * static_cast<double>(i) / static_cast<double>(n_prices - 1);
            const double gap = best - expected_gft(pair, p);
            record(r, 1e-10 - std::abs(gap - (mu - p) * (mu - p)));
        }
    }
    r.detail = fmt("eps=%.2f, worst slack %.3e", epsilon, r.margin);
    return r;
}

CheckResult check_best_price(std::size_t n_pairs, RngStream rng, double step) {
    CheckResult r;
    r.name = "mean is the best fixed price";
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const auto pair = random_suite_pair(rng);
        const auto scan = scan_prices(pair, step);
        record(r, scan.value_at_mean + 1e-9 - scan.best_grid_value);
    }
    r.detail = fmt("%.0f pairs on a %.0e grid", static_cast<double>(n_pairs), step);
    return r;
}

CheckResult check_partition_invariants(std::size_t rounds, std::size_t dim, RngStream rng) {
    CheckResult r;
    r.name = "partition invariants";
    RngStream ctx_rng = rng.substream("contexts");
    std::vector<double> contexts(rounds * dim);
    for (auto& x : contexts) x = ctx_rng.uniform();

    auto run = [&](Learner& learner, RngStream valuations) {
        for (std::size_t t = 0; t < rounds; ++t) {
            const std::span<const double> x(contexts.data() + t * dim, dim);
            const double p = learner.post_price(x);
            const double v = valuations.uniform();
            const double w = valuations.uniform();
            if (learner.feedback_kind() == FeedbackKind::Full) {
                learner.observe(FullFeedback{v, w});
            } else {
                learner.observe(LimitedFeedback{p <= v, p <= w});
            }
        }
    };

    BiAve bi_a(dim), bi_b(dim);
    run(bi_a, rng.substream("valuations", 1));
    run(bi_b, rng.substream("valuations", 2));
    ExBis ex_a(dim, rng.substream("learner")), ex_b(dim, rng.substream("learner"));
    run(ex_a, rng.substream("valuations", 1));
    run(ex_b, rng.substream("valuations", 2));

    std::string detail;
    auto expect = [&](bool ok, const std::string& what) {
        record(r, ok ? 0.0 : -1.0);
        if (!ok) detail += what + "; ";
    };
    expect(partition_check(bi_a.tree()), "BiAve partition broken");
    expect(partition_check(ex_a.tree()), "ExBis partition broken");
    expect(bi_a.bisections() == bi_b.bisections(), "BiAve tree depends on valuations");
    expect(ex_a.bisections() == ex_b.bisections(), "ExBis tree depends on valuations");
    bool exact = true;
    for (std::size_t k = 0; k < ex_a.bisections().size(); ++k) {
        const int level = ex_a.bisections()[k].cell.level;
        exact = exact && ex_a.explorations_at_bisection()[k] == (std::uint64_t{1} << (2 * level));
    }
    expect(exact, "ExBis bisected a cell without exactly 4^level explorations");
    r.margin = r.passed ? 0.0 : -1.0;
    r.detail = detail.empty() ? fmt("%.0f rounds, %.0f BiAve bisections", static_cast<double>(rounds),
                                    static_cast<double>(bi_a.bisections().size()))
                              : detail;
    return r;
}

std::vector<CheckResult> approx_suite(std::size_t n_pairs, RngStream rng) {
    std::vector<CheckResult> out;
    out.push_back(check_half_approximation(n_pairs, rng.substream("half")));
    out.push_back(check_tight_ratio());
    CheckResult uniform;
    uniform.name = "uniform traders ratio 3/4";
    record(uniform, 1e-9 - std::abs(approx_ratio(make_uniform_pair()) - 0.75));
    uniform.detail = fmt("ratio=%.12f", approx_ratio(make_uniform_pair()));
    out.push_back(uniform);
    return out;
}

std::vector<CheckResult> verify_suite(std::size_t n_pairs, std::uint64_t seed) {
    const RngStream rng(seed);
    auto out = approx_suite(n_pairs, rng.substream("approx"));
    out.push_back(check_quadratic_bound(n_pairs, 101, rng.substream("quadratic")));
    out.push_back(check_first_best_identity(n_pairs, rng.substream("first-best")));
    out.push_back(check_lowerbound_identity());
    out.push_back(check_best_price(std::min<std::size_t>(n_pairs, 50), rng.substream("best-price")));
    out.push_back(check_partition_invariants(100000, 1, rng.substream("partition-1d")));
    out.push_back(check_partition_invariants(20000, 2, rng.substream("partition-2d")));
    return out;
}

}  // namespace brokerage
