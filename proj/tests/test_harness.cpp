#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "brokerage/error.hpp"
#include "brokerage/gft.hpp"
#include "brokerage/harness.hpp"

using namespace brokerage;

namespace {

// Posts a bad price at a chosen round.
class FaultyLearner final : public Learner {
public:
    explicit FaultyLearner(std::int64_t bad_round) : bad_(bad_round) {}
    std::string_view name() const override { return "faulty"; }
    FeedbackKind feedback_kind() const override { return FeedbackKind::Full; }
    double post_price(std::span<const double>) override {
        ++t_;
        return t_ == bad_ ? std::numeric_limits<double>::quiet_NaN() : 0.5;
    }
    void observe(const Feedback&) override {}

private:
    std::int64_t bad_;
};

}  // namespace

TEST_CASE("oracle regret vanishes on every family") {
    const std::vector<BrokerageInstance> insts{
        make_lattice_instance(FeedbackKind::Full, 1 << 12, 1, std::nullopt, RngStream(1)),
        make_lattice_instance(FeedbackKind::Limited, 1 << 12, 1, std::nullopt, RngStream(2)),
        make_smooth_instance(4096, 2, RngStream(3), 0.8, {{"family", "window"}}),
        make_smooth_instance(4096, 1, RngStream(4), 0.8, {{"family", "stepped"}}),
    };
    for (const auto& inst : insts) {
        OracleLearner o(inst.market_values(), FeedbackKind::Full);
        double total = 0.0;
        for (const auto& r : run_episode(o, inst, FeedbackKind::Full, RngStream(5))) total += r.regret;
        CHECK(std::abs(total) <= 1e-9 * static_cast<double>(inst.horizon()));
    }
}

TEST_CASE("round records") {
    const auto inst = make_lattice_instance(FeedbackKind::Full, 1 << 12, 1, std::nullopt, RngStream(6));
    BiAve l(1);
    const auto recs = run_episode(l, inst, FeedbackKind::Full, RngStream(7));
    REQUIRE(recs.size() == inst.horizon());
    const double bound = 2.0;  // density bound of the tilted uniforms
    for (const auto& r : recs) {
        const double mu = inst.market_value(static_cast<std::size_t>(r.t - 1));
        REQUIRE(r.regret >= -1e-10);
        REQUIRE(r.regret <= bound * (mu - r.price) * (mu - r.price) + 1e-10);
        REQUIRE(r.realized_gft == realized_gft(r.price, r.v, r.w));
        REQUIRE(std::get<FullFeedback>(r.feedback).v == r.v);
    }
}

TEST_CASE("fixed price 1/2 against a shifted block") {
    const double eps = 1.0 / 16;
    const auto inst = make_lattice_instance(FeedbackKind::Full, 1 << 12, 1, std::vector<int>(16, 1), RngStream(0));
    FixedPriceLearner f(0.5, FeedbackKind::Full);
    const auto recs = run_episode(f, inst, FeedbackKind::Full, RngStream(1));
    const double e = inst.lattice()->epsilon;
    CHECK(e == eps);
    const double bound = (1 + e) * (e / 196) * (e / 196);
    const auto pair = make_lowerbound_pair(+1, e);
    const double direct = expected_gft(pair, pair.common_mean) - expected_gft(pair, 0.5);
    for (const auto& r : recs) {
        REQUIRE(r.regret <= bound + 1e-15);
        REQUIRE(r.regret == doctest::Approx(direct).epsilon(1e-12));
    }
    // 1/2 lies in [2/7, 1], where the regret is exactly (mu - 1/2)^2
    CHECK(direct == doctest::Approx((e / 196) * (e / 196)).epsilon(1e-6));
}

TEST_CASE("price zero never trades") {
    const auto inst = make_smooth_instance(1000, 1, RngStream(2), 0.5);
    FixedPriceLearner f(0.0, FeedbackKind::Limited);
    for (const auto& r : run_episode(f, inst, FeedbackKind::Limited, RngStream(3))) {
        REQUIRE(r.expected_gft == 0.0);
    }
}

TEST_CASE("limited feedback carries only the bits") {
    const auto inst = make_lattice_instance(FeedbackKind::Limited, 1 << 12, 1, std::nullopt, RngStream(8));
    ExBis l(1, RngStream(9));
    for (const auto& r : run_episode(l, inst, FeedbackKind::Limited, RngStream(10))) {
        const auto& fb = std::get<LimitedFeedback>(r.feedback);
        REQUIRE(fb.v_accepts == (r.price <= r.v));
        REQUIRE(fb.w_accepts == (r.price <= r.w));
    }
}

TEST_CASE("feedback mismatch and faults") {
    const auto inst = make_smooth_instance(100, 1, RngStream(1), 0.2);
    ExBis ex(1, RngStream(1));
    CHECK_THROWS_AS(run_episode(ex, inst, FeedbackKind::Full, RngStream(2)), ProtocolError);
    FaultyLearner bad(17);
    try {
        run_episode(bad, inst, FeedbackKind::Full, RngStream(2));
        FAIL("expected a fault");
    } catch (const LearnerFault& e) {
        CHECK(e.round() == 17);
    }
}

TEST_CASE("episodes replay exactly") {
    const auto inst = make_lattice_instance(FeedbackKind::Limited, 1 << 13, 1, std::nullopt, RngStream(4));
    auto once = [&] {
        ExBis l(1, RngStream(5));
        std::vector<double> out;
        for (const auto& r : run_episode(l, inst, FeedbackKind::Limited, RngStream(6))) {
            out.push_back(r.price);
            out.push_back(r.regret);
            out.push_back(r.v);
        }
        return out;
    };
    CHECK(once() == once());
}

TEST_CASE("log-log fit") {
    const auto f = fit_loglog({10, 100, 1000}, {2.0, 20.0, 200.0});
    CHECK(f.slope == doctest::Approx(1.0));
    CHECK(f.intercept == doctest::Approx(std::log(0.2)));
    CHECK(f.r_squared == doctest::Approx(1.0));
    const auto g = fit_loglog({4, 16, 64}, {2, 4, 8});
    CHECK(g.slope == doctest::Approx(0.5));
    CHECK_THROWS_AS(fit_loglog({1.0}, {1.0}), DomainError);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {0.0, 1.0}), DomainError);
}

TEST_CASE("checkpoints") {
    const auto c = checkpoints_for(4096, {1024, 4096, 8192});
    CHECK(c.front() == 1);
    CHECK(c.back() == 4096);
    CHECK(std::is_sorted(c.begin(), c.end()));
    CHECK(std::adjacent_find(c.begin(), c.end()) == c.end());
    CHECK(std::find(c.begin(), c.end(), 1024) != c.end());
    CHECK(c.size() <= 64 + 3);
}

TEST_CASE("sweep aggregation") {
    SweepSpec spec;
    spec.algo = Algo::BiAve;
    spec.horizons = {1024, 2048, 4096};
    spec.seeds = 4;
    spec.workers = 3;
    spec.bootstrap_resamples = 200;
    const auto r = sweep(spec);
    REQUIRE(r.runs.size() == 12);
    CHECK_FALSE(r.degenerate);
    REQUIRE(r.fit);
    REQUIRE(r.slope_ci_low);
    CHECK(*r.slope_ci_low <= r.fit->slope + 1e-12);
    CHECK(*r.slope_ci_high >= r.fit->slope - 1e-12);
    for (const auto& tr : r.runs) {
        for (std::size_t k = 1; k < tr.cum_regret.size(); ++k) REQUIRE(tr.cum_regret[k] >= tr.cum_regret[k - 1] - 1e-10);
    }

    SUBCASE("seed isolation") {
        SweepSpec more = spec;
        more.seeds = 6;
        more.workers = 1;
        const auto r2 = sweep(more);
        for (std::size_t h = 0; h < 3; ++h) {
            for (std::size_t s = 0; s < 4; ++s) CHECK(r2.run(h, s).cum_regret == r.run(h, s).cum_regret);
        }
    }
    SUBCASE("worker count does not change the output") {
        SweepSpec serial = spec;
        serial.workers = 1;
        std::ostringstream a, b;
        write_sweep_csv(r, a);
        write_sweep_csv(sweep(serial), b);
        CHECK(a.str() == b.str());
        CHECK(a.str().rfind("algo,feedback,d,T,seed,checkpoint_t,cum_regret_analytic,cum_regret_realized\n", 0) == 0);
    }
}

TEST_CASE("oracle sweeps are flagged degenerate") {
    SweepSpec spec;
    spec.algo = Algo::Oracle;
    spec.horizons = {1024, 4096};
    spec.seeds = 2;
    const auto r = sweep(spec);
    CHECK(r.degenerate);
    CHECK_FALSE(r.fit);
    CHECK(summary_json(r)["slope"].is_null());
}

TEST_CASE("sweep argument checks") {
    SweepSpec spec;
    spec.horizons = {4096, 1024};
    CHECK_THROWS_AS(sweep(spec), ConfigError);
    spec.horizons = {1024};
    spec.algo = Algo::ExBis;
    CHECK_THROWS_AS(sweep(spec), ConfigError);
    CHECK(required_feedback(Algo::ExBis) == FeedbackKind::Limited);
    CHECK(required_feedback(Algo::BiAve) == FeedbackKind::Full);
    CHECK_FALSE(required_feedback(Algo::Uniform));
    CHECK(theory_slope(Algo::BiAve, 1) == doctest::Approx(1.0 / 3));
    CHECK(theory_slope(Algo::ExBis, 1) == doctest::Approx(0.6));
}
