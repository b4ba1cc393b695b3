#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "brokerage/error.hpp"
#include "brokerage/learners.hpp"

using namespace brokerage;

namespace {

std::vector<double> at(double x) { return {x}; }

// Runs BiAve on a context list with every valuation pair equal to (v, w).
void feed(BiAve& l, const std::vector<double>& xs, double v, double w) {
    for (double x : xs) {
        l.post_price(at(x));
        l.observe(FullFeedback{v, w});
    }
}

}  // namespace

TEST_CASE("BiAve opens at 1/2 and averages the first observation") {
    BiAve l(1);
    CHECK(l.post_price(at(0.3)) == 0.5);
    l.observe(FullFeedback{0.4, 0.6});
    CHECK(l.post_price(at(0.3)) == doctest::Approx(0.5));
    l.observe(FullFeedback{0.1, 0.1});
    CHECK(l.round() == 2);
}

TEST_CASE("BiAve bisection schedule in one dimension") {
    BiAve l(1);
    l.record_transcript(true);
    feed(l, {0.3}, 0.2, 0.2);
    CHECK(l.bisections().empty());
    // the root holds one observation, so round 2 splits it
    feed(l, {0.3}, 0.2, 0.2);
    REQUIRE(l.bisections().size() == 1);
    CHECK(l.bisections()[0].t == 2);
    CHECK(l.bisections()[0].cell == DyadicCell::root(1));

    // [0,1/2) got round 2; it splits once it has counted 4 contexts
    feed(l, {0.1, 0.2, 0.4}, 0.2, 0.2);
    CHECK(l.bisections().size() == 1);
    feed(l, {0.1}, 0.2, 0.2);
    REQUIRE(l.bisections().size() == 2);
    CHECK(l.bisections()[1].t == 6);
    CHECK(l.bisections()[1].cell == DyadicCell{1, {0}});

    // the untouched right half is still terminal with no data of its own
    const auto right = *l.tree().find(DyadicCell{1, {1}});
    CHECK(l.tree().is_terminal(right));
    CHECK(l.tree().stats(right).count == 0);
    CHECK(l.tree().stats(right).frozen_parent_count == 2);
}

TEST_CASE("BiAve falls back to the parent snapshot in a young cell") {
    BiAve l(1);
    feed(l, {0.3}, 0.2, 0.4);  // root: sum 0.6
    feed(l, {0.3}, 0.6, 0.6);  // splits the root; snapshot holds both rounds
    l.record_transcript(true);
    // right child has n = 0 < n' = 2
    const double p = l.post_price(at(0.8));
    CHECK(p == doctest::Approx((0.6 + 1.2) / 4));
    CHECK(l.transcript().back().branch == Branch::ParentAverage);
    l.observe(FullFeedback{1.0, 1.0});
    // n = 1 < 2 still
    CHECK(l.post_price(at(0.8)) == doctest::Approx(0.45));
    l.observe(FullFeedback{1.0, 1.0});
    // n = 2 >= 2: own average
    CHECK(l.post_price(at(0.8)) == doctest::Approx(1.0));
    CHECK(l.transcript().back().branch == Branch::CellAverage);
}

TEST_CASE("BiAve rejects limited feedback") {
    BiAve l(1);
    l.post_price(at(0.5));
    CHECK_THROWS_AS(l.observe(LimitedFeedback{true, false}), ProtocolError);
}

TEST_CASE("BiAve prices stay in [0,1] and the partition stays valid") {
    BiAve l(2);
    RngStream rng(8);
    for (int t = 0; t < 20000; ++t) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};
        const double p = l.post_price(x);
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
        l.observe(FullFeedback{rng.uniform(), rng.uniform()});
    }
    CHECK(partition_check(l.tree(), 1000));
    // every bisected cell of level i saw at least 4^i contexts
    for (const auto& e : l.bisections()) {
        const auto id = *l.tree().find(e.cell);
        CHECK(l.tree().stats(id).count >= (std::uint64_t{1} << (2 * e.cell.level)));
    }
}

TEST_CASE("ExBis explores and splits the root in round one") {
    const RngStream key(1234);
    ExBis l(1, key);
    RngStream copy = key;
    CHECK(l.post_price(at(0.3)) == copy.uniform());
    l.observe(LimitedFeedback{true, false});
    REQUIRE(l.bisections().size() == 1);
    CHECK(l.bisections()[0].t == 1);
    CHECK(l.explorations_at_bisection() == std::vector<std::uint64_t>{1});
    // the exploration record went down to [0,1/2)
    const auto left = *l.tree().find(DyadicCell{1, {0}});
    CHECK(l.tree().stats(left).explore_count == 1);
    CHECK(l.tree().stats(left).valuation_sum == 1.0);
}

TEST_CASE("ExBis exploits 16 rounds in a level-1 cell before exploring") {
    ExBis l(1, RngStream(5));
    l.record_transcript(true);
    l.post_price(at(0.3));
    l.observe(LimitedFeedback{true, true});
    for (int k = 0; k < 16; ++k) {
        const double p = l.post_price(at(0.3));
        CHECK(l.transcript().back().branch == Branch::ExploitCell);
        // one record with both bits set: estimate (1 + 1) / 2
        CHECK(p == 1.0);
        l.observe(LimitedFeedback{false, false});
    }
    l.post_price(at(0.3));
    CHECK(l.transcript().back().branch == Branch::Explore);
    CHECK(l.transcript().back().level == 1);
}

TEST_CASE("ExBis young cells use the parent snapshot, empty cells post 1/2") {
    ExBis l(1, RngStream(6));
    l.record_transcript(true);
    l.post_price(at(0.3));
    l.observe(LimitedFeedback{true, false});
    // right half: no records, frozen snapshot has one record with value 1
    CHECK(l.post_price(at(0.7)) == 0.5);
    CHECK(l.transcript().back().branch == Branch::ExploitParent);
    l.observe(LimitedFeedback{true, true});
}

TEST_CASE("ExBis rejects full feedback") {
    ExBis l(1, RngStream(1));
    l.post_price(at(0.5));
    CHECK_THROWS_AS(l.observe(FullFeedback{0.1, 0.2}), ProtocolError);
}

TEST_CASE("ExBis per-cell budgets") {
    for (std::size_t dim : {1u, 2u}) {
        ExBis l(dim, RngStream(77 + dim));
        RngStream ctx(3), vals(4);
        for (int t = 0; t < 100000; ++t) {
            std::vector<double> x(dim);
            for (auto& c : x) c = ctx.uniform();
            const double p = l.post_price(x);
            REQUIRE(p >= 0.0);
            REQUIRE(p < 1.0);
            l.observe(LimitedFeedback{p <= vals.uniform(), p <= vals.uniform()});
        }
        const auto& tree = l.tree();
        CHECK(partition_check(tree, 1000));
        REQUIRE(l.explorations_at_bisection().size() == l.bisections().size());
        for (std::size_t k = 0; k < l.bisections().size(); ++k) {
            const int level = l.bisections()[k].cell.level;
            CHECK(l.explorations_at_bisection()[k] == (std::uint64_t{1} << (2 * level)));
        }
        for (std::size_t id = 0; id < tree.node_count(); ++id) {
            const auto& s = tree.stats(id);
            const int level = tree.cell(id).level;
            CHECK(s.explore_count <= (std::uint64_t{1} << (2 * level)));
            CHECK(s.exploit_count <= (std::uint64_t{1} << (4 * level)));
        }
    }
}

TEST_CASE("learner trees do not depend on the valuations") {
    auto run = [](std::uint64_t val_seed, bool limited) {
        RngStream ctx(10), vals(val_seed);
        std::unique_ptr<Learner> l;
        if (limited) {
            l = std::make_unique<ExBis>(1, RngStream(2));
        } else {
            l = std::make_unique<BiAve>(1);
        }
        for (int t = 0; t < 30000; ++t) {
            const double p = l->post_price(at(ctx.uniform()));
            const double v = vals.uniform(), w = vals.uniform();
            if (limited) {
                l->observe(LimitedFeedback{p <= v, p <= w});
            } else {
                l->observe(FullFeedback{v, w});
            }
        }
        return l->bisections();
    };
    CHECK(run(1, false) == run(2, false));
    CHECK(run(1, true) == run(2, true));
}

TEST_CASE("replaying a transcript reproduces the prices") {
    auto run = [] {
        ExBis l(2, RngStream(9));
        RngStream ctx(1), vals(2);
        std::vector<double> prices;
        for (int t = 0; t < 5000; ++t) {
            const std::vector<double> x{ctx.uniform(), ctx.uniform()};
            prices.push_back(l.post_price(x));
            l.observe(LimitedFeedback{prices.back() <= vals.uniform(), prices.back() <= vals.uniform()});
        }
        std::ostringstream os;
        l.tree().dump(os);
        return std::make_pair(prices, os.str());
    };
    CHECK(run() == run());
}

TEST_CASE("baselines") {
    OracleLearner o({0.3, 0.7}, FeedbackKind::Limited);
    CHECK(o.post_price(at(0.1)) == 0.3);
    o.observe(LimitedFeedback{});
    CHECK(o.post_price(at(0.1)) == 0.7);
    CHECK_THROWS_AS(o.observe(FullFeedback{}), ProtocolError);

    FixedPriceLearner f(0.25, FeedbackKind::Full);
    CHECK(f.post_price(at(0.9)) == 0.25);
    CHECK_THROWS_AS(FixedPriceLearner(1.5, FeedbackKind::Full), DomainError);

    UniformPriceLearner u(RngStream(3), FeedbackKind::Full);
    RngStream copy(3);
    CHECK(u.post_price(at(0.2)) == copy.uniform());
}
