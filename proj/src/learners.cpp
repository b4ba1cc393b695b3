#include "brokerage/learners.hpp"

#include <cmath>
#include <string>

#include "brokerage/error.hpp"

namespace brokerage {

namespace {

// n >= 2^exponent without overflow.
bool reaches_power_of_two(std::uint64_t n, int exponent) {
    return exponent < 64 && n >= (std::uint64_t{1} << exponent);
}

double average(double sum, std::uint64_t count) { return sum / (2.0 * static_cast<double>(count)); }

}  // namespace

std::string_view to_string(FeedbackKind kind) { return kind == FeedbackKind::Full ? "full" : "limited"; }

FeedbackKind parse_feedback_kind(std::string_view text) {
    if (text == "full") return FeedbackKind::Full;
    if (text == "limited") return FeedbackKind::Limited;
    throw DomainError("unknown feedback kind '" + std::string(text) + "'");
}

FeedbackKind kind_of(const Feedback& fb) {
    return std::holds_alternative<FullFeedback>(fb) ? FeedbackKind::Full : FeedbackKind::Limited;
}

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::Initial: return "initial";
        case Branch::CellAverage: return "cell_average";
        case Branch::ParentAverage: return "parent_average";
        case Branch::Prior: return "prior";
        case Branch::ExploitCell: return "exploit_cell";
        case Branch::ExploitParent: return "exploit_parent";
        case Branch::Explore: return "explore";
        case Branch::Oracle: return "oracle";
        case Branch::Fixed: return "fixed";
        case Branch::Uniform: return "uniform";
    }
    return "unknown";
}

void Learner::expect(FeedbackKind kind, const Feedback& fb) const {
    if (kind_of(fb) != kind) {
        throw ProtocolError(std::string(name()) + " expects " + std::string(to_string(kind)) + " feedback");
    }
}

BiAve::BiAve(std::size_t dim) : tree_(dim) {}

double BiAve::post_price(std::span<const double> context) {
    ++t_;
    pending_ = tree_.locate(context);
    pending_context_.assign(context.begin(), context.end());
    pending_bisect_ = false;
    const int level = tree_.cell(pending_).level;
    if (t_ == 1) {
        log(level, Branch::Initial, 0.5);
        return 0.5;
    }

    const CellStats& s = tree_.stats(pending_);
    const std::uint64_t n = s.count;
    const bool is_root = pending_ == CellTree::kRoot;
    const std::uint64_t n_parent = is_root ? n : s.frozen_parent_count;
    const double parent_sum = is_root ? s.valuation_sum : s.frozen_parent_sum;

    double price = 0.5;
    Branch branch = Branch::Prior;
    if (n >= n_parent && n > 0) {
        price = average(s.valuation_sum, n);
        branch = Branch::CellAverage;
    } else if (n < n_parent) {
        price = average(parent_sum, n_parent);
        branch = Branch::ParentAverage;
    }
    // sqrt(n) >= 2^i  <=>  n >= 4^i, with n counted before this round
    pending_bisect_ = level < kMaxLevel && reaches_power_of_two(n, 2 * level);
    log(level, branch, price);
    return price;
}

void BiAve::observe(const Feedback& feedback) {
    expect(FeedbackKind::Full, feedback);
    const auto& fb = std::get<FullFeedback>(feedback);
    const double s = fb.v + fb.w;
    CellStats& cs = tree_.stats(pending_);
    ++cs.count;
    cs.valuation_sum += s;
    if (pending_bisect_) {
        // The frozen snapshot covers rounds up to and including the bisection round.
        tree_.bisect_node(pending_, t_, SnapshotSource::Contexts);
        log_bisection(tree_.cell(pending_));
        CellStats& child = tree_.stats(tree_.locate(pending_context_));
        ++child.count;
        child.valuation_sum += s;
        pending_bisect_ = false;
    }
}

ExBis::ExBis(std::size_t dim, RngStream rng) : tree_(dim), rng_(rng), records_(1) {}

double ExBis::post_price(std::span<const double> context) {
    ++t_;
    pending_ = tree_.locate(context);
    pending_context_.assign(context.begin(), context.end());
    const int level = tree_.cell(pending_).level;
    if (t_ == 1) {
        // The first round explores in the root and bisects it.
        pending_explore_ = true;
        pending_bisect_ = true;
        const double u = rng_.uniform();
        log(level, Branch::Explore, u);
        return u;
    }

    const CellStats& s = tree_.stats(pending_);
    pending_explore_ = reaches_power_of_two(s.exploit_count, 4 * level);
    pending_bisect_ = false;
    if (pending_explore_) {
        pending_bisect_ = level < kMaxLevel && reaches_power_of_two(s.explore_count + 1, 2 * level);
        const double u = rng_.uniform();
        log(level, Branch::Explore, u);
        return u;
    }

    const std::uint64_t n = s.explore_count;
    const bool is_root = pending_ == CellTree::kRoot;
    const std::uint64_t n_parent = is_root ? n : s.frozen_parent_count;
    const double parent_sum = is_root ? s.valuation_sum : s.frozen_parent_sum;
    double price = 0.5;
    Branch branch = Branch::Prior;
    if (n >= n_parent && n > 0) {
        price = average(s.valuation_sum, n);
        branch = Branch::ExploitCell;
    } else if (n < n_parent) {
        price = average(parent_sum, n_parent);
        branch = Branch::ExploitParent;
    }
    log(level, branch, price);
    return price;
}

void ExBis::observe(const Feedback& feedback) {
    expect(FeedbackKind::Limited, feedback);
    const auto& fb = std::get<LimitedFeedback>(feedback);
    CellStats& cs = tree_.stats(pending_);
    ++cs.count;
    if (!pending_explore_) {
        ++cs.exploit_count;
        return;
    }
    const double value = (fb.v_accepts ? 1.0 : 0.0) + (fb.w_accepts ? 1.0 : 0.0);
    ++cs.explore_count;
    cs.valuation_sum += value;
    auto& rec = records_[pending_];
    rec.contexts.insert(rec.contexts.end(), pending_context_.begin(), pending_context_.end());
    rec.values.push_back(value);
    if (pending_bisect_) {
        explorations_at_bisection_.push_back(cs.explore_count);
        const auto first = tree_.bisect_node(pending_, t_, SnapshotSource::Explorations);
        log_bisection(tree_.cell(pending_));
        push_down(pending_, first);
        pending_bisect_ = false;
    }
}

void ExBis::push_down(CellTree::NodeId parent, CellTree::NodeId first_child) {
    records_.resize(tree_.node_count());
    Records moved = std::move(records_[parent]);
    records_[parent] = {};
    const std::size_t d = tree_.dim();
    const int child_level = tree_.cell(parent).level + 1;
    for (std::size_t r = 0; r < moved.values.size(); ++r) {
        const std::span<const double> x(moved.contexts.data() + r * d, d);
        std::uint64_t mask = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const auto k = static_cast<std::uint64_t>(std::floor(std::ldexp(x[j], child_level)));
            mask |= (k & 1U) << j;
        }
        const auto child = first_child + mask;
        CellStats& cs = tree_.stats(child);
        ++cs.explore_count;
        cs.valuation_sum += moved.values[r];
        auto& dst = records_[child];
        dst.contexts.insert(dst.contexts.end(), x.begin(), x.end());
        dst.values.push_back(moved.values[r]);
    }
}

OracleLearner::OracleLearner(std::vector<double> market_values, FeedbackKind kind)
    : market_values_(std::move(market_values)), kind_(kind) {}

double OracleLearner::post_price(std::span<const double>) {
    ++t_;
    if (static_cast<std::size_t>(t_) > market_values_.size()) {
        throw StateError("oracle has no market value for round " + std::to_string(t_));
    }
    const double p = market_values_[static_cast<std::size_t>(t_ - 1)];
    log(0, Branch::Oracle, p);
    return p;
}

void OracleLearner::observe(const Feedback& feedback) { expect(kind_, feedback); }

FixedPriceLearner::FixedPriceLearner(double price, FeedbackKind kind) : price_(price), kind_(kind) {
    if (!(price >= 0.0 && price <= 1.0)) throw DomainError("fixed price must lie in [0,1]");
}

double FixedPriceLearner::post_price(std::span<const double>) {
    ++t_;
    log(0, Branch::Fixed, price_);
    return price_;
}

void FixedPriceLearner::observe(const Feedback& feedback) { expect(kind_, feedback); }

UniformPriceLearner::UniformPriceLearner(RngStream rng, FeedbackKind kind) : rng_(rng), kind_(kind) {}

double UniformPriceLearner::post_price(std::span<const double>) {
    ++t_;
    const double p = rng_.uniform();
    log(0, Branch::Uniform, p);
    return p;
}

void UniformPriceLearner::observe(const Feedback& feedback) { expect(kind_, feedback); }

}  // namespace brokerage
