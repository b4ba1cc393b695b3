#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "brokerage/dyadic_partition.hpp"
#include "brokerage/rng.hpp"

namespace brokerage {

enum class FeedbackKind { Full, Limited };

std::string_view to_string(FeedbackKind kind);
FeedbackKind parse_feedback_kind(std::string_view text);

// Both valuations revealed after the round.
struct FullFeedback {
    double v = 0.0;
    double w = 0.0;
};

// Only the willingness bits [P <= V] and [P <= W].
struct LimitedFeedback {
    bool v_accepts = false;
    bool w_accepts = false;
};

using Feedback = std::variant<FullFeedback, LimitedFeedback>;

FeedbackKind kind_of(const Feedback& fb);

// Which rule produced a posted price.
enum class Branch {
    Initial,        // first round
    CellAverage,    // average over the terminal cell's own observations
    ParentAverage,  // average frozen from the parent at its bisection
    Prior,          // no data anywhere yet: 1/2
    ExploitCell,
    ExploitParent,
    Explore,        // uniform exploration price
    Oracle,
    Fixed,
    Uniform,
};

std::string_view to_string(Branch b);

struct TranscriptRow {
    std::int64_t t = 0;
    int level = 0;
    Branch branch = Branch::Initial;
    double price = 0.0;
    bool bisected = false;
};

struct BisectionEvent {
    std::int64_t t = 0;
    DyadicCell cell;

    friend bool operator==(const BisectionEvent&, const BisectionEvent&) = default;
};

// Online broker. Each round: post_price(context) followed by observe(feedback).
class Learner {
public:
    virtual ~Learner() = default;

    [[nodiscard]] virtual std::string_view name() const = 0;
    [[nodiscard]] virtual FeedbackKind feedback_kind() const = 0;

    virtual double post_price(std::span<const double> context) = 0;
    virtual void observe(const Feedback& feedback) = 0;

    [[nodiscard]] std::int64_t round() const { return t_; }

    void record_transcript(bool on) { recording_ = on; }
    [[nodiscard]] const std::vector<TranscriptRow>& transcript() const { return transcript_; }
    [[nodiscard]] const std::vector<BisectionEvent>& bisections() const { return bisections_; }

protected:
    void log(int level, Branch branch, double price) {
        if (recording_) transcript_.push_back({t_, level, branch, price, false});
    }
    void log_bisection(const DyadicCell& cell) {
        bisections_.push_back({t_, cell});
        if (recording_ && !transcript_.empty()) transcript_.back().bisected = true;
    }
    void expect(FeedbackKind kind, const Feedback& fb) const;

    std::int64_t t_ = 0;

private:
    bool recording_ = false;
    std::vector<TranscriptRow> transcript_;
    std::vector<BisectionEvent> bisections_;
};

// Full-feedback learner: posts averages of observed valuations over its
// terminal cell (or its parent's frozen snapshot while the cell is young) and
// bisects a level-i cell once it has seen 4^i contexts.
class BiAve final : public Learner {
public:
    explicit BiAve(std::size_t dim);

    [[nodiscard]] std::string_view name() const override { return "biave"; }
    [[nodiscard]] FeedbackKind feedback_kind() const override { return FeedbackKind::Full; }
    double post_price(std::span<const double> context) override;
    void observe(const Feedback& feedback) override;

    [[nodiscard]] const CellTree& tree() const { return tree_; }

private:
    CellTree tree_;
    CellTree::NodeId pending_ = CellTree::kRoot;
    bool pending_bisect_ = false;
    std::vector<double> pending_context_;
};

// Limited-feedback learner: in a level-i cell exploits the indicator-average
// estimate for 16^i rounds, then posts uniform exploration prices until the cell
// holds 4^i exploration records, at which point it is bisected and its records
// are handed down to the children containing them.
class ExBis final : public Learner {
public:
    ExBis(std::size_t dim, RngStream rng);

    [[nodiscard]] std::string_view name() const override { return "exbis"; }
    [[nodiscard]] FeedbackKind feedback_kind() const override { return FeedbackKind::Limited; }
    double post_price(std::span<const double> context) override;
    void observe(const Feedback& feedback) override;

    [[nodiscard]] const CellTree& tree() const { return tree_; }
    // Exploration records held by a cell when it was bisected, keyed by bisection order.
    [[nodiscard]] const std::vector<std::uint64_t>& explorations_at_bisection() const { return explorations_at_bisection_; }

private:
    struct Records {
        std::vector<double> contexts;  // dim entries per record
        std::vector<double> values;    // V~ + W~
    };

    void push_down(CellTree::NodeId parent, CellTree::NodeId first_child);

    CellTree tree_;
    RngStream rng_;
    std::vector<Records> records_;
    CellTree::NodeId pending_ = CellTree::kRoot;
    bool pending_explore_ = false;
    bool pending_bisect_ = false;
    std::vector<double> pending_context_;
    std::vector<std::uint64_t> explorations_at_bisection_;
};

// Posts the true market value of each round (known to the oracle only).
class OracleLearner final : public Learner {
public:
    OracleLearner(std::vector<double> market_values, FeedbackKind kind);

    [[nodiscard]] std::string_view name() const override { return "oracle"; }
    [[nodiscard]] FeedbackKind feedback_kind() const override { return kind_; }
    double post_price(std::span<const double> context) override;
    void observe(const Feedback& feedback) override;

private:
    std::vector<double> market_values_;
    FeedbackKind kind_;
};

class FixedPriceLearner final : public Learner {
public:
    FixedPriceLearner(double price, FeedbackKind kind);

    [[nodiscard]] std::string_view name() const override { return "fixed"; }
    [[nodiscard]] FeedbackKind feedback_kind() const override { return kind_; }
    double post_price(std::span<const double> context) override;
    void observe(const Feedback& feedback) override;

private:
    double price_;
    FeedbackKind kind_;
};

class UniformPriceLearner final : public Learner {
public:
    UniformPriceLearner(RngStream rng, FeedbackKind kind);

    [[nodiscard]] std::string_view name() const override { return "uniform"; }
    [[nodiscard]] FeedbackKind feedback_kind() const override { return kind_; }
    double post_price(std::span<const double> context) override;
    void observe(const Feedback& feedback) override;

private:
    RngStream rng_;
    FeedbackKind kind_;
};

}  // namespace brokerage
