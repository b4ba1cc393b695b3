#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "brokerage/instances.hpp"
#include "brokerage/learners.hpp"

namespace brokerage {

struct RoundRecord {
    std::int64_t t = 0;
    std::vector<double> context;
    double price = 0.0;
    double v = 0.0;
    double w = 0.0;
    Feedback feedback;
    double realized_gft = 0.0;
    double expected_gft = 0.0;
    double regret = 0.0;           // expected_gft(mu_t) - expected_gft(P_t)
    double realized_regret = 0.0;  // realized_gft(mu_t) - realized_gft(P_t)
};

// Learner posted a non-finite or out-of-range price.
class LearnerFault : public std::runtime_error {
public:
    LearnerFault(std::int64_t round, const std::string& what) : std::runtime_error(what), round_(round) {}
    [[nodiscard]] std::int64_t round() const { return round_; }

private:
    std::int64_t round_;
};

// Per-round callback; lets sweeps aggregate without storing every record.
using RoundSink = std::function<void(const RoundRecord&)>;

// Plays the brokerage protocol for every round of `instance`.
void simulate(Learner& learner, const BrokerageInstance& instance, FeedbackKind feedback, RngStream valuations,
              const RoundSink& sink);
std::vector<RoundRecord> run_episode(Learner& learner, const BrokerageInstance& instance, FeedbackKind feedback,
                                     RngStream valuations);

enum class Algo { BiAve, ExBis, Oracle, Fixed, Uniform };

std::string_view to_string(Algo a);
Algo parse_algo(std::string_view text);
// Feedback the algorithm requires, or nullopt when it accepts either.
std::optional<FeedbackKind> required_feedback(Algo a);

struct SweepSpec {
    Algo algo = Algo::BiAve;
    FeedbackKind feedback = FeedbackKind::Full;
    std::size_t dim = 1;
    std::vector<std::size_t> horizons;
    std::size_t seeds = 1;
    std::string instance = "lattice-full";
    nlohmann::json instance_params = nlohmann::json::object();
    std::uint64_t master_seed = 1;
    std::size_t workers = 1;
    double fixed_price = 0.5;
    std::size_t bootstrap_resamples = 1000;
};

// Streams of one (horizon, seed) cell of a sweep.
struct RunStreams {
    RngStream instance;
    RngStream learner;
    RngStream valuations;
};

RunStreams run_streams(std::uint64_t master_seed, std::size_t horizon, std::size_t seed);

std::unique_ptr<Learner> make_learner(const SweepSpec& spec, const BrokerageInstance& instance, RngStream rng);

// Checkpoints: grid horizons <= T, T itself, and 64 log-spaced rounds.
std::vector<std::size_t> checkpoints_for(std::size_t horizon, const std::vector<std::size_t>& grid);

struct Trajectory {
    std::size_t horizon = 0;            // requested
    std::size_t effective_horizon = 0;  // rounds actually played
    std::size_t seed = 0;
    std::vector<std::size_t> checkpoints;
    std::vector<double> cum_regret;
    std::vector<double> cum_realized_regret;

    [[nodiscard]] double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

// Ordinary least squares of log(y) on log(x). Requires positive inputs and >= 2 points.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ExperimentResult {
    SweepSpec spec;
    std::vector<Trajectory> runs;  // ordered by (horizon index, seed)
    std::vector<double> effective_horizons;
    std::vector<double> mean_regret;
    std::vector<double> stderr_regret;
    std::vector<double> median_regret;
    std::vector<double> max_regret;
    bool degenerate = false;  // some mean regret is ~0, no slope reported
    std::optional<SlopeFit> fit;
    std::optional<SlopeFit> median_fit;
    std::optional<double> slope_ci_low;
    std::optional<double> slope_ci_high;

    [[nodiscard]] const Trajectory& run(std::size_t horizon_index, std::size_t seed) const {
        return runs[horizon_index * spec.seeds + seed];
    }
};

// An episode failed inside a sweep.
class EpisodeError : public std::runtime_error {
public:
    EpisodeError(std::size_t horizon, std::size_t seed, std::int64_t round, const std::string& what,
                 std::vector<TranscriptRow> transcript);
    [[nodiscard]] std::size_t horizon() const { return horizon_; }
    [[nodiscard]] std::size_t seed() const { return seed_; }
    [[nodiscard]] std::int64_t round() const { return round_; }
    [[nodiscard]] const std::vector<TranscriptRow>& transcript() const { return transcript_; }

private:
    std::size_t horizon_;
    std::size_t seed_;
    std::int64_t round_;
    std::vector<TranscriptRow> transcript_;
};

// Runs one episode per (horizon, seed), in parallel over spec.workers threads.
ExperimentResult sweep(const SweepSpec& spec);

// Theoretical regret exponent for the algorithm, if it has one.
std::optional<double> theory_slope(Algo algo, std::size_t dim);

void write_sweep_csv(const ExperimentResult& result, std::ostream& os, const std::string& header_comment = {});
nlohmann::json summary_json(const ExperimentResult& result);
void write_transcript_csv(const std::vector<TranscriptRow>& rows, std::ostream& os);

}  // namespace brokerage
