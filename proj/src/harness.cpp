#include "brokerage/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "brokerage/error.hpp"
#include "brokerage/gft.hpp"

namespace brokerage {

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

constexpr double kDegenerateRegret = 1e-9;

}  // namespace

void simulate(Learner& learner, const BrokerageInstance& instance, FeedbackKind feedback, RngStream valuations,
              const RoundSink& sink) {
    if (learner.feedback_kind() != feedback) {
        throw ProtocolError(std::string(learner.name()) + " requires " +
                            std::string(to_string(learner.feedback_kind())) + " feedback");
    }
    RoundRecord rec;
    ValuationPair law = instance.law(0);
    std::int64_t law_id = instance.law_id(0);
    double best = expected_gft(law, law.common_mean);
    for (std::size_t t = 0; t < instance.horizon(); ++t) {
        const auto x = instance.context(t);
        const std::int64_t id = instance.law_id(t);
        if (t > 0 && (id < 0 || id != law_id)) {
            law = instance.law(t);
            law_id = id;
            best = expected_gft(law, law.common_mean);
        }

        const double p = learner.post_price(x);
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw LearnerFault(static_cast<std::int64_t>(t + 1),
                               std::string(learner.name()) + " posted invalid price " + format_double(p) +
                                   " at round " + std::to_string(t + 1));
        }
        const double v = law.left.sample(valuations);
        const double w = law.right.sample(valuations);
        if (feedback == FeedbackKind::Full) {
            rec.feedback = FullFeedback{v, w};
        } else {
            rec.feedback = LimitedFeedback{p <= v, p <= w};
        }
        learner.observe(rec.feedback);

        rec.t = static_cast<std::int64_t>(t + 1);
        rec.context.assign(x.begin(), x.end());
        rec.price = p;
        rec.v = v;
        rec.w = w;
        rec.realized_gft = realized_gft(p, v, w);
        rec.expected_gft = expected_gft(law, p);
        rec.regret = best - rec.expected_gft;
        rec.realized_regret = realized_gft(law.common_mean, v, w) - rec.realized_gft;
        sink(rec);
    }
}

std::vector<RoundRecord> run_episode(Learner& learner, const BrokerageInstance& instance, FeedbackKind feedback,
                                     RngStream valuations) {
    std::vector<RoundRecord> out;
    out.reserve(instance.horizon());
    simulate(learner, instance, feedback, valuations, [&](const RoundRecord& r) { out.push_back(r); });
    return out;
}

std::string_view to_string(Algo a) {
    switch (a) {
        case Algo::BiAve: return "biave";
        case Algo::ExBis: return "exbis";
        case Algo::Oracle: return "oracle";
        case Algo::Fixed: return "fixed";
        case Algo::Uniform: return "uniform";
    }
    return "unknown";
}

Algo parse_algo(std::string_view text) {
    for (Algo a : {Algo::BiAve, Algo::ExBis, Algo::Oracle, Algo::Fixed, Algo::Uniform}) {
        if (to_string(a) == text) return a;
    }
    throw ConfigError("unknown algo '" + std::string(text) + "'");
}

std::optional<FeedbackKind> required_feedback(Algo a) {
    if (a == Algo::BiAve) return FeedbackKind::Full;
    if (a == Algo::ExBis) return FeedbackKind::Limited;
    return std::nullopt;
}

RunStreams run_streams(std::uint64_t master_seed, std::size_t horizon, std::size_t seed) {
    const RngStream run = RngStream(master_seed).substream("horizon", horizon).substream("seed", seed);
    return {run.substream("instance"), run.substream("learner"), run.substream("valuations")};
}

std::unique_ptr<Learner> make_learner(const SweepSpec& spec, const BrokerageInstance& instance, RngStream rng) {
    switch (spec.algo) {
        case Algo::BiAve: return std::make_unique<BiAve>(spec.dim);
        case Algo::ExBis: return std::make_unique<ExBis>(spec.dim, rng);
        case Algo::Oracle: return std::make_unique<OracleLearner>(instance.market_values(), spec.feedback);
        case Algo::Fixed: return std::make_unique<FixedPriceLearner>(spec.fixed_price, spec.feedback);
        case Algo::Uniform: return std::make_unique<UniformPriceLearner>(rng, spec.feedback);
    }
    throw ConfigError("unknown algo");
}

std::vector<std::size_t> checkpoints_for(std::size_t horizon, const std::vector<std::size_t>& grid) {
    std::vector<std::size_t> cps;
    if (horizon == 0) return cps;
    constexpr int kLogPoints = 64;
    for (int k = 1; k <= kLogPoints; ++k) {
        const double t = std::pow(static_cast<double>(horizon), static_cast<double>(k) / kLogPoints);
        cps.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(t)), 1, horizon));
    }
    for (auto g : grid) {
        if (g <= horizon) cps.push_back(g);
    }
    cps.push_back(horizon);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    return cps;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs >= 2 paired points");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("log-log fit needs positive values");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("slope fit needs distinct horizons");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        fit.residuals.push_back(r);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

EpisodeError::EpisodeError(std::size_t horizon, std::size_t seed, std::int64_t round, const std::string& what,
                           std::vector<TranscriptRow> transcript)
    : std::runtime_error("episode T=" + std::to_string(horizon) + " seed=" + std::to_string(seed) + ": " + what),
      horizon_(horizon),
      seed_(seed),
      round_(round),
      transcript_(std::move(transcript)) {}

namespace {

Trajectory run_cell(const SweepSpec& spec, std::size_t horizon, std::size_t seed) {
    const RunStreams streams = run_streams(spec.master_seed, horizon, seed);
    const InstanceRecipe recipe{spec.instance, spec.dim, horizon, spec.instance_params, streams.instance.key()};
    const BrokerageInstance instance = build_instance(recipe);
    auto learner = make_learner(spec, instance, streams.learner);

    Trajectory tr;
    tr.horizon = horizon;
    tr.effective_horizon = instance.horizon();
    tr.seed = seed;
    tr.checkpoints = checkpoints_for(instance.horizon(), spec.horizons);
    tr.cum_regret.reserve(tr.checkpoints.size());
    tr.cum_realized_regret.reserve(tr.checkpoints.size());

    double cum = 0.0;
    double cum_realized = 0.0;
    std::size_t next = 0;
    try {
        simulate(*learner, instance, spec.feedback, streams.valuations, [&](const RoundRecord& r) {
            cum += r.regret;
            cum_realized += r.realized_regret;
            if (next < tr.checkpoints.size() && static_cast<std::size_t>(r.t) == tr.checkpoints[next]) {
                tr.cum_regret.push_back(cum);
                tr.cum_realized_regret.push_back(cum_realized);
                ++next;
            }
        });
    } catch (const LearnerFault& fault) {
        // replay with the transcript on for diagnostics
        auto replay = make_learner(spec, instance, streams.learner);
        replay->record_transcript(true);
        try {
            simulate(*replay, instance, spec.feedback, streams.valuations, [](const RoundRecord&) {});
        } catch (const LearnerFault&) {
        }
        throw EpisodeError(horizon, seed, fault.round(), fault.what(), replay->transcript());
    } catch (const std::exception& e) {
        throw EpisodeError(horizon, seed, learner->round(), e.what(), {});
    }
    return tr;
}

}  // namespace

ExperimentResult sweep(const SweepSpec& spec) {
    if (spec.horizons.empty()) throw ConfigError("sweep needs at least one horizon");
    if (!std::is_sorted(spec.horizons.begin(), spec.horizons.end()) ||
        std::adjacent_find(spec.horizons.begin(), spec.horizons.end()) != spec.horizons.end()) {
        throw ConfigError("horizons must be strictly increasing");
    }
    if (spec.seeds == 0) throw ConfigError("need at least one seed");
    if (auto need = required_feedback(spec.algo); need && *need != spec.feedback) {
        throw ConfigError(std::string(to_string(spec.algo)) + " requires " + std::string(to_string(*need)) +
                          " feedback");
    }

    ExperimentResult result;
    result.spec = spec;
    const std::size_t H = spec.horizons.size();
    const std::size_t S = spec.seeds;
    const std::size_t jobs = H * S;
    result.runs.resize(jobs);

    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            try {
                result.runs[j] = run_cell(spec, spec.horizons[j / S], j % S);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    std::size_t workers = spec.workers ? spec.workers : std::max(1U, std::thread::hardware_concurrency());
    workers = std::min(workers, jobs);
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    // report the first failure in job order so the outcome does not depend on scheduling
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t h = 0; h < H; ++h) {
        std::vector<double> finals(S);
        for (std::size_t s = 0; s < S; ++s) finals[s] = result.run(h, s).final_regret();
        const double mean = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(S);
        double var = 0.0;
        for (double f : finals) var += (f - mean) * (f - mean);
        var = S > 1 ? var / static_cast<double>(S - 1) : 0.0;
        result.effective_horizons.push_back(static_cast<double>(result.run(h, 0).effective_horizon));
        result.mean_regret.push_back(mean);
        result.stderr_regret.push_back(std::sqrt(var / static_cast<double>(S)));
        result.median_regret.push_back(median_of(finals));
        // each seed draws its own sign vector on lattice instances
        result.max_regret.push_back(*std::max_element(finals.begin(), finals.end()));
    }

    const auto positive = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x > kDegenerateRegret; });
    };
    result.degenerate = H < 2 || !positive(result.mean_regret);
    if (result.degenerate) return result;

    result.fit = fit_loglog(result.effective_horizons, result.mean_regret);
    if (positive(result.median_regret)) result.median_fit = fit_loglog(result.effective_horizons, result.median_regret);

    if (spec.bootstrap_resamples > 0 && S > 1) {
        RngStream rng = RngStream(spec.master_seed).substream("bootstrap");
        std::vector<double> slopes;
        std::vector<double> means(H);
        for (std::size_t b = 0; b < spec.bootstrap_resamples; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                double sum = 0.0;
                for (std::size_t s = 0; s < S; ++s) sum += result.run(h, rng.next_u64() % S).final_regret();
                means[h] = sum / static_cast<double>(S);
            }
            if (positive(means)) slopes.push_back(fit_loglog(result.effective_horizons, means).slope);
        }
        if (!slopes.empty()) {
            result.slope_ci_low = percentile(slopes, 0.025);
            result.slope_ci_high = percentile(slopes, 0.975);
        }
    }
    return result;
}

std::optional<double> theory_slope(Algo algo, std::size_t dim) {
    const auto d = static_cast<double>(dim);
    if (algo == Algo::BiAve) return d / (d + 2.0);
    if (algo == Algo::ExBis) return (d + 2.0) / (d + 4.0);
    return std::nullopt;
}

void write_sweep_csv(const ExperimentResult& result, std::ostream& os, const std::string& header_comment) {
    if (!header_comment.empty()) os << "# " << header_comment << '\n';
    os << "algo,feedback,d,T,seed,checkpoint_t,cum_regret_analytic,cum_regret_realized\n";
    const auto& spec = result.spec;
    for (const auto& tr : result.runs) {
        for (std::size_t k = 0; k < tr.checkpoints.size(); ++k) {
            os << to_string(spec.algo) << ',' << to_string(spec.feedback) << ',' << spec.dim << ',' << tr.horizon
               << ',' << tr.seed << ',' << tr.checkpoints[k] << ',' << format_double(tr.cum_regret[k]) << ','
               << format_double(tr.cum_realized_regret[k]) << '\n';
        }
    }
}

nlohmann::json summary_json(const ExperimentResult& result) {
    const auto& spec = result.spec;
    nlohmann::json j;
    j["algo"] = to_string(spec.algo);
    j["feedback"] = to_string(spec.feedback);
    j["dim"] = spec.dim;
    j["seeds"] = spec.seeds;
    j["master_seed"] = spec.master_seed;
    j["instance"] = {{"constructor", spec.instance}, {"params", spec.instance_params}};
    j["horizons"] = spec.horizons;
    j["effective_horizons"] = result.effective_horizons;
    j["mean_regret"] = result.mean_regret;
    j["stderr_regret"] = result.stderr_regret;
    j["median_regret"] = result.median_regret;
    j["max_regret"] = result.max_regret;
    j["degenerate"] = result.degenerate;
    if (auto th = theory_slope(spec.algo, spec.dim)) {
        j["theory_slope"] = *th;
    } else {
        j["theory_slope"] = nullptr;
    }
    if (result.fit) {
        j["slope"] = result.fit->slope;
        j["intercept"] = result.fit->intercept;
        j["r_squared"] = result.fit->r_squared;
        j["residuals"] = result.fit->residuals;
    } else {
        j["slope"] = nullptr;
    }
    j["median_slope"] = result.median_fit ? nlohmann::json(result.median_fit->slope) : nlohmann::json(nullptr);
    if (result.slope_ci_low && result.slope_ci_high) {
        j["slope_ci"] = {*result.slope_ci_low, *result.slope_ci_high};
    } else {
        j["slope_ci"] = nullptr;
    }
    return j;
}

void write_transcript_csv(const std::vector<TranscriptRow>& rows, std::ostream& os) {
    os << "t,level,branch,price,bisected\n";
    for (const auto& r : rows) {
        os << r.t << ',' << r.level << ',' << to_string(r.branch) << ',' << format_double(r.price) << ','
           << (r.bisected ? 1 : 0) << '\n';
    }
}

}  // namespace brokerage
