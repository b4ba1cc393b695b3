#include "brokerage/config.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "brokerage/error.hpp"
#include "brokerage/kernels.hpp"
#include "brokerage/verification.hpp"

namespace brokerage {

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

}  // namespace

std::vector<std::size_t> parse_horizon_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw ConfigError("empty entry in horizon list '" + text + "'");
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("horizon '" + item + "' is not a positive integer");
        }
        if (used != item.size() || v == 0) throw ConfigError("horizon '" + item + "' is not a positive integer");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.algo = field(j, "algo", c.algo);
    c.feedback = field(j, "feedback", c.feedback);
    c.dim = field(j, "dim", c.dim);
    c.horizons = field(j, "horizons", c.horizons);
    c.seeds = field(j, "seeds", c.seeds);
    if (j.contains("instance")) {
        const auto& inst = j.at("instance");
        if (inst.is_string()) {
            c.instance = inst.get<std::string>();
        } else if (inst.is_object()) {
            c.instance = field(inst, "constructor", c.instance);
            if (inst.contains("params")) c.instance_params = inst.at("params");
        } else {
            throw ConfigError("config field 'instance' must be a string or an object");
        }
    }
    c.out_dir = field(j, "out_dir", c.out_dir);
    c.workers = field(j, "workers", c.workers);
    c.master_seed = field(j, "master_seed", c.master_seed);
    c.fixed_price = field(j, "fixed_price", c.fixed_price);
    validate(c);
    return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
    return {{"algo", c.algo},
            {"feedback", c.feedback},
            {"dim", c.dim},
            {"horizons", c.horizons},
            {"seeds", c.seeds},
            {"instance", {{"constructor", c.instance}, {"params", c.instance_params}}},
            {"out_dir", c.out_dir},
            {"workers", c.workers},
            {"master_seed", c.master_seed},
            {"fixed_price", c.fixed_price}};
}

void validate(const RunConfig& c) {
    const Algo algo = parse_algo(c.algo);
    if (c.feedback != "full" && c.feedback != "limited") {
        throw ConfigError("feedback must be 'full' or 'limited', got '" + c.feedback + "'");
    }
    if (auto need = required_feedback(algo); need && to_string(*need) != c.feedback) {
        throw ConfigError(c.algo + " requires " + std::string(to_string(*need)) + " feedback");
    }
    if (c.dim == 0) throw ConfigError("dim must be >= 1");
    if (c.horizons.empty()) throw ConfigError("horizons must not be empty");
    for (std::size_t k = 1; k < c.horizons.size(); ++k) {
        if (c.horizons[k] <= c.horizons[k - 1]) throw ConfigError("horizons must be strictly increasing");
    }
    if (c.seeds == 0) throw ConfigError("seeds must be >= 1");
    if (c.instance != "lattice-full" && c.instance != "lattice-limited" && c.instance != "smooth") {
        throw ConfigError("unknown instance '" + c.instance + "' (lattice-full, lattice-limited, smooth)");
    }
    if (!(c.fixed_price >= 0.0 && c.fixed_price <= 1.0)) throw ConfigError("fixed_price must lie in [0,1]");
    if (!c.instance_params.is_object()) throw ConfigError("instance params must be an object");
}

SweepSpec to_sweep_spec(const RunConfig& c) {
    validate(c);
    SweepSpec s;
    s.algo = parse_algo(c.algo);
    s.feedback = parse_feedback_kind(c.feedback);
    s.dim = c.dim;
    s.horizons = c.horizons;
    s.seeds = c.seeds;
    s.instance = c.instance;
    s.instance_params = c.instance_params;
    s.master_seed = c.master_seed;
    s.workers = c.workers;
    s.fixed_price = c.fixed_price;
    return s;
}

namespace {

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void print_slope_table(const ExperimentResult& r, std::ostream& os) {
    char line[256];
    os << "       T     eff_T      mean_R_T     stderr\n";
    for (std::size_t h = 0; h < r.spec.horizons.size(); ++h) {
        std::snprintf(line, sizeof line, "%8zu  %8.0f  %12.4f  %9.4f\n", r.spec.horizons[h],
                      r.effective_horizons[h], r.mean_regret[h], r.stderr_regret[h]);
        os << line;
    }
    if (r.degenerate || !r.fit) {
        os << "slope: degenerate (regret ~ 0), not fitted\n";
        return;
    }
    std::snprintf(line, sizeof line, "slope %.4f (median-of-seeds %.4f)", r.fit->slope,
                  r.median_fit ? r.median_fit->slope : std::nan(""));
    os << line;
    if (r.slope_ci_low) {
        std::snprintf(line, sizeof line, ", 95%% bootstrap CI [%.4f, %.4f]", *r.slope_ci_low, *r.slope_ci_high);
        os << line;
    }
    if (auto th = theory_slope(r.spec.algo, r.spec.dim)) {
        std::snprintf(line, sizeof line, ", theory %.4f", *th);
        os << line;
    }
    os << '\n';
}

int cmd_run(const RunConfig& cfg) {
    const SweepSpec spec = to_sweep_spec(cfg);
    const std::filesystem::path out = cfg.out_dir;
    std::filesystem::create_directories(out);
    try {
        const ExperimentResult result = sweep(spec);
        {
            std::ofstream csv(out / "sweep.csv");
            write_sweep_csv(result, csv, "brokerage-lab sweep generated " + timestamp());
        }
        {
            std::ofstream js(out / "summary.json");
            js << summary_json(result).dump(2) << '\n';
        }
        print_slope_table(result, std::cout);
        std::cout << "wrote " << (out / "sweep.csv").string() << " and " << (out / "summary.json").string() << '\n';
        return 0;
    } catch (const EpisodeError& e) {
        const auto path = out / "fault_transcript.csv";
        std::ofstream os(path);
        write_transcript_csv(e.transcript(), os);
        std::cerr << "error: " << e.what() << "\ntranscript: " << path.string() << '\n';
        return 1;
    }
}

int cmd_verify(std::size_t pairs, std::uint64_t seed) {
    const auto results = verify_suite(pairs, seed);
    bool ok = true;
    char line[512];
    for (const auto& r : results) {
        std::snprintf(line, sizeof line, "[%s] %-46s cases=%-6zu margin=%+.3e  %s\n", r.passed ? "PASS" : "FAIL",
                      r.name.c_str(), r.cases, r.margin, r.detail.c_str());
        std::cout << line;
        ok = ok && r.passed;
    }
    std::cout << (ok ? "all checks passed" : "some checks FAILED") << " (kernels: "
              << kernels::isa_name(kernels::active_isa()) << ")\n";
    return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Contextual brokerage simulation lab"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path, horizons_text;
    auto* run = app.add_subcommand("run", "Run a regret sweep and fit the scaling exponent");
    run->add_option("--config", config_path, "JSON config file");
    auto* o_algo = run->add_option("--algo", cfg.algo, "biave|exbis|oracle|fixed|uniform");
    auto* o_feedback = run->add_option("--feedback", cfg.feedback, "full|limited");
    auto* o_dim = run->add_option("--dim", cfg.dim, "Context dimension");
    auto* o_horizons = run->add_option("--horizons", horizons_text, "Comma-separated horizons");
    auto* o_seeds = run->add_option("--seeds", cfg.seeds, "Seeds per horizon");
    auto* o_instance = run->add_option("--instance", cfg.instance, "lattice-full|lattice-limited|smooth");
    auto* o_out = run->add_option("--out", cfg.out_dir, "Output directory");
    auto* o_workers = run->add_option("--workers", cfg.workers, "Worker threads (0 = all cores)");
    auto* o_master = run->add_option("--master-seed", cfg.master_seed, "Master seed");
    auto* o_price = run->add_option("--price", cfg.fixed_price, "Price of the fixed baseline");

    std::size_t pairs = 200;
    std::uint64_t verify_seed = 2024;
    auto* verify = app.add_subcommand("verify", "Check the analytic identities and structural invariants");
    verify->add_option("--pairs", pairs, "Random valuation pairs per check");
    verify->add_option("--seed", verify_seed, "Seed of the random pairs");

    RunConfig tcfg;
    std::size_t t_horizon = 4096, t_seed = 0;
    std::string t_out = "transcript.csv", t_tree;
    auto* transcript = app.add_subcommand("transcript", "Dump the per-round transcript of one episode");
    transcript->add_option("--algo", tcfg.algo);
    transcript->add_option("--feedback", tcfg.feedback);
    transcript->add_option("--dim", tcfg.dim);
    transcript->add_option("--instance", tcfg.instance);
    transcript->add_option("--horizon", t_horizon);
    transcript->add_option("--seed", t_seed);
    transcript->add_option("--master-seed", tcfg.master_seed);
    transcript->add_option("--price", tcfg.fixed_price);
    transcript->add_option("--out", t_out, "Transcript CSV path");
    transcript->add_option("--tree", t_tree, "Optional path for the final cell tree dump");

    RunConfig icfg;
    std::size_t i_horizon = 4096, i_seed = 0;
    bool materialize = false;
    std::string i_out = "instance.json";
    auto* instance = app.add_subcommand("instance", "Write an instance description as JSON");
    instance->add_option("--instance", icfg.instance);
    instance->add_option("--dim", icfg.dim);
    instance->add_option("--horizon", i_horizon);
    instance->add_option("--seed", i_seed);
    instance->add_option("--master-seed", icfg.master_seed);
    instance->add_flag("--materialize", materialize, "Store every round");
    instance->add_option("--out", i_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
                nlohmann::json j;
                try {
                    in >> j;
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
                }
                RunConfig from_file = config_from_json(j);
                // explicit flags win over the file
                if (o_algo->count()) from_file.algo = cfg.algo;
                if (o_feedback->count()) from_file.feedback = cfg.feedback;
                if (o_dim->count()) from_file.dim = cfg.dim;
                if (o_seeds->count()) from_file.seeds = cfg.seeds;
                if (o_instance->count()) from_file.instance = cfg.instance;
                if (o_out->count()) from_file.out_dir = cfg.out_dir;
                if (o_workers->count()) from_file.workers = cfg.workers;
                if (o_master->count()) from_file.master_seed = cfg.master_seed;
                if (o_price->count()) from_file.fixed_price = cfg.fixed_price;
                cfg = std::move(from_file);
            }
            if (o_horizons->count()) cfg.horizons = parse_horizon_list(horizons_text);
            if (const char* env = std::getenv("BROKERAGE_LAB_OUT"); env != nullptr && *env != '\0') {
                cfg.out_dir = env;
            }
            validate(cfg);
            return cmd_run(cfg);
        }
        if (*verify) return cmd_verify(pairs, verify_seed);
        if (*transcript) {
            tcfg.horizons = {t_horizon};
            SweepSpec spec = to_sweep_spec(tcfg);
            const RunStreams streams = run_streams(spec.master_seed, t_horizon, t_seed);
            const auto inst = build_instance({spec.instance, spec.dim, t_horizon, spec.instance_params,
                                              streams.instance.key()});
            auto learner = make_learner(spec, inst, streams.learner);
            learner->record_transcript(true);
            int code = 0;
            try {
                simulate(*learner, inst, spec.feedback, streams.valuations, [](const RoundRecord&) {});
            } catch (const LearnerFault& e) {
                std::cerr << "error: " << e.what() << '\n';
                code = 1;
            }
            std::ofstream os(t_out);
            write_transcript_csv(learner->transcript(), os);
            if (!t_tree.empty()) {
                std::ofstream ts(t_tree);
                if (auto* b = dynamic_cast<BiAve*>(learner.get())) b->tree().dump(ts);
                if (auto* e = dynamic_cast<ExBis*>(learner.get())) e->tree().dump(ts);
            }
            std::cout << "wrote " << t_out << '\n';
            return code;
        }
        if (*instance) {
            icfg.horizons = {i_horizon};
            const RunStreams streams = run_streams(icfg.master_seed, i_horizon, i_seed);
            const auto inst = build_instance({icfg.instance, icfg.dim, i_horizon, icfg.instance_params,
                                              streams.instance.key()});
            std::ofstream os(i_out);
            os << inst.to_json(materialize).dump(2) << '\n';
            std::cout << "wrote " << i_out << " (" << inst.horizon() << " rounds)\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace brokerage
