#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "brokerage/harness.hpp"

namespace brokerage {

// Sweep configuration as read from JSON or command-line flags.
struct RunConfig {
    std::string algo = "biave";
    std::string feedback = "full";
    std::size_t dim = 1;
    std::vector<std::size_t> horizons;
    std::size_t seeds = 1;
    std::string instance = "lattice-full";
    nlohmann::json instance_params = nlohmann::json::object();
    std::string out_dir = "results";
    std::size_t workers = 0;  // 0: available parallelism
    std::uint64_t master_seed = 1;
    double fixed_price = 0.5;
};

// Throws ConfigError naming the offending field.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
void validate(const RunConfig& c);
SweepSpec to_sweep_spec(const RunConfig& c);

// "4096,8192,16384" -> {4096, 8192, 16384}
std::vector<std::size_t> parse_horizon_list(const std::string& text);

// Entry point of the command-line tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace brokerage
