#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "brokerage/distributions.hpp"
#include "brokerage/learners.hpp"
#include "brokerage/rng.hpp"

namespace brokerage {

// How to regenerate an instance: constructor name, parameters, and rng key.
struct InstanceRecipe {
    std::string constructor;  // "lattice-full", "lattice-limited", "smooth"
    std::size_t dim = 1;
    std::size_t horizon = 0;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 0;
};

// Extra facts about lattice instances.
struct LatticeLayout {
    std::size_t side = 0;        // K, points per axis
    std::size_t block_length = 0;  // n, rounds per lattice point
    double epsilon = 0.0;
    std::vector<int> signs;      // one per lattice point, lexicographic
};

// A finite sequence of contexts in [0,1)^d with per-round valuation laws whose
// common mean is the round's market value.
class BrokerageInstance {
public:
    enum class LawFamily { Table, Window, Stepped };

    // Instance with explicitly listed laws; law_index[t] selects the law of round t.
    static BrokerageInstance from_rounds(std::size_t dim, std::vector<double> contexts,
                                         std::vector<double> market_values, std::vector<ValuationPair> laws,
                                         std::vector<std::uint32_t> law_index);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    // Number of rounds actually generated (may be below the requested horizon).
    [[nodiscard]] std::size_t horizon() const { return market_values_.size(); }
    [[nodiscard]] double lipschitz_constant() const { return 1.0; }

    [[nodiscard]] std::span<const double> context(std::size_t t) const {
        return {contexts_.data() + t * dim_, dim_};
    }
    [[nodiscard]] double market_value(std::size_t t) const { return market_values_[t]; }
    [[nodiscard]] const std::vector<double>& market_values() const { return market_values_; }
    [[nodiscard]] ValuationPair law(std::size_t t) const;
    // Rounds sharing a law id share the law; -1 when laws are generated per round.
    [[nodiscard]] std::int64_t law_id(std::size_t t) const;

    [[nodiscard]] const InstanceRecipe& recipe() const { return recipe_; }
    [[nodiscard]] const std::optional<LatticeLayout>& lattice() const { return lattice_; }

    // Recipe plus effective horizon; with `materialize` also every round.
    [[nodiscard]] nlohmann::json to_json(bool materialize) const;
    static BrokerageInstance from_json(const nlohmann::json& j);

private:
    friend BrokerageInstance make_lattice_instance(FeedbackKind, std::size_t, std::size_t,
                                                   std::optional<std::vector<int>>, RngStream);
    friend BrokerageInstance make_smooth_instance(std::size_t, std::size_t, RngStream, double,
                                                  const nlohmann::json&);

    std::size_t dim_ = 1;
    std::vector<double> contexts_;
    std::vector<double> market_values_;
    LawFamily family_ = LawFamily::Table;
    std::vector<ValuationPair> laws_;
    std::vector<std::uint32_t> law_index_;
    double half_width_ = 0.15;
    InstanceRecipe recipe_;
    std::optional<LatticeLayout> lattice_;
};

// Lower-bound lattice environment. K = round(T^(1/(d+2))) for full feedback,
// round(T^(1/(d+4))) for limited feedback (at least 2); n = floor(T / K^d) rounds
// per lattice point; epsilon = n^(-1/2) resp. n^(-1/4). Each lattice point gets
// a sign s and both traders draw from the tilted uniform density with parameter
// s * epsilon. Signs are drawn from `rng` unless supplied.
BrokerageInstance make_lattice_instance(FeedbackKind feedback, std::size_t horizon, std::size_t dim,
                                        std::optional<std::vector<int>> signs, RngStream rng);

// Benign instance: uniform contexts and a random 1-Lipschitz market value
// 1/2 + roughness * (signed sum of cone bumps), clipped to [0.2, 0.8].
// params: {"roughness": r in [0,1], "family": "window"|"stepped", "half_width": h, "bumps": k}
BrokerageInstance make_smooth_instance(std::size_t horizon, std::size_t dim, RngStream rng, double roughness,
                                       const nlohmann::json& params = nlohmann::json::object());

BrokerageInstance build_instance(const InstanceRecipe& recipe);

struct Violation {
    int item = 0;  // 1: contexts, 2: Lipschitz market values, 3: valuation laws
    std::vector<std::size_t> rounds;
    double margin = 0.0;  // worst excess over the allowed value
    std::string message;
};

// Checks the three model assumptions. Lipschitz pairs are checked exhaustively
// for horizons up to 4096 and on 10^5 random pairs otherwise.
std::vector<Violation> validate(const BrokerageInstance& instance);

}  // namespace brokerage
