#include "brokerage/instances.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "brokerage/error.hpp"
#include "brokerage/serialization.hpp"

namespace brokerage {

namespace {

constexpr std::size_t kExhaustiveLipschitzLimit = 4096;
constexpr std::size_t kRandomLipschitzPairs = 100000;
constexpr double kLipschitzSlack = 1e-12;
constexpr std::size_t kMaxReportedViolations = 16;

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

BrokerageInstance BrokerageInstance::from_rounds(std::size_t dim, std::vector<double> contexts,
                                                 std::vector<double> market_values,
                                                 std::vector<ValuationPair> laws,
                                                 std::vector<std::uint32_t> law_index) {
    if (dim == 0) throw DomainError("instance dimension must be positive");
    if (contexts.size() != dim * market_values.size() || law_index.size() != market_values.size()) {
        throw DomainError("instance arrays have inconsistent lengths");
    }
    for (auto k : law_index) {
        if (k >= laws.size()) throw DomainError("law index out of range");
    }
    BrokerageInstance inst;
    inst.dim_ = dim;
    inst.contexts_ = std::move(contexts);
    inst.market_values_ = std::move(market_values);
    inst.laws_ = std::move(laws);
    inst.law_index_ = std::move(law_index);
    inst.family_ = LawFamily::Table;
    inst.recipe_ = {"explicit", dim, inst.market_values_.size(), nlohmann::json::object(), 0};
    return inst;
}

ValuationPair BrokerageInstance::law(std::size_t t) const {
    switch (family_) {
        case LawFamily::Table: return laws_[law_index_[t]];
        case LawFamily::Window: return make_window_pair(market_values_[t], half_width_);
        case LawFamily::Stepped: return make_stepped_pair(market_values_[t], half_width_);
    }
    throw StateError("unknown law family");
}

std::int64_t BrokerageInstance::law_id(std::size_t t) const {
    return family_ == LawFamily::Table ? static_cast<std::int64_t>(law_index_[t]) : -1;
}

BrokerageInstance make_lattice_instance(FeedbackKind feedback, std::size_t horizon, std::size_t dim,
                                        std::optional<std::vector<int>> signs, RngStream rng) {
    if (dim == 0) throw DomainError("lattice dimension must be positive");
    const std::size_t exponent = dim + (feedback == FeedbackKind::Full ? 2 : 4);
    if (exponent >= 63 || horizon < (std::size_t{1} << exponent)) {
        throw DomainError("lattice instance needs T >= 2^" + std::to_string(exponent));
    }
    const double root = std::pow(static_cast<double>(horizon), 1.0 / static_cast<double>(exponent));
    const std::size_t side = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(root)));
    const std::size_t points = ipow(side, dim);
    const std::size_t block = horizon / points;
    const double epsilon = feedback == FeedbackKind::Full ? 1.0 / std::sqrt(static_cast<double>(block))
                                                          : std::pow(static_cast<double>(block), -0.25);

    if (signs) {
        if (signs->size() != points) {
            throw DomainError("sign vector needs " + std::to_string(points) + " entries");
        }
        for (int s : *signs) {
            if (s != 1 && s != -1) throw DomainError("signs must be +1 or -1");
        }
    } else {
        RngStream sign_rng = rng.substream("instance-signs");
        signs.emplace(points);
        for (auto& s : *signs) s = (sign_rng.next_u64() >> 63) ? 1 : -1;
    }

    BrokerageInstance inst;
    inst.dim_ = dim;
    inst.family_ = BrokerageInstance::LawFamily::Table;
    inst.laws_ = {make_lowerbound_pair(-1, epsilon), make_lowerbound_pair(+1, epsilon)};
    const std::size_t rounds = block * points;
    inst.contexts_.resize(rounds * dim);
    inst.market_values_.resize(rounds);
    inst.law_index_.resize(rounds);
    std::vector<double> point(dim);
    for (std::size_t b = 0; b < points; ++b) {
        // most significant digit is the first coordinate
        std::size_t rest = b;
        for (std::size_t j = dim; j-- > 0;) {
            point[j] = static_cast<double>(rest % side) / static_cast<double>(side);
            rest /= side;
        }
        const std::uint32_t law = (*signs)[b] > 0 ? 1 : 0;
        const double mu = inst.laws_[law].common_mean;
        for (std::size_t r = 0; r < block; ++r) {
            const std::size_t t = b * block + r;
            std::copy(point.begin(), point.end(), inst.contexts_.begin() + static_cast<std::ptrdiff_t>(t * dim));
            inst.market_values_[t] = mu;
            inst.law_index_[t] = law;
        }
    }

    const std::string name = feedback == FeedbackKind::Full ? "lattice-full" : "lattice-limited";
    nlohmann::json params = nlohmann::json::object();
    params["signs"] = *signs;
    inst.recipe_ = {name, dim, horizon, params, rng.key()};
    inst.lattice_ = LatticeLayout{side, block, epsilon, std::move(*signs)};
    return inst;
}

BrokerageInstance make_smooth_instance(std::size_t horizon, std::size_t dim, RngStream rng, double roughness,
                                       const nlohmann::json& params) {
    if (dim == 0) throw DomainError("instance dimension must be positive");
    if (!(roughness >= 0.0 && roughness <= 1.0)) throw DomainError("roughness must lie in [0,1]");
    const std::string family = params.value("family", std::string("window"));
    const double half_width = params.value("half_width", 0.15);
    const auto bumps = params.value("bumps", std::size_t{8});
    if (!(half_width > 0.0 && half_width <= 0.2)) throw DomainError("half_width must lie in (0, 0.2]");

    BrokerageInstance inst;
    inst.dim_ = dim;
    inst.half_width_ = half_width;
    if (family == "window") {
        inst.family_ = BrokerageInstance::LawFamily::Window;
    } else if (family == "stepped") {
        inst.family_ = BrokerageInstance::LawFamily::Stepped;
    } else {
        throw DomainError("unknown smooth law family '" + family + "'");
    }

    // Cone bumps a_k * max(0, r_k - |x - c_k|_inf) with sum |a_k| <= 1 are jointly 1-Lipschitz.
    RngStream shape = rng.substream("market-shape");
    std::vector<double> centers(bumps * dim), radii(bumps), amps(bumps);
    double total = 0.0;
    for (std::size_t k = 0; k < bumps; ++k) {
        for (std::size_t j = 0; j < dim; ++j) centers[k * dim + j] = shape.uniform();
        radii[k] = 0.1 + 0.4 * shape.uniform();
        amps[k] = 2.0 * shape.uniform() - 1.0;
        total += std::abs(amps[k]);
    }
    if (total > 1.0) {
        for (auto& a : amps) a /= total;
    }

    RngStream ctx = rng.substream("contexts");
    inst.contexts_.resize(horizon * dim);
    inst.market_values_.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        double bump = 0.0;
        for (std::size_t j = 0; j < dim; ++j) inst.contexts_[t * dim + j] = ctx.uniform();
        for (std::size_t k = 0; k < bumps; ++k) {
            double dist = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                dist = std::max(dist, std::abs(inst.contexts_[t * dim + j] - centers[k * dim + j]));
            }
            bump += amps[k] * std::max(0.0, radii[k] - dist);
        }
        const double target = std::clamp(0.5 + roughness * bump, 0.2, 0.8);
        // store the law's own mean so posting it is exactly optimal
        inst.market_values_[t] = target;
        inst.market_values_[t] = inst.law(t).common_mean;
    }

    nlohmann::json p = params;
    p["roughness"] = roughness;
    p["family"] = family;
    p["half_width"] = half_width;
    p["bumps"] = bumps;
    inst.recipe_ = {"smooth", dim, horizon, p, rng.key()};
    return inst;
}

BrokerageInstance build_instance(const InstanceRecipe& recipe) {
    const RngStream rng(recipe.seed);
    if (recipe.constructor == "lattice-full" || recipe.constructor == "lattice-limited") {
        const auto kind = recipe.constructor == "lattice-full" ? FeedbackKind::Full : FeedbackKind::Limited;
        std::optional<std::vector<int>> signs;
        if (recipe.params.contains("signs")) signs = recipe.params.at("signs").get<std::vector<int>>();
        return make_lattice_instance(kind, recipe.horizon, recipe.dim, std::move(signs), rng);
    }
    if (recipe.constructor == "smooth") {
        return make_smooth_instance(recipe.horizon, recipe.dim, rng, recipe.params.value("roughness", 0.5),
                                    recipe.params);
    }
    throw DomainError("unknown instance constructor '" + recipe.constructor + "'");
}

nlohmann::json BrokerageInstance::to_json(bool materialize) const {
    nlohmann::json j;
    j["constructor"] = recipe_.constructor;
    j["params"] = recipe_.params;
    j["seed"] = recipe_.seed;
    j["dim"] = dim_;
    j["horizon"] = recipe_.horizon;
    j["effective_horizon"] = horizon();
    j["materialized"] = materialize;
    if (materialize) {
        nlohmann::json rounds;
        rounds["contexts"] = contexts_;
        rounds["market_values"] = market_values_;
        nlohmann::json laws = nlohmann::json::array();
        std::vector<std::uint32_t> index(horizon());
        if (family_ == LawFamily::Table) {
            for (const auto& l : laws_) laws.push_back(pair_to_json(l));
            index = law_index_;
        } else {
            for (std::size_t t = 0; t < horizon(); ++t) {
                laws.push_back(pair_to_json(law(t)));
                index[t] = static_cast<std::uint32_t>(t);
            }
        }
        rounds["laws"] = laws;
        rounds["law_index"] = index;
        j["rounds"] = rounds;
    }
    return j;
}

BrokerageInstance BrokerageInstance::from_json(const nlohmann::json& j) {
    if (j.value("materialized", false)) {
        const auto& r = j.at("rounds");
        std::vector<ValuationPair> laws;
        for (const auto& l : r.at("laws")) laws.push_back(pair_from_json(l));
        auto inst = from_rounds(j.at("dim").get<std::size_t>(), r.at("contexts").get<std::vector<double>>(),
                                r.at("market_values").get<std::vector<double>>(), std::move(laws),
                                r.at("law_index").get<std::vector<std::uint32_t>>());
        inst.recipe_ = {j.at("constructor").get<std::string>(), inst.dim_, j.at("horizon").get<std::size_t>(),
                        j.at("params"), j.at("seed").get<std::uint64_t>()};
        return inst;
    }
    InstanceRecipe recipe{j.at("constructor").get<std::string>(), j.at("dim").get<std::size_t>(),
                          j.at("horizon").get<std::size_t>(), j.value("params", nlohmann::json::object()),
                          j.at("seed").get<std::uint64_t>()};
    return build_instance(recipe);
}

namespace {

void check_lipschitz_pair(const BrokerageInstance& inst, std::size_t a, std::size_t b,
                          std::vector<Violation>& out, std::size_t& reported) {
    const auto xa = inst.context(a);
    const auto xb = inst.context(b);
    double dist = 0.0;
    for (std::size_t j = 0; j < inst.dim(); ++j) dist = std::max(dist, std::abs(xa[j] - xb[j]));
    const double gap = std::abs(inst.market_value(a) - inst.market_value(b));
    const double margin = gap - inst.lipschitz_constant() * dist;
    if (margin > kLipschitzSlack && reported < kMaxReportedViolations) {
        ++reported;
        out.push_back({2, {a, b}, margin,
                       "market values differ by " + std::to_string(gap) + " at context distance " +
                           std::to_string(dist)});
    }
}

}  // namespace

std::vector<Violation> validate(const BrokerageInstance& inst) {
    std::vector<Violation> out;
    const std::size_t T = inst.horizon();
    const std::size_t d = inst.dim();

    std::size_t reported = 0;
    for (std::size_t t = 0; t < T && reported < kMaxReportedViolations; ++t) {
        for (std::size_t j = 0; j < d; ++j) {
            const double x = inst.context(t)[j];
            if (!(x >= 0.0 && x < 1.0)) {
                ++reported;
                out.push_back({1, {t}, x < 0.0 ? -x : x - 1.0, "context coordinate " + std::to_string(x) +
                                                                   " outside [0,1)"});
                break;
            }
        }
    }

    reported = 0;
    if (T <= kExhaustiveLipschitzLimit) {
        for (std::size_t a = 0; a < T; ++a) {
            for (std::size_t b = a + 1; b < T; ++b) check_lipschitz_pair(inst, a, b, out, reported);
        }
    } else {
        RngStream rng(0x11b5c417ULL);
        for (std::size_t k = 0; k < kRandomLipschitzPairs; ++k) {
            const std::size_t a = rng.next_u64() % T;
            const std::size_t b = rng.next_u64() % T;
            if (a != b) check_lipschitz_pair(inst, std::min(a, b), std::max(a, b), out, reported);
        }
    }

    reported = 0;
    struct LawSummary {
        double left_mean, right_mean, bound;
    };
    std::vector<std::optional<LawSummary>> cache;
    for (std::size_t t = 0; t < T && reported < kMaxReportedViolations; ++t) {
        const auto id = inst.law_id(t);
        LawSummary s{};
        if (id >= 0 && static_cast<std::size_t>(id) < cache.size() && cache[static_cast<std::size_t>(id)]) {
            s = *cache[static_cast<std::size_t>(id)];
        } else {
            const ValuationPair law = inst.law(t);
            s = {law.left.mean(), law.right.mean(), law.density_bound()};
            if (id >= 0) {
                if (cache.size() <= static_cast<std::size_t>(id)) cache.resize(static_cast<std::size_t>(id) + 1);
                cache[static_cast<std::size_t>(id)] = s;
            }
        }
        const double mu = inst.market_value(t);
        const double gap = std::max(std::abs(s.left_mean - mu), std::abs(s.right_mean - mu));
        if (!(gap <= kDensityTolerance) || !std::isfinite(s.bound)) {
            ++reported;
            out.push_back({3, {t}, gap, "valuation laws do not have mean " + std::to_string(mu)});
        }
    }
    return out;
}

}  // namespace brokerage
