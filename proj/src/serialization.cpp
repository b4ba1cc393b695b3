#include "brokerage/serialization.hpp"

#include "brokerage/error.hpp"

namespace brokerage {

nlohmann::json density_to_json(const BoundedDensity& d) {
    return {{"breakpoints", std::vector<double>(d.breakpoints().begin(), d.breakpoints().end())},
            {"heights", std::vector<double>(d.heights().begin(), d.heights().end())}};
}

BoundedDensity density_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("breakpoints") || !j.contains("heights")) {
        throw DomainError("density JSON needs 'breakpoints' and 'heights'");
    }
    return BoundedDensity::from_pieces(j.at("breakpoints").get<std::vector<double>>(),
                                       j.at("heights").get<std::vector<double>>());
}

nlohmann::json pair_to_json(const ValuationPair& p) {
    return {{"left", density_to_json(p.left)}, {"right", density_to_json(p.right)}};
}

ValuationPair pair_from_json(const nlohmann::json& j) {
    return ValuationPair::make(density_from_json(j.at("left")), density_from_json(j.at("right")));
}

}  // namespace brokerage
