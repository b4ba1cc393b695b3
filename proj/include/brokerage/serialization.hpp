#pragma once

#include "json.hpp"

#include "brokerage/distributions.hpp"

namespace brokerage {

// {"breakpoints": [...], "heights": [...]}
nlohmann::json density_to_json(const BoundedDensity& d);
BoundedDensity density_from_json(const nlohmann::json& j);

nlohmann::json pair_to_json(const ValuationPair& p);
ValuationPair pair_from_json(const nlohmann::json& j);

}  // namespace brokerage
