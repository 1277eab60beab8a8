#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "scl/beta.hpp"
#include "scl/coupling.hpp"
#include "scl/propagation.hpp"

namespace scl {

/// Profile document:
///   {"sectors":["perc","plan"], "roles":{"perc":"perceptual"},
///    "max_level":4, "levels":{"0":[[...],[...]]}}
/// A non-default coupling bound is carried in an optional "g_max" key.
std::string serialize_profile(const CouplingProfile& p);
CouplingProfile parse_profile(const std::string& text);
nlohmann::json profile_to_json(const CouplingProfile& p);
CouplingProfile profile_from_json(const nlohmann::json& doc);

/// Operator document: {"kind":"entrywise","factors":[[...]]} or
/// {"kind":"dense","matrix":[[...]]}.
nlohmann::json operator_to_json(const PropagationOperator& op);
PropagationOperator operator_from_json(const nlohmann::json& doc);
PropagationOperator parse_operator(const std::string& text);
std::string serialize_operator(const PropagationOperator& op);

/// Beta document: {"kind":"linear","operator":{...}} or
/// {"kind":"tabulated","polys":{"perc->plan":[0,-0.3]}} with coefficients
/// in ascending degree. Tabulated entries need a registry to resolve names.
BetaField beta_from_json(const nlohmann::json& doc, const SectorRegistry& registry);
BetaField parse_beta(const std::string& text, const SectorRegistry& registry);

/// Load a JSON document from a file; throws IoError / ParseError.
nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace scl
