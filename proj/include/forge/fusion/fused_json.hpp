#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "forge/fusion/fusion.hpp"

namespace forge::fusion {

nlohmann::json to_json(const FactBody& body);
nlohmann::json to_json(const TraceEntry& t);
nlohmann::json to_json(const FusedGraph& g);
nlohmann::json trace_to_json(const FusedGraph& g);

/// Throws forge::SchemaError.
FusedGraph fused_from_json(const nlohmann::json& j);

/// Canonical document (schema "forge.fused_graph/1"), trailing newline.
std::string serialize_fused(const FusedGraph& g);
FusedGraph deserialize_fused(std::string_view text);

}  // namespace forge::fusion
