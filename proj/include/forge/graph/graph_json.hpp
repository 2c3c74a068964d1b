#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "forge/graph/scene_graph.hpp"

namespace forge::graph {

nlohmann::json to_json(const DegradationLabel& label);
DegradationLabel degradation_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const Predicate& p);
Predicate predicate_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const RelationEdge& e);
RelationEdge edge_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const SceneGraph& g);
/// Throws forge::SchemaError naming the offending path.
SceneGraph graph_from_json(const nlohmann::json& j);

/// Canonical document: sorted keys, entities by name, two-space indent, trailing newline.
std::string serialize_graph(const SceneGraph& g);
SceneGraph deserialize_graph(std::string_view text);

}  // namespace forge::graph
