#include "forge/graph/graph_json.hpp"

#include "forge/common/error.hpp"

namespace forge::graph {

using nlohmann::json;

namespace {

constexpr std::string_view kSchemaId = "forge.scene_graph/1";

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

std::string string_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected string");
  return v.get<std::string>();
}

std::map<std::string, std::string> string_map(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_object()) throw SchemaError(path + "." + key, "expected object");
  std::map<std::string, std::string> out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (!it.value().is_string()) throw SchemaError(path + "." + key + "." + it.key(), "expected string");
    out.emplace(it.key(), it.value().get<std::string>());
  }
  return out;
}

const json& array_field(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw SchemaError(path + "." + key, "expected array");
  return v;
}

std::vector<DegradationLabel> degradations_from(const json& j, const std::string& path) {
  std::vector<DegradationLabel> out;
  const json& arr = array_field(j, "degradations", path);
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(degradation_from_json(arr[i], path + ".degradations[" + std::to_string(i) + "]"));
  return out;
}

json degradations_to(const std::vector<DegradationLabel>& labels) {
  json arr = json::array();
  for (const auto& d : labels) arr.push_back(to_json(d));
  return arr;
}

}  // namespace

json to_json(const DegradationLabel& label) {
  json j;
  j["kind"] = label.kind == DegradationKind::other ? "other" : label.token();
  if (label.kind == DegradationKind::other) j["tag"] = label.tag;
  j["severity"] = std::string(to_string(label.severity));
  return j;
}

DegradationLabel degradation_from_json(const json& j, const std::string& path) {
  const std::string kind = string_field(j, "kind", path);
  auto sev = parse_severity(string_field(j, "severity", path));
  if (!sev) throw SchemaError(path + ".severity", "expected mild or severe");
  if (kind == "other") {
    std::string tag = string_field(j, "tag", path);
    if (tag.empty()) throw SchemaError(path + ".tag", "empty tag");
    auto label = DegradationLabel::from_token(tag, *sev);
    if (label.kind != DegradationKind::other) throw SchemaError(path + ".tag", "tag names a closed kind");
    return label;
  }
  auto label = DegradationLabel::from_token(kind, *sev);
  if (label.kind == DegradationKind::other) throw SchemaError(path + ".kind", "unknown kind '" + kind + "'");
  return label;
}

json to_json(const Predicate& p) {
  json j;
  j["verb"] = p.verb;
  j["args"] = p.args;
  j["attrs"] = p.attrs;
  j["temporal_index"] = p.temporal_index ? json(*p.temporal_index) : json(nullptr);
  return j;
}

Predicate predicate_from_json(const json& j, const std::string& path) {
  Predicate p;
  p.verb = string_field(j, "verb", path);
  p.args = string_map(j, "args", path);
  for (const auto& [k, _] : p.args)
    if (!is_arg_role(k)) throw SchemaError(path + ".args." + k, "not an argument role; use attrs");
  p.attrs = string_map(j, "attrs", path);
  for (const auto& [k, _] : p.attrs)
    if (is_arg_role(k)) throw SchemaError(path + ".attrs." + k, "argument role stored in attrs");
  const json& ti = field(j, "temporal_index", path);
  if (ti.is_number_integer()) p.temporal_index = ti.get<std::int64_t>();
  else if (!ti.is_null()) throw SchemaError(path + ".temporal_index", "expected integer or null");
  return p;
}

json to_json(const RelationEdge& e) {
  json j;
  j["from"] = e.from_id;
  j["to"] = e.to_id;
  j["kind"] = std::string(to_string(e.kind));
  j["label"] = e.label;
  j["degradations"] = degradations_to(e.degradations);
  return j;
}

RelationEdge edge_from_json(const json& j, const std::string& path) {
  RelationEdge e;
  e.from_id = string_field(j, "from", path);
  e.to_id = string_field(j, "to", path);
  auto kind = parse_relation_kind(string_field(j, "kind", path));
  if (!kind) throw SchemaError(path + ".kind", "unknown relation kind");
  e.kind = *kind;
  e.label = string_field(j, "label", path);
  e.degradations = degradations_from(j, path);
  return e;
}

json to_json(const SceneGraph& g) {
  json j;
  j["schema"] = std::string(kSchemaId);
  j["modality"] = std::string(to_string(g.modality()));
  j["frame_ref"] = g.frame_ref();
  json entities = json::array();
  for (const auto& e : g.entities()) {
    json je;
    je["id"] = e.id;
    je["canonical_name"] = e.canonical_name;
    je["category"] = e.category;
    je["attributes"] = e.attributes;
    je["place"] = e.place ? json(*e.place) : json(nullptr);
    je["degradations"] = degradations_to(e.degradations);
    entities.push_back(std::move(je));
  }
  j["entities"] = std::move(entities);
  json preds = json::array();
  for (const auto& p : g.predicates()) preds.push_back(to_json(p));
  j["predicates"] = std::move(preds);
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back(to_json(e));
  j["edges"] = std::move(edges);
  return j;
}

SceneGraph graph_from_json(const json& j) {
  const std::string root = "$";
  if (string_field(j, "schema", root) != kSchemaId) throw SchemaError("$.schema", "unsupported schema id");
  Modality modality;
  try {
    modality = parse_modality(string_field(j, "modality", root));
  } catch (const std::invalid_argument& e) {
    throw SchemaError("$.modality", e.what());
  }
  const json& fr = field(j, "frame_ref", root);
  if (!fr.is_number_integer()) throw SchemaError("$.frame_ref", "expected integer");

  std::vector<EntityNode> entities;
  const json& ents = array_field(j, "entities", root);
  for (std::size_t i = 0; i < ents.size(); ++i) {
    const std::string path = "$.entities[" + std::to_string(i) + "]";
    EntityNode e;
    e.id = string_field(ents[i], "id", path);
    e.canonical_name = string_field(ents[i], "canonical_name", path);
    e.category = string_field(ents[i], "category", path);
    e.attributes = string_map(ents[i], "attributes", path);
    const json& place = field(ents[i], "place", path);
    if (place.is_string()) e.place = place.get<std::string>();
    else if (!place.is_null()) throw SchemaError(path + ".place", "expected string or null");
    e.degradations = degradations_from(ents[i], path);
    entities.push_back(std::move(e));
  }
  std::vector<Predicate> predicates;
  const json& preds = array_field(j, "predicates", root);
  for (std::size_t i = 0; i < preds.size(); ++i)
    predicates.push_back(predicate_from_json(preds[i], "$.predicates[" + std::to_string(i) + "]"));
  std::vector<RelationEdge> edges;
  const json& es = array_field(j, "edges", root);
  for (std::size_t i = 0; i < es.size(); ++i)
    edges.push_back(edge_from_json(es[i], "$.edges[" + std::to_string(i) + "]"));

  try {
    return SceneGraph::create(modality, std::move(entities), std::move(predicates), std::move(edges),
                              fr.get<std::int64_t>());
  } catch (const SchemaError& e) {
    throw SchemaError("$." + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  } catch (const Error& e) {
    throw SchemaError("$", e.what());
  }
}

std::string serialize_graph(const SceneGraph& g) { return to_json(g).dump(2) + "\n"; }

SceneGraph deserialize_graph(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return graph_from_json(j);
}

}  // namespace forge::graph
