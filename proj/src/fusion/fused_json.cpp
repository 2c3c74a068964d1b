#include "forge/fusion/fused_json.hpp"

#include "forge/common/error.hpp"
#include "forge/graph/graph_json.hpp"

namespace forge::fusion {

using nlohmann::json;

namespace {

constexpr std::string_view kSchemaId = "forge.fused_graph/1";

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> optional_string_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

std::vector<DegradationLabel> labels_from(const json& arr, const std::string& path) {
  std::vector<DegradationLabel> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(graph::degradation_from_json(arr.at(i), path + "[" + std::to_string(i) + "]"));
  return out;
}

json labels_to(const std::vector<DegradationLabel>& labels) {
  json arr = json::array();
  for (const auto& l : labels) arr.push_back(graph::to_json(l));
  return arr;
}

FactBody body_from_json(const json& j, const std::string& path) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "predicate") return graph::predicate_from_json(j.at("predicate"), path + ".predicate");
  if (kind == "edge") return graph::edge_from_json(j.at("edge"), path + ".edge");
  if (kind == "attribute") {
    const json& a = j.at("attribute");
    return AttributeFact{a.at("entity").get<std::string>(), a.at("key").get<std::string>(),
                         a.at("value").get<std::string>()};
  }
  throw SchemaError(path + ".kind", "unknown fact kind '" + kind + "'");
}

}  // namespace

json to_json(const FactBody& body) {
  json j;
  if (const auto* p = std::get_if<Predicate>(&body)) {
    j["kind"] = "predicate";
    j["predicate"] = graph::to_json(*p);
  } else if (const auto* a = std::get_if<AttributeFact>(&body)) {
    j["kind"] = "attribute";
    j["attribute"] = {{"entity", a->entity}, {"key", a->key}, {"value", a->value}};
  } else {
    j["kind"] = "edge";
    j["edge"] = graph::to_json(std::get<RelationEdge>(body));
  }
  return j;
}

json to_json(const TraceEntry& t) {
  return {{"rule", t.rule},
          {"slot", t.slot},
          {"fact_id", t.fact_id},
          {"field", std::string(to_string(t.field))},
          {"event_value", optional_string(t.event_value)},
          {"rgb_value", optional_string(t.rgb_value)},
          {"outcome", t.outcome},
          {"rgb_severe", t.rgb_severe}};
}

json trace_to_json(const FusedGraph& g) {
  json arr = json::array();
  for (const auto& t : g.policy_trace) arr.push_back(to_json(t));
  return arr;
}

json to_json(const FusedGraph& g) {
  json j;
  j["schema"] = std::string(kSchemaId);
  j["frame_ref"] = g.frame_ref;
  j["report"] = {{"severe", g.report.severe},
                 {"labels", labels_to(g.report.labels)},
                 {"degraded_fraction", g.report.degraded_fraction},
                 {"tau", g.report.tau}};
  json entities = json::array();
  for (const auto& e : g.entities) {
    json presence = json::array();
    for (auto m : e.presence) presence.push_back(std::string(graph::to_string(m)));
    entities.push_back({{"name", e.name}, {"presence", presence}, {"degradations", labels_to(e.degradations)}});
  }
  j["entities"] = std::move(entities);
  json facts = json::array();
  for (const auto& f : g.facts) {
    json jf = to_json(f.body);
    jf["id"] = f.id;
    jf["field"] = std::string(to_string(f.field));
    jf["source"] = std::string(to_string(f.source));
    jf["confidence"] = std::string(to_string(f.confidence));
    jf["superseded_by"] = optional_string(f.superseded_by);
    jf["rule"] = f.rule;
    jf["trace_index"] = f.trace_index;
    facts.push_back(std::move(jf));
  }
  j["facts"] = std::move(facts);
  j["policy_trace"] = trace_to_json(g);
  return j;
}

FusedGraph fused_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchemaId) throw SchemaError("$.schema", "unsupported schema id");
    FusedGraph g;
    g.frame_ref = j.at("frame_ref").get<std::int64_t>();
    const json& r = j.at("report");
    g.report.severe = r.at("severe").get<bool>();
    g.report.labels = labels_from(r.at("labels"), "$.report.labels");
    g.report.degraded_fraction = r.at("degraded_fraction").get<double>();
    g.report.tau = r.at("tau").get<double>();
    for (const auto& je : j.at("entities")) {
      FusedEntity e;
      e.name = je.at("name").get<std::string>();
      for (const auto& m : je.at("presence")) e.presence.insert(graph::parse_modality(m.get<std::string>()));
      e.degradations = labels_from(je.at("degradations"), "$.entities");
      g.entities.push_back(std::move(e));
    }
    const json& facts = j.at("facts");
    for (std::size_t i = 0; i < facts.size(); ++i) {
      const json& jf = facts[i];
      const std::string path = "$.facts[" + std::to_string(i) + "]";
      FusedFact f;
      f.body = body_from_json(jf, path);
      f.id = jf.at("id").get<std::string>();
      f.field = parse_field_class(jf.at("field").get<std::string>());
      f.source = parse_source(jf.at("source").get<std::string>());
      f.confidence = parse_confidence(jf.at("confidence").get<std::string>());
      f.superseded_by = optional_string_from(jf.at("superseded_by"));
      f.rule = jf.at("rule").get<std::string>();
      f.trace_index = jf.at("trace_index").get<std::size_t>();
      g.facts.push_back(std::move(f));
    }
    for (const auto& jt : j.at("policy_trace")) {
      TraceEntry t;
      t.rule = jt.at("rule").get<std::string>();
      t.slot = jt.at("slot").get<std::string>();
      t.fact_id = jt.at("fact_id").get<std::string>();
      t.field = parse_field_class(jt.at("field").get<std::string>());
      t.event_value = optional_string_from(jt.at("event_value"));
      t.rgb_value = optional_string_from(jt.at("rgb_value"));
      t.outcome = jt.at("outcome").get<std::string>();
      t.rgb_severe = jt.at("rgb_severe").get<bool>();
      g.policy_trace.push_back(std::move(t));
    }
    for (const auto& f : g.facts)
      if (f.trace_index >= g.policy_trace.size()) throw SchemaError("$.facts", "trace_index out of range");
    return g;
  } catch (const json::exception& e) {
    throw SchemaError("$", e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError("$", e.what());
  }
}

std::string serialize_fused(const FusedGraph& g) { return to_json(g).dump(2) + "\n"; }

FusedGraph deserialize_fused(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return fused_from_json(j);
}

}  // namespace forge::fusion
