#include "forge/graph/scene_graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "forge/common/error.hpp"
#include "forge/graph/canonical.hpp"

namespace forge::graph {

std::string_view to_string(Modality m) { return m == Modality::event ? "event" : "rgb"; }

std::string_view to_string(Severity s) { return s == Severity::mild ? "mild" : "severe"; }

std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::hierarchical: return "hierarchical";
    case RelationKind::attribute: return "attribute";
    case RelationKind::spatial: return "spatial";
    case RelationKind::temporal: return "temporal";
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  if (s == "event") return Modality::event;
  if (s == "rgb") return Modality::rgb;
  throw std::invalid_argument("unknown modality '" + std::string(s) + "'");
}

std::optional<Severity> parse_severity(std::string_view s) {
  if (s == "mild") return Severity::mild;
  if (s == "severe") return Severity::severe;
  return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view s) {
  if (s == "hierarchical") return RelationKind::hierarchical;
  if (s == "attribute") return RelationKind::attribute;
  if (s == "spatial") return RelationKind::spatial;
  if (s == "temporal") return RelationKind::temporal;
  return std::nullopt;
}

namespace {
constexpr std::pair<std::string_view, DegradationKind> kKinds[] = {
    {"low_light", DegradationKind::low_light},
    {"overexposure", DegradationKind::overexposure},
    {"glare", DegradationKind::glare},
    {"motion_blur", DegradationKind::motion_blur},
    {"noise", DegradationKind::noise},
};
}  // namespace

DegradationLabel DegradationLabel::from_token(std::string_view token, Severity severity) {
  for (const auto& [name, kind] : kKinds)
    if (token == name) return {kind, "", severity};
  return {DegradationKind::other, std::string(token), severity};
}

std::string DegradationLabel::token() const {
  for (const auto& [name, k] : kKinds)
    if (k == kind) return std::string(name);
  return tag;
}

bool is_arg_role(std::string_view key) {
  return std::find(std::begin(kArgRoles), std::end(kArgRoles), key) != std::end(kArgRoles);
}

const std::string& Predicate::subject() const {
  static const std::string kEmpty;
  auto it = args.find("subject");
  return it == args.end() ? kEmpty : it->second;
}

std::optional<std::string_view> Predicate::arg(std::string_view key) const {
  auto it = args.find(std::string(key));
  if (it == args.end()) return std::nullopt;
  return it->second;
}

SceneGraph SceneGraph::create(Modality modality, std::vector<EntityNode> entities, std::vector<Predicate> predicates,
                              std::vector<RelationEdge> edges, std::int64_t frame_ref) {
  std::sort(entities.begin(), entities.end(),
            [](const EntityNode& a, const EntityNode& b) { return a.canonical_name < b.canonical_name; });
  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& e = entities[i];
    const std::string path = "entities[" + e.canonical_name + "]";
    if (e.canonical_name.empty()) throw SchemaError(path, "empty canonical_name");
    if (canonicalize_entity(e.canonical_name) != e.canonical_name) {
      throw SchemaError(path, "canonical_name '" + e.canonical_name + "' is not normalized");
    }
    if (e.id.empty()) throw SchemaError(path, "empty id");
    if (i > 0 && entities[i - 1].canonical_name == e.canonical_name) {
      throw SchemaError(path, "duplicate canonical_name");
    }
    if (!ids.insert(e.id).second) throw SchemaError(path, "duplicate id '" + e.id + "'");
  }
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    const auto& p = predicates[i];
    const std::string path = "predicates[" + std::to_string(i) + "]";
    if (p.verb.empty()) throw SchemaError(path, "empty verb");
    if (p.subject().empty()) throw SchemaError(path, "missing subject argument");
    if (!ids.contains(p.subject())) throw SchemaError(path, "subject '" + p.subject() + "' is not an entity");
    if (auto target = p.arg("target"); target && !ids.contains(*target)) {
      throw SchemaError(path, "target '" + std::string(*target) + "' is not an entity");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const std::string path = "edges[" + std::to_string(i) + "]";
    if (!ids.contains(e.from_id)) throw SchemaError(path, "unknown endpoint '" + e.from_id + "'");
    if (!ids.contains(e.to_id)) throw SchemaError(path, "unknown endpoint '" + e.to_id + "'");
  }
  std::stable_sort(edges.begin(), edges.end(), [](const RelationEdge& a, const RelationEdge& b) {
    return std::tie(a.from_id, a.kind, a.to_id, a.label) < std::tie(b.from_id, b.kind, b.to_id, b.label);
  });

  SceneGraph g;
  g.modality_ = modality;
  g.entities_ = std::move(entities);
  g.predicates_ = std::move(predicates);
  g.edges_ = std::move(edges);
  g.frame_ref_ = frame_ref;
  return g;
}

const EntityNode* SceneGraph::find(std::string_view id) const {
  auto it = std::lower_bound(entities_.begin(), entities_.end(), id,
                             [](const EntityNode& e, std::string_view name) { return e.canonical_name < name; });
  if (it != entities_.end() && it->canonical_name == id) return &*it;
  // ids normally equal canonical names; fall back to a scan for hand-built graphs
  for (const auto& e : entities_)
    if (e.id == id) return &e;
  return nullptr;
}

}  // namespace forge::graph
