#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge::graph {

enum class Modality { event, rgb };
enum class DegradationKind { low_light, overexposure, glare, motion_blur, noise, other };
enum class Severity { mild, severe };
enum class RelationKind { hierarchical, attribute, spatial, temporal };

std::string_view to_string(Modality m);
std::string_view to_string(Severity s);
std::string_view to_string(RelationKind k);
Modality parse_modality(std::string_view s);
std::optional<Severity> parse_severity(std::string_view s);
std::optional<RelationKind> parse_relation_kind(std::string_view s);

/// Imaging degradation attached to an entity or edge. `kind == other` keeps its free tag.
struct DegradationLabel {
  DegradationKind kind = DegradationKind::other;
  std::string tag;
  Severity severity = Severity::mild;

  /// Maps a token onto the closed kind set, falling back to other(token).
  static DegradationLabel from_token(std::string_view token, Severity severity);
  /// Token form: the kind name, or the free tag for `other`.
  std::string token() const;

  friend bool operator==(const DegradationLabel&, const DegradationLabel&) = default;
  friend auto operator<=>(const DegradationLabel&, const DegradationLabel&) = default;
};

/// Reserved entity carrying frame-wide degradations and layout facts.
inline constexpr std::string_view kSceneEntity = "scene";

struct EntityNode {
  std::string id;
  std::string canonical_name;
  std::string category;
  std::map<std::string, std::string> attributes;
  std::optional<std::string> place;
  std::vector<DegradationLabel> degradations;

  friend bool operator==(const EntityNode&, const EntityNode&) = default;
};

/// Argument roles recognised in predicate tuples, in rendering order.
inline constexpr std::string_view kArgRoles[] = {"subject", "motion", "place", "direction", "target"};
bool is_arg_role(std::string_view key);

struct Predicate {
  std::string verb;
  /// Keys drawn from kArgRoles.
  std::map<std::string, std::string> args;
  /// Any other key=value pairs, preserved verbatim.
  std::map<std::string, std::string> attrs;
  std::optional<std::int64_t> temporal_index;

  const std::string& subject() const;
  std::optional<std::string_view> arg(std::string_view key) const;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct RelationEdge {
  std::string from_id;
  std::string to_id;
  RelationKind kind = RelationKind::spatial;
  std::string label;
  std::vector<DegradationLabel> degradations;

  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

/// Immutable, referentially intact scene graph. The only way to build one is `create`,
/// which validates and puts entities and edges in canonical order.
class SceneGraph {
 public:
  SceneGraph() = default;

  static SceneGraph create(Modality modality, std::vector<EntityNode> entities, std::vector<Predicate> predicates,
                           std::vector<RelationEdge> edges, std::int64_t frame_ref = 0);

  Modality modality() const { return modality_; }
  const std::vector<EntityNode>& entities() const { return entities_; }
  const std::vector<Predicate>& predicates() const { return predicates_; }
  const std::vector<RelationEdge>& edges() const { return edges_; }
  std::int64_t frame_ref() const { return frame_ref_; }

  const EntityNode* find(std::string_view id) const;
  bool empty() const { return entities_.empty() && predicates_.empty() && edges_.empty(); }

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;

 private:
  Modality modality_ = Modality::rgb;
  std::vector<EntityNode> entities_;
  std::vector<Predicate> predicates_;
  std::vector<RelationEdge> edges_;
  std::int64_t frame_ref_ = 0;
};

}  // namespace forge::graph
