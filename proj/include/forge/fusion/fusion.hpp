#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "forge/graph/scene_graph.hpp"

namespace forge::fusion {

using graph::DegradationLabel;
using graph::Modality;
using graph::Predicate;
using graph::RelationEdge;
using graph::SceneGraph;

inline constexpr double kDefaultTau = 0.3;

enum class FieldClass { motion, appearance, geometry };
/// Which graph a fused fact comes from: G_e, G_r or both (G_e+r).
enum class Source { event, rgb, both };
enum class Confidence { high, low };

std::string_view to_string(FieldClass c);
std::string_view to_string(Source s);
std::string_view to_string(Confidence c);
FieldClass parse_field_class(std::string_view s);
Source parse_source(std::string_view s);
Confidence parse_confidence(std::string_view s);

/// Image-quality verdict drawn only from the RGB graph.
struct DegradationReport {
  bool severe = false;
  std::vector<DegradationLabel> labels;
  /// Degradation-carrying entities and edges over all entities and edges.
  double degraded_fraction = 0.0;
  double tau = kDefaultTau;

  friend bool operator==(const DegradationReport&, const DegradationReport&) = default;
};

/// severe <=> any severe label, or degraded_fraction > tau. Throws std::invalid_argument
/// for an event-modality graph.
DegradationReport diagnose_degradation(const SceneGraph& g_r, double tau = kDefaultTau);

/// `entity.key = value`, including count and position assertions.
struct AttributeFact {
  std::string entity;
  std::string key;
  std::string value;

  friend bool operator==(const AttributeFact&, const AttributeFact&) = default;
};

using FactBody = std::variant<Predicate, AttributeFact, RelationEdge>;

/// Motion: predicates carrying a motion argument and temporal/hierarchical/spatial edges.
/// Geometry: counts, places and positions. Appearance: colour, texture, light state, text,
/// brightness and anything unrecognised.
FieldClass classify_fact_field(const FactBody& fact);

/// Short human-readable rendering, used in traces and captions.
std::string describe(const FactBody& fact);

struct FusedFact {
  std::string id;
  FactBody body;
  FieldClass field = FieldClass::appearance;
  Source source = Source::event;
  Confidence confidence = Confidence::high;
  /// Id of the competing fact that won over this one.
  std::optional<std::string> superseded_by;
  /// Rule that produced this fact; matches policy_trace[trace_index].rule.
  std::string rule;
  std::size_t trace_index = 0;

  friend bool operator==(const FusedFact&, const FusedFact&) = default;
};

struct TraceEntry {
  std::string rule;
  std::string slot;
  std::string fact_id;
  FieldClass field = FieldClass::appearance;
  std::optional<std::string> event_value;
  std::optional<std::string> rgb_value;
  std::string outcome;
  /// Set when the RGB graph was severely degraded at decision time.
  bool rgb_severe = false;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct EntityAlignment {
  std::string name;
  bool in_event = false;
  bool in_rgb = false;

  friend bool operator==(const EntityAlignment&, const EntityAlignment&) = default;
};

/// Exact canonical-name matching; unmatched entities carry single-modality presence.
std::vector<EntityAlignment> align_entities(const SceneGraph& g_e, const SceneGraph& g_r);

struct FusedEntity {
  std::string name;
  std::set<Modality> presence;
  std::vector<DegradationLabel> degradations;

  friend bool operator==(const FusedEntity&, const FusedEntity&) = default;
};

struct FusedGraph {
  std::vector<FusedEntity> entities;
  std::vector<FusedFact> facts;
  std::vector<TraceEntry> policy_trace;
  DegradationReport report;
  std::int64_t frame_ref = 0;

  const FusedFact* find_fact(std::string_view id) const;
  friend bool operator==(const FusedGraph&, const FusedGraph&) = default;
};

/// Rule ids, stable across versions because traces are cited by audits.
namespace rules {
inline constexpr std::string_view kMotionConsensus = "motion.consensus";
inline constexpr std::string_view kMotionAnchorEvent = "motion.anchor_event";
inline constexpr std::string_view kMotionRgbSuperseded = "motion.rgb_superseded";
inline constexpr std::string_view kAppearanceConsensus = "appearance.consensus";
inline constexpr std::string_view kAppearanceRgb = "appearance.rgb_healthy";
inline constexpr std::string_view kAppearanceEventSuperseded = "appearance.event_superseded";
inline constexpr std::string_view kAppearanceEventKept = "appearance.event_kept_rgb_degraded";
inline constexpr std::string_view kAppearanceRgbCandidate = "appearance.rgb_degraded_candidate";
inline constexpr std::string_view kGeometryConsensus = "geometry.consensus";
inline constexpr std::string_view kGeometryRgbPrecedence = "geometry.rgb_precedence";
inline constexpr std::string_view kGeometryEventSecondary = "geometry.event_secondary";
inline constexpr std::string_view kSingleEvent = "single.event";
inline constexpr std::string_view kSingleRgb = "single.rgb";
inline constexpr std::string_view kSingleRgbDegraded = "single.rgb_degraded";
}  // namespace rules

struct Arbitration {
  std::vector<FusedFact> facts;
  std::vector<TraceEntry> trace;
};

/// Applies the field-level rule table to one slot. `slot` prefixes the fact ids
/// (`<slot>@G_e`, `<slot>@G_r`, `<slot>@G_e+r`). Throws std::invalid_argument when both
/// facts are absent.
Arbitration arbitrate(FieldClass field, const std::optional<FactBody>& fact_e, const std::optional<FactBody>& fact_r,
                      const DegradationReport& report, std::string_view slot = "fact");

/// Whether two facts on the same slot agree (equal values; for predicates, no
/// contradictory shared argument).
bool facts_agree(const FactBody& a, const FactBody& b);

struct FusionOptions {
  double tau = kDefaultTau;
};

/// diagnose -> align -> classify -> arbitrate per slot -> attach trace.
FusedGraph fuse_graphs(const SceneGraph& g_e, const SceneGraph& g_r, const FusionOptions& options = {});

}  // namespace forge::fusion
