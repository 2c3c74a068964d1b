#include "forge/fusion/fusion.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include "forge/graph/caption_parser.hpp"

namespace forge::fusion {

std::string_view to_string(FieldClass c) {
  switch (c) {
    case FieldClass::motion: return "motion";
    case FieldClass::appearance: return "appearance";
    case FieldClass::geometry: return "geometry";
  }
  return "?";
}

std::string_view to_string(Source s) {
  switch (s) {
    case Source::event: return "G_e";
    case Source::rgb: return "G_r";
    case Source::both: return "G_e+r";
  }
  return "?";
}

std::string_view to_string(Confidence c) { return c == Confidence::high ? "high" : "low"; }

FieldClass parse_field_class(std::string_view s) {
  if (s == "motion") return FieldClass::motion;
  if (s == "appearance") return FieldClass::appearance;
  if (s == "geometry") return FieldClass::geometry;
  throw std::invalid_argument("unknown field class '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  if (s == "G_e") return Source::event;
  if (s == "G_r") return Source::rgb;
  if (s == "G_e+r") return Source::both;
  throw std::invalid_argument("unknown source '" + std::string(s) + "'");
}

Confidence parse_confidence(std::string_view s) {
  if (s == "high") return Confidence::high;
  if (s == "low") return Confidence::low;
  throw std::invalid_argument("unknown confidence '" + std::string(s) + "'");
}

DegradationReport diagnose_degradation(const SceneGraph& g_r, double tau) {
  if (g_r.modality() != Modality::rgb) {
    throw std::invalid_argument("diagnose_degradation: image quality is read from the RGB graph only");
  }
  DegradationReport report;
  report.tau = tau;
  std::size_t carriers = 0;
  auto collect = [&](const std::vector<DegradationLabel>& labels) {
    if (labels.empty()) return;
    ++carriers;
    for (const auto& l : labels) {
      if (std::find(report.labels.begin(), report.labels.end(), l) == report.labels.end()) report.labels.push_back(l);
      if (l.severity == graph::Severity::severe) report.severe = true;
    }
  };
  for (const auto& e : g_r.entities()) collect(e.degradations);
  for (const auto& e : g_r.edges()) collect(e.degradations);
  const std::size_t total = g_r.entities().size() + g_r.edges().size();
  report.degraded_fraction = total == 0 ? 0.0 : static_cast<double>(carriers) / static_cast<double>(total);
  if (report.degraded_fraction > tau) report.severe = true;
  std::sort(report.labels.begin(), report.labels.end());
  return report;
}

namespace {

constexpr std::string_view kAppearanceKeys[] = {"color", "texture", "light_state", "text", "brightness"};

bool is_count_key(std::string_view key) { return key == "count" || key.ends_with("_count"); }
bool is_position_key(std::string_view key) { return key == "place" || key == "position"; }

}  // namespace

FieldClass classify_fact_field(const FactBody& fact) {
  return std::visit(
      [](const auto& f) -> FieldClass {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Predicate>) {
          if (f.args.contains("motion")) return FieldClass::motion;
          if (f.args.contains("place") || f.attrs.contains("position")) return FieldClass::geometry;
          return FieldClass::appearance;
        } else if constexpr (std::is_same_v<F, AttributeFact>) {
          if (std::find(std::begin(kAppearanceKeys), std::end(kAppearanceKeys), f.key) != std::end(kAppearanceKeys))
            return FieldClass::appearance;
          if (is_count_key(f.key) || is_position_key(f.key)) return FieldClass::geometry;
          return FieldClass::appearance;
        } else {
          return f.kind == graph::RelationKind::attribute ? FieldClass::appearance : FieldClass::motion;
        }
      },
      fact);
}

std::string describe(const FactBody& fact) {
  return std::visit(
      [](const auto& f) -> std::string {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Predicate>) {
          return graph::render_predicate(f);
        } else if constexpr (std::is_same_v<F, AttributeFact>) {
          return f.entity + "." + f.key + "=" + f.value;
        } else {
          return "rel(" + f.from_id + ", " + std::string(graph::to_string(f.kind)) + ", " + f.to_id +
                 (f.label != graph::to_string(f.kind) ? ", " + f.label : std::string()) + ")";
        }
      },
      fact);
}

bool facts_agree(const FactBody& a, const FactBody& b) {
  if (a.index() != b.index()) return false;
  if (const auto* pa = std::get_if<Predicate>(&a)) {
    const auto& pb = std::get<Predicate>(b);
    if (pa->verb != pb.verb || pa->subject() != pb.subject()) return false;
    auto compatible = [](const auto& x, const auto& y) {
      for (const auto& [k, v] : x)
        if (auto it = y.find(k); it != y.end() && it->second != v) return false;
      return true;
    };
    return compatible(pa->args, pb.args) && compatible(pa->attrs, pb.attrs);
  }
  if (const auto* fa = std::get_if<AttributeFact>(&a)) return *fa == std::get<AttributeFact>(b);
  const auto& ea = std::get<RelationEdge>(a);
  const auto& eb = std::get<RelationEdge>(b);
  return ea.from_id == eb.from_id && ea.to_id == eb.to_id && ea.kind == eb.kind && ea.label == eb.label;
}

namespace {

FactBody merge_agreeing(const FactBody& e, const FactBody& r) {
  if (const auto* pe = std::get_if<Predicate>(&e)) {
    Predicate merged = *pe;
    const auto& pr = std::get<Predicate>(r);
    merged.args.insert(pr.args.begin(), pr.args.end());
    merged.attrs.insert(pr.attrs.begin(), pr.attrs.end());
    if (!merged.temporal_index) merged.temporal_index = pr.temporal_index;
    return merged;
  }
  if (const auto* ee = std::get_if<RelationEdge>(&e)) {
    RelationEdge merged = *ee;
    for (const auto& d : std::get<RelationEdge>(r).degradations)
      if (std::find(merged.degradations.begin(), merged.degradations.end(), d) == merged.degradations.end())
        merged.degradations.push_back(d);
    return merged;
  }
  return e;
}

class ArbitrationBuilder {
 public:
  ArbitrationBuilder(FieldClass field, std::string_view slot, const std::optional<FactBody>& e,
                     const std::optional<FactBody>& r, bool severe)
      : field_(field), slot_(slot), severe_(severe) {
    if (e) event_value_ = describe(*e);
    if (r) rgb_value_ = describe(*r);
  }

  std::string id(Source s) const { return std::string(slot_) + "@" + std::string(to_string(s)); }

  void emit(const FactBody& body, Source source, Confidence confidence, std::string_view rule,
            std::optional<Source> superseded_by = std::nullopt) {
    FusedFact f;
    f.id = id(source);
    f.body = body;
    f.field = field_;
    f.source = source;
    f.confidence = confidence;
    if (superseded_by) f.superseded_by = id(*superseded_by);
    f.rule = std::string(rule);
    f.trace_index = out_.trace.size();

    TraceEntry t;
    t.rule = f.rule;
    t.slot = std::string(slot_);
    t.fact_id = f.id;
    t.field = field_;
    t.event_value = event_value_;
    t.rgb_value = rgb_value_;
    t.outcome = std::string(to_string(confidence)) + (f.superseded_by ? " superseded_by " + *f.superseded_by : "");
    t.rgb_severe = severe_;

    out_.facts.push_back(std::move(f));
    out_.trace.push_back(std::move(t));
  }

  Arbitration take() { return std::move(out_); }

 private:
  FieldClass field_;
  std::string_view slot_;
  bool severe_;
  std::optional<std::string> event_value_;
  std::optional<std::string> rgb_value_;
  Arbitration out_;
};

}  // namespace

Arbitration arbitrate(FieldClass field, const std::optional<FactBody>& fact_e, const std::optional<FactBody>& fact_r,
                      const DegradationReport& report, std::string_view slot) {
  if (!fact_e && !fact_r) throw std::invalid_argument("arbitrate: both facts absent");
  ArbitrationBuilder b(field, slot, fact_e, fact_r, report.severe);
  const auto E = Source::event;
  const auto R = Source::rgb;
  const auto high = Confidence::high;
  const auto low = Confidence::low;

  if (fact_e && !fact_r) {
    b.emit(*fact_e, E, high, rules::kSingleEvent);
  } else if (!fact_e && fact_r) {
    if (field == FieldClass::appearance && report.severe) b.emit(*fact_r, R, low, rules::kSingleRgbDegraded);
    else b.emit(*fact_r, R, high, rules::kSingleRgb);
  } else if (field == FieldClass::appearance && report.severe) {
    // A severely degraded G_r never contributes a high-confidence appearance fact, not even by agreeing.
    b.emit(*fact_e, E, high, rules::kAppearanceEventKept);
    b.emit(*fact_r, R, low, rules::kAppearanceRgbCandidate, E);
  } else if (facts_agree(*fact_e, *fact_r)) {
    const auto rule = field == FieldClass::motion       ? rules::kMotionConsensus
                      : field == FieldClass::appearance ? rules::kAppearanceConsensus
                                                        : rules::kGeometryConsensus;
    b.emit(merge_agreeing(*fact_e, *fact_r), Source::both, high, rule);
  } else {
    switch (field) {
      case FieldClass::motion:
        b.emit(*fact_e, E, high, rules::kMotionAnchorEvent);
        b.emit(*fact_r, R, low, rules::kMotionRgbSuperseded, E);
        break;
      case FieldClass::appearance:
        b.emit(*fact_r, R, high, rules::kAppearanceRgb);
        b.emit(*fact_e, E, low, rules::kAppearanceEventSuperseded, R);
        break;
      case FieldClass::geometry:
        b.emit(*fact_r, R, high, rules::kGeometryRgbPrecedence);
        b.emit(*fact_e, E, low, rules::kGeometryEventSecondary, R);
        break;
    }
  }
  return b.take();
}

std::vector<EntityAlignment> align_entities(const SceneGraph& g_e, const SceneGraph& g_r) {
  std::map<std::string, EntityAlignment> by_name;
  for (const auto& e : g_e.entities()) {
    auto& a = by_name[e.canonical_name];
    a.name = e.canonical_name;
    a.in_event = true;
  }
  for (const auto& e : g_r.entities()) {
    auto& a = by_name[e.canonical_name];
    a.name = e.canonical_name;
    a.in_rgb = true;
  }
  std::vector<EntityAlignment> out;
  for (auto& [_, a] : by_name) out.push_back(std::move(a));
  return out;
}

const FusedFact* FusedGraph::find_fact(std::string_view id) const {
  for (const auto& f : facts)
    if (f.id == id) return &f;
  return nullptr;
}

namespace {

struct Slot {
  std::string id;
  std::optional<FactBody> event;
  std::optional<FactBody> rgb;
};

std::map<std::pair<std::string, std::string>, std::string> attribute_facts(const SceneGraph& g) {
  std::map<std::pair<std::string, std::string>, std::string> out;
  for (const auto& e : g.entities()) {
    if (!e.category.empty()) out[{e.canonical_name, "category"}] = e.category;
    if (e.place) out[{e.canonical_name, "place"}] = *e.place;
    for (const auto& [k, v] : e.attributes) out[{e.canonical_name, k}] = v;
  }
  return out;
}

// Keys a predicate by (subject, verb, k) where k counts earlier predicates with the same
// subject and verb in the same graph.
std::vector<std::tuple<std::string, std::string, std::size_t>> predicate_keys(const SceneGraph& g) {
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::vector<std::tuple<std::string, std::string, std::size_t>> keys;
  for (const auto& p : g.predicates()) {
    auto k = seen[{p.subject(), p.verb}]++;
    keys.emplace_back(p.subject(), p.verb, k);
  }
  return keys;
}

}  // namespace

FusedGraph fuse_graphs(const SceneGraph& g_e, const SceneGraph& g_r, const FusionOptions& options) {
  if (g_e.modality() != Modality::event) throw std::invalid_argument("fuse_graphs: first graph must be the event graph");
  if (g_r.modality() != Modality::rgb) throw std::invalid_argument("fuse_graphs: second graph must be the RGB graph");

  FusedGraph out;
  out.report = diagnose_degradation(g_r, options.tau);
  out.frame_ref = g_r.frame_ref() != 0 ? g_r.frame_ref() : g_e.frame_ref();

  for (const auto& a : align_entities(g_e, g_r)) {
    FusedEntity fe;
    fe.name = a.name;
    if (a.in_event) fe.presence.insert(Modality::event);
    if (a.in_rgb) fe.presence.insert(Modality::rgb);
    for (const auto* g : {&g_e, &g_r}) {
      for (const auto& node : g->entities()) {
        if (node.canonical_name != a.name) continue;
        for (const auto& d : node.degradations)
          if (std::find(fe.degradations.begin(), fe.degradations.end(), d) == fe.degradations.end())
            fe.degradations.push_back(d);
      }
    }
    out.entities.push_back(std::move(fe));
  }

  std::vector<Slot> slots;

  // Predicates keep event order first, then RGB-only predicates in their own order.
  {
    const auto ke = predicate_keys(g_e);
    const auto kr = predicate_keys(g_r);
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> rgb_index;
    for (std::size_t i = 0; i < kr.size(); ++i) rgb_index[kr[i]] = i;
    std::vector<bool> rgb_used(kr.size(), false);
    auto slot_id = [](const auto& key) {
      return "pred:" + std::get<0>(key) + "." + std::get<1>(key) + "." + std::to_string(std::get<2>(key));
    };
    for (std::size_t i = 0; i < ke.size(); ++i) {
      Slot s{slot_id(ke[i]), FactBody(g_e.predicates()[i]), std::nullopt};
      if (auto it = rgb_index.find(ke[i]); it != rgb_index.end()) {
        s.rgb = FactBody(g_r.predicates()[it->second]);
        rgb_used[it->second] = true;
      }
      slots.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < kr.size(); ++i)
      if (!rgb_used[i]) slots.push_back({slot_id(kr[i]), std::nullopt, FactBody(g_r.predicates()[i])});
  }

  {
    const auto ae = attribute_facts(g_e);
    const auto ar = attribute_facts(g_r);
    std::map<std::pair<std::string, std::string>, Slot> merged;
    for (const auto& [key, v] : ae) merged[key].event = FactBody(AttributeFact{key.first, key.second, v});
    for (const auto& [key, v] : ar) merged[key].rgb = FactBody(AttributeFact{key.first, key.second, v});
    for (auto& [key, s] : merged) {
      s.id = "attr:" + key.first + "." + key.second;
      slots.push_back(std::move(s));
    }
  }

  {
    using EdgeKey = std::tuple<std::string, graph::RelationKind, std::string, std::size_t>;
    std::map<EdgeKey, Slot> merged;
    auto add = [&](const SceneGraph& g, bool event_side) {
      std::map<std::tuple<std::string, graph::RelationKind, std::string>, std::size_t> seen;
      for (const auto& e : g.edges()) {
        auto k = seen[{e.from_id, e.kind, e.to_id}]++;
        auto& s = merged[{e.from_id, e.kind, e.to_id, k}];
        (event_side ? s.event : s.rgb) = FactBody(e);
      }
    };
    add(g_e, true);
    add(g_r, false);
    for (auto& [key, s] : merged) {
      s.id = "rel:" + std::get<0>(key) + "." + std::string(graph::to_string(std::get<1>(key))) + "." +
             std::get<2>(key) + "." + std::to_string(std::get<3>(key));
      slots.push_back(std::move(s));
    }
  }

  for (const auto& s : slots) {
    // A slot is motion if either side reads as motion; otherwise the event side decides.
    FieldClass field = classify_fact_field(s.event ? *s.event : *s.rgb);
    if (s.rgb && classify_fact_field(*s.rgb) == FieldClass::motion) field = FieldClass::motion;
    Arbitration a = arbitrate(field, s.event, s.rgb, out.report, s.id);
    const std::size_t offset = out.policy_trace.size();
    for (auto& f : a.facts) {
      f.trace_index += offset;
      out.facts.push_back(std::move(f));
    }
    for (auto& t : a.trace) out.policy_trace.push_back(std::move(t));
  }
  return out;
}

}  // namespace forge::fusion
