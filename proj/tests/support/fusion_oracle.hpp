#pragma once

// Exhaustive arbitration cells on two-entity graphs, checked against a rule table written
// directly from the fusion policy (not from the engine's code).

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "forge/fusion/fusion.hpp"

namespace forge::fixtures {

struct Cell {
  fusion::FieldClass field;
  int presence;  // 0: event only, 1: rgb only, 2: both
  bool agree;
  bool severe;

  std::string name() const {
    static const char* kPresence[] = {"e_only", "r_only", "both"};
    return std::string(fusion::to_string(field)) + "/" + kPresence[presence] + "/" + (agree ? "agree" : "conflict") +
           "/" + (severe ? "severe" : "healthy");
  }
};

inline std::vector<Cell> all_cells() {
  std::vector<Cell> cells;
  for (auto f : {fusion::FieldClass::motion, fusion::FieldClass::appearance, fusion::FieldClass::geometry})
    for (int p = 0; p < 3; ++p)
      for (bool a : {true, false})
        for (bool s : {false, true}) cells.push_back({f, p, a, s});
  return cells;
}

// (source, confidence, superseded_by source or none, which input the value comes from: 'e' or 'r')
using Expected = std::tuple<std::string, std::string, std::string, char>;

inline std::vector<Expected> oracle_outcome(const Cell& c) {
  using F = fusion::FieldClass;
  if (c.presence == 0) return {{"G_e", "high", "", 'e'}};
  if (c.presence == 1) {
    if (c.field == F::appearance && c.severe) return {{"G_r", "low", "", 'r'}};
    return {{"G_r", "high", "", 'r'}};
  }
  switch (c.field) {
    case F::motion:
      if (c.agree) return {{"G_e+r", "high", "", 'e'}};
      return {{"G_e", "high", "", 'e'}, {"G_r", "low", "G_e", 'r'}};
    case F::appearance:
      if (c.severe) return {{"G_e", "high", "", 'e'}, {"G_r", "low", "G_e", 'r'}};
      if (c.agree) return {{"G_e+r", "high", "", 'e'}};
      return {{"G_r", "high", "", 'r'}, {"G_e", "low", "G_r", 'e'}};
    case F::geometry:
      if (c.agree) return {{"G_e+r", "high", "", 'e'}};
      return {{"G_r", "high", "", 'r'}, {"G_e", "low", "G_r", 'e'}};
  }
  return {};
}

struct CellGraphs {
  graph::SceneGraph g_e, g_r;
  fusion::FactBody fact_e, fact_r;
};

// Entities `car` and `pedestrian` in both graphs; exactly one fact under test. Severity
// comes from a severe label on the RGB pedestrian.
inline CellGraphs build_cell(const Cell& c) {
  using namespace graph;
  auto entity = [](const std::string& n, std::vector<DegradationLabel> d = {}) {
    return EntityNode{n, n, "", {}, std::nullopt, std::move(d)};
  };
  std::vector<EntityNode> ee{entity("car"), entity("pedestrian")};
  std::vector<EntityNode> er{entity("car"), entity("pedestrian")};
  if (c.severe) er[1].degradations.push_back({DegradationKind::low_light, "", Severity::severe});
  std::vector<Predicate> pe, pr;

  const char* e_val = nullptr;
  const char* r_val = nullptr;
  fusion::FactBody fe, fr;
  switch (c.field) {
    case fusion::FieldClass::motion: {
      e_val = "forward";
      r_val = c.agree ? "forward" : "stationary";
      Predicate a{"Move", {{"subject", "car"}, {"motion", e_val}}, {}, 0};
      Predicate b{"Move", {{"subject", "car"}, {"motion", r_val}}, {}, 0};
      if (c.presence != 1) pe.push_back(a);
      if (c.presence != 0) pr.push_back(b);
      fe = a;
      fr = b;
      break;
    }
    case fusion::FieldClass::appearance:
    case fusion::FieldClass::geometry: {
      const bool app = c.field == fusion::FieldClass::appearance;
      const std::string key = app ? "color" : "count";
      e_val = app ? "white" : "3";
      r_val = c.agree ? e_val : (app ? "red" : "2");
      if (c.presence != 1) ee[0].attributes[key] = e_val;
      if (c.presence != 0) er[0].attributes[key] = r_val;
      fe = fusion::AttributeFact{"car", key, e_val};
      fr = fusion::AttributeFact{"car", key, r_val};
      break;
    }
  }
  return {SceneGraph::create(Modality::event, ee, pe, {}, 7), SceneGraph::create(Modality::rgb, er, pr, {}, 7), fe,
          fr};
}

struct CellResult {
  bool table_match = false;
  bool anchoring = true;
  bool no_override = true;
  bool consensus = true;
  bool trace_complete = true;
  bool no_low_supersedes_high = true;
  std::string detail;

  bool ok() const {
    return table_match && anchoring && no_override && consensus && trace_complete && no_low_supersedes_high;
  }
};

inline CellResult check_cell(const Cell& c) {
  const auto graphs = build_cell(c);
  const auto fused = fusion::fuse_graphs(graphs.g_e, graphs.g_r);
  CellResult r;

  std::vector<Expected> got;
  for (const auto& f : fused.facts) {
    std::string sup;
    if (f.superseded_by) {
      const auto* w = fused.find_fact(*f.superseded_by);
      sup = w ? std::string(fusion::to_string(w->source)) : "?";
    }
    char origin = '?';
    if (f.source == fusion::Source::both) origin = fusion::facts_agree(f.body, graphs.fact_e) ? 'e' : '?';
    else if (f.body == graphs.fact_e && f.source == fusion::Source::event) origin = 'e';
    else if (f.body == graphs.fact_r && f.source == fusion::Source::rgb) origin = 'r';
    got.emplace_back(std::string(fusion::to_string(f.source)), std::string(fusion::to_string(f.confidence)), sup,
                     origin);
  }
  auto want = oracle_outcome(c);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  r.table_match = got == want;
  if (!r.table_match) {
    for (const auto& [s, conf, sup, o] : got) r.detail += s + "/" + conf + "/" + sup + "/" + o + " ";
  }

  const bool conflict = c.presence == 2 && !c.agree;
  for (const auto& f : fused.facts) {
    const bool high = f.confidence == fusion::Confidence::high;
    if (c.field == fusion::FieldClass::motion && conflict && high && f.source != fusion::Source::event)
      r.anchoring = false;
    if (c.field == fusion::FieldClass::appearance && c.severe && c.presence == 2 && high &&
        f.source == fusion::Source::rgb)
      r.no_override = false;
    if (f.source == fusion::Source::both &&
        !(c.presence == 2 && fusion::facts_agree(f.body, graphs.fact_e) && fusion::facts_agree(f.body, graphs.fact_r)))
      r.consensus = false;
    if (f.trace_index >= fused.policy_trace.size() || fused.policy_trace[f.trace_index].rule != f.rule ||
        fused.policy_trace[f.trace_index].fact_id != f.id)
      r.trace_complete = false;
    if (f.superseded_by) {
      const auto* w = fused.find_fact(*f.superseded_by);
      if (!w || high || w->confidence != fusion::Confidence::high) r.no_low_supersedes_high = false;
    }
  }
  if (fused.policy_trace.size() < fused.facts.size()) r.trace_complete = false;
  return r;
}

}  // namespace forge::fixtures
