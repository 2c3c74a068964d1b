#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/fusion/fusion.hpp"

namespace forge::gateway {
class Gateway;
}

namespace forge::synth {

using fusion::FieldClass;
using fusion::FusedGraph;

enum class Generator { template_path, external };
std::string_view to_string(Generator g);
Generator parse_generator(std::string_view s);

inline constexpr std::string_view kTemplateVersion = "forge-qa-templates/v1";
inline constexpr std::string_view kNoContent = "no salient content";
/// Closed hedging vocabulary for low-confidence content.
inline constexpr std::string_view kHedges[] = {"possibly", "appears to"};

struct CaptionItem {
  std::string text;
  /// Fact ids, in order of first citation.
  std::vector<std::string> supporting_facts;
  Generator generator = Generator::template_path;

  friend bool operator==(const CaptionItem&, const CaptionItem&) = default;
};

struct QAItem {
  std::string question;
  std::string answer;
  /// Grading key: attribute name to gold value.
  std::map<std::string, std::string> attributes;
  FieldClass field_class = FieldClass::appearance;
  std::vector<std::string> supporting_facts;
  Generator generator = Generator::template_path;

  friend bool operator==(const QAItem&, const QAItem&) = default;
};

/// Deterministic template caption. Low-confidence facts appear only when no high-confidence
/// fact holds the same slot, and then only hedged.
CaptionItem synthesize_caption(const FusedGraph& g);

/// At most one item per field class (motion, appearance, geometry, in that order), seeded
/// only by high-confidence facts.
std::vector<QAItem> synthesize_vqa(const FusedGraph& g, std::size_t max_items = 3);

/// Third-person singular of a verb token: `Move` -> `moves`, `turn_left` -> `turns left`.
std::string conjugate(std::string_view verb);
/// Underscores to spaces.
std::string words_of(std::string_view token);

/// External path: paraphrases through the gateway and keeps the paraphrase only if every
/// gold value still appears in it; otherwise returns the template item unchanged.
CaptionItem paraphrase_caption(const CaptionItem& item, const FusedGraph& g, gateway::Gateway& gw);
QAItem paraphrase_question(const QAItem& item, const FusedGraph& g, gateway::Gateway& gw);

/// JSONL records `{kind, caption|qa, provenance, generator, item_id, template_version}`.
std::vector<nlohmann::json> synthesize_records(const FusedGraph& g, Generator mode, gateway::Gateway* gw,
                                               std::string_view item_id = {});

}  // namespace forge::synth
