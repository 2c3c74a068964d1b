#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/gateway/gateway.hpp"

namespace forge::eval {

using gateway::JudgeScores;
using AttributeMap = std::map<std::string, std::string>;

/// Equal after canonicalize_entity, or equal as numeric literals ("3" == "3.0").
bool values_match(std::string_view predicted, std::string_view gold);

/// Gold attributes matched by the prediction over gold attributes; a missing prediction is
/// wrong. Throws std::invalid_argument for an empty gold map.
double attribute_accuracy(const AttributeMap& predicted, const AttributeMap& gold);
/// Matched count, for pooled averaging.
std::size_t matched_attributes(const AttributeMap& predicted, const AttributeMap& gold);

struct EvalRecord {
  std::string item_id;
  std::optional<JudgeScores> scores;
  AttributeMap predicted_attributes;
  AttributeMap gold_attributes;
};

EvalRecord eval_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalRecord& r);

enum class AccAveraging { per_item, pooled };

struct MetricMean {
  double mean = 0.0;
  std::size_t count = 0;

  friend bool operator==(const MetricMean&, const MetricMean&) = default;
};

struct ScoreReport {
  MetricMean ci, do_, cu, ave, acc;
  AccAveraging averaging = AccAveraging::per_item;
  std::size_t records = 0;
};

/// Records without scores are left out of the Likert means; records without gold are left
/// out of Acc. Throws std::invalid_argument on empty input.
ScoreReport aggregate_scores(const std::vector<EvalRecord>& records, AccAveraging averaging = AccAveraging::per_item);
nlohmann::json to_json(const ScoreReport& r);

enum class Decision { accept, correct, reject };
std::string_view to_string(Decision d);
std::optional<Decision> parse_decision(std::string_view s);

struct AuditRecord {
  std::string item_id;
  std::string annotator_id;
  Decision decision = Decision::accept;
  std::optional<std::string> corrected_text;
  std::vector<std::string> error_tags;
  std::int64_t timestamp_ms = 0;
  std::optional<std::string> idempotency_key;

  /// decision == correct requires a non-empty corrected_text.
  bool valid() const;
  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

nlohmann::json to_json(const AuditRecord& a);
/// Throws forge::SchemaError.
AuditRecord audit_from_json(const nlohmann::json& j);
std::vector<AuditRecord> read_audit_log(std::string_view jsonl);

struct CorrectionRate {
  /// Percentage rounded to one decimal.
  double percent = 0.0;
  std::size_t count = 0;
  std::size_t total = 0;

  friend bool operator==(const CorrectionRate&, const CorrectionRate&) = default;
};

/// count = audits whose decision is correct or reject. Throws std::invalid_argument on
/// empty input.
CorrectionRate correction_rate(const std::vector<AuditRecord>& audits);
CorrectionRate correction_rate(std::size_t count, std::size_t total);
/// round(1000 * count / total) / 10, using integer arithmetic for the rounding.
double rate_percent(std::size_t count, std::size_t total);

}  // namespace forge::eval
