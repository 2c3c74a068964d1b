#include "forge/eval/metrics.hpp"

#include <charconv>
#include <sstream>

#include "forge/common/error.hpp"
#include "forge/graph/canonical.hpp"

namespace forge::eval {

using nlohmann::json;

namespace {

std::optional<double> as_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::string> canonical(std::string_view s) {
  try {
    return graph::canonicalize_entity(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

bool values_match(std::string_view predicted, std::string_view gold) {
  auto pn = as_number(predicted);
  auto gn = as_number(gold);
  if (pn && gn) return *pn == *gn;
  auto pc = canonical(predicted);
  auto gc = canonical(gold);
  return pc && gc && *pc == *gc;
}

std::size_t matched_attributes(const AttributeMap& predicted, const AttributeMap& gold) {
  std::size_t hits = 0;
  for (const auto& [key, value] : gold)
    if (auto it = predicted.find(key); it != predicted.end() && values_match(it->second, value)) ++hits;
  return hits;
}

double attribute_accuracy(const AttributeMap& predicted, const AttributeMap& gold) {
  if (gold.empty()) throw std::invalid_argument("attribute_accuracy: empty gold map");
  return static_cast<double>(matched_attributes(predicted, gold)) / static_cast<double>(gold.size());
}

EvalRecord eval_record_from_json(const json& j) {
  try {
    EvalRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    if (auto it = j.find("scores"); it != j.end() && !it->is_null()) r.scores = gateway::judge_scores_from_json(*it);
    if (auto it = j.find("predicted_attributes"); it != j.end()) r.predicted_attributes = it->get<AttributeMap>();
    if (auto it = j.find("gold_attributes"); it != j.end()) r.gold_attributes = it->get<AttributeMap>();
    return r;
  } catch (const std::exception& e) {
    throw SchemaError("$", std::string("bad eval record: ") + e.what());
  }
}

json to_json(const EvalRecord& r) {
  return {{"item_id", r.item_id},
          {"scores", r.scores ? gateway::to_json(*r.scores) : json(nullptr)},
          {"predicted_attributes", r.predicted_attributes},
          {"gold_attributes", r.gold_attributes}};
}

ScoreReport aggregate_scores(const std::vector<EvalRecord>& records, AccAveraging averaging) {
  if (records.empty()) throw std::invalid_argument("aggregate_scores: no records");
  ScoreReport rep;
  rep.averaging = averaging;
  rep.records = records.size();
  double ci = 0, dd = 0, cu = 0, ave = 0, acc = 0;
  std::size_t judged = 0, graded = 0, pooled_hits = 0, pooled_total = 0;
  // Sums run in record order so the result does not depend on scheduling.
  for (const auto& r : records) {
    if (r.scores) {
      ++judged;
      ci += r.scores->ci;
      dd += r.scores->do_;
      cu += r.scores->cu;
      ave += (r.scores->ci + r.scores->do_ + r.scores->cu) / 3.0;
    }
    if (!r.gold_attributes.empty()) {
      ++graded;
      const std::size_t hits = matched_attributes(r.predicted_attributes, r.gold_attributes);
      acc += static_cast<double>(hits) / static_cast<double>(r.gold_attributes.size());
      pooled_hits += hits;
      pooled_total += r.gold_attributes.size();
    }
  }
  auto mean = [](double sum, std::size_t n) { return MetricMean{n ? sum / static_cast<double>(n) : 0.0, n}; };
  rep.ci = mean(ci, judged);
  rep.do_ = mean(dd, judged);
  rep.cu = mean(cu, judged);
  rep.ave = mean(ave, judged);
  rep.acc = averaging == AccAveraging::per_item
                ? mean(acc, graded)
                : MetricMean{pooled_total ? static_cast<double>(pooled_hits) / static_cast<double>(pooled_total) : 0.0,
                             graded};
  return rep;
}

json to_json(const ScoreReport& r) {
  auto m = [](const MetricMean& x) { return json{{"mean", x.count ? json(x.mean) : json(nullptr)}, {"count", x.count}}; };
  return {{"CI", m(r.ci)},
          {"DO", m(r.do_)},
          {"CU", m(r.cu)},
          {"Ave", m(r.ave)},
          {"Acc", m(r.acc)},
          {"acc_averaging", r.averaging == AccAveraging::per_item ? "per_item" : "pooled"},
          {"records", r.records}};
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::accept: return "accept";
    case Decision::correct: return "correct";
    case Decision::reject: return "reject";
  }
  return "?";
}

std::optional<Decision> parse_decision(std::string_view s) {
  if (s == "accept") return Decision::accept;
  if (s == "correct") return Decision::correct;
  if (s == "reject") return Decision::reject;
  return std::nullopt;
}

bool AuditRecord::valid() const {
  if (item_id.empty() || annotator_id.empty()) return false;
  return decision != Decision::correct || (corrected_text && !corrected_text->empty());
}

json to_json(const AuditRecord& a) {
  json j = {{"item_id", a.item_id},
            {"annotator_id", a.annotator_id},
            {"decision", std::string(to_string(a.decision))},
            {"corrected_text", a.corrected_text ? json(*a.corrected_text) : json(nullptr)},
            {"error_tags", a.error_tags},
            {"timestamp_ms", a.timestamp_ms}};
  if (a.idempotency_key) j["idempotency_key"] = *a.idempotency_key;
  return j;
}

AuditRecord audit_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected object");
  AuditRecord a;
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw SchemaError(std::string("$.") + key, "expected string");
    return it->get<std::string>();
  };
  a.item_id = str("item_id");
  a.annotator_id = str("annotator_id");
  auto d = parse_decision(str("decision"));
  if (!d) throw SchemaError("$.decision", "expected accept, correct or reject");
  a.decision = *d;
  if (auto it = j.find("corrected_text"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("$.corrected_text", "expected string or null");
    a.corrected_text = it->get<std::string>();
  }
  if (auto it = j.find("error_tags"); it != j.end()) {
    if (!it->is_array()) throw SchemaError("$.error_tags", "expected array");
    for (const auto& t : *it) {
      if (!t.is_string()) throw SchemaError("$.error_tags", "expected strings");
      a.error_tags.push_back(t.get<std::string>());
    }
  }
  auto ts = j.find("timestamp_ms");
  if (ts == j.end() || !ts->is_number_integer()) throw SchemaError("$.timestamp_ms", "expected integer");
  a.timestamp_ms = ts->get<std::int64_t>();
  if (auto it = j.find("idempotency_key"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("$.idempotency_key", "expected string");
    a.idempotency_key = it->get<std::string>();
  }
  return a;
}

std::vector<AuditRecord> read_audit_log(std::string_view jsonl) {
  std::vector<AuditRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    ++line_no;
    const auto line = jsonl.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw ParseError("audit log line is not JSON", line_no, pos);
      try {
        out.push_back(audit_from_json(j));
      } catch (const SchemaError& e) {
        throw ParseError(e.what(), line_no, pos);
      }
    }
    pos = end + 1;
  }
  return out;
}

double rate_percent(std::size_t count, std::size_t total) {
  if (total == 0) throw std::invalid_argument("rate_percent: zero total");
  // round-half-up of 1000 * count / total, exact in integers.
  const std::uint64_t tenths = (2000ULL * count + total) / (2ULL * total);
  return static_cast<double>(tenths) / 10.0;
}

CorrectionRate correction_rate(std::size_t count, std::size_t total) {
  if (total == 0) throw std::invalid_argument("correction_rate: no audits");
  if (count > total) throw std::invalid_argument("correction_rate: count exceeds total");
  return {rate_percent(count, total), count, total};
}

CorrectionRate correction_rate(const std::vector<AuditRecord>& audits) {
  std::size_t count = 0;
  for (const auto& a : audits)
    if (a.decision != Decision::accept) ++count;
  return correction_rate(count, audits.size());
}

}  // namespace forge::eval
