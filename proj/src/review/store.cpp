#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <set>
#include <sstream>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/hash.hpp"
#include "forge/fusion/fused_json.hpp"
#include "forge/pipeline/manifest.hpp"
#include "forge/review/review.hpp"

namespace forge::review {

namespace fs = std::filesystem;
using nlohmann::json;

AuditLog::AuditLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  if (fs::exists(path_)) records_ = eval::read_audit_log(read_file(path_));
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("cannot open audit log " + path_.string() + ": " + std::strerror(errno));
}

AuditLog::~AuditLog() {
  if (fd_ >= 0) ::close(fd_);
}

void AuditLog::append(const AuditRecord& record) {
  const std::string line = eval::to_json(record).dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const auto n = ::write(fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("audit log write failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw Error("audit log fsync failed: " + std::string(std::strerror(errno)));
  records_.push_back(record);
}

std::string_view status_for(eval::Decision d) {
  switch (d) {
    case eval::Decision::accept: return kStatusAccepted;
    case eval::Decision::correct: return kStatusCorrected;
    case eval::Decision::reject: return kStatusRejected;
  }
  return kStatusUnaudited;
}

bool is_status(std::string_view s) {
  return s == kStatusUnaudited || s == kStatusAccepted || s == kStatusCorrected || s == kStatusRejected;
}

const AuditRecord* effective_record(const std::vector<const AuditRecord*>& history) {
  const AuditRecord* best = nullptr;
  for (const auto* r : history) {
    if (!best || r->timestamp_ms > best->timestamp_ms ||
        (r->timestamp_ms == best->timestamp_ms && r->annotator_id >= best->annotator_id))
      best = r;
  }
  return best;
}

std::string encode_cursor(std::string_view item_id) { return hex_encode(item_id); }

std::optional<std::string> decode_cursor(std::string_view cursor) {
  std::string out;
  if (cursor.empty() || !hex_decode(cursor, out)) return std::nullopt;
  return out;
}

std::vector<json> load_review_items(const fs::path& manifest_path) {
  const auto manifest = pipeline::load_manifest(manifest_path);
  const fs::path root = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  std::vector<json> items;
  for (const auto& it : manifest.items) {
    json item = {{"id", it.item_id},
                 {"sequence_id", it.sequence_id},
                 {"keyframe_ts", it.keyframe_ts},
                 {"caption", nullptr},
                 {"qa", json::array()},
                 {"facts", json::array()},
                 {"policy_trace", json::array()},
                 {"keyframe", "/files/" + it.outputs.keyframe}};
    json renders = json::array();
    for (const auto& r : it.outputs.slice_renders) renders.push_back("/files/" + r);
    item["slice_renders"] = renders;

    std::optional<fusion::FusedGraph> fused;
    if (!it.outputs.fused.empty() && fs::exists(root / it.outputs.fused))
      fused = fusion::deserialize_fused(read_file(root / it.outputs.fused));

    std::set<std::string> cited;
    if (!it.outputs.items.empty() && fs::exists(root / it.outputs.items)) {
      std::istringstream in(read_file(root / it.outputs.items));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        const std::string kind = rec.at("kind").get<std::string>();
        json entry = rec.at(kind);
        entry["generator"] = rec.at("generator");
        for (const auto& id : entry.at("supporting_facts")) cited.insert(id.get<std::string>());
        if (kind == "caption") item["caption"] = entry;
        else item["qa"].push_back(entry);
      }
    }
    if (fused) {
      for (const auto& f : fused->facts) {
        if (!cited.count(f.id)) continue;
        item["facts"].push_back({{"fact_id", f.id},
                                 {"text", fusion::describe(f.body)},
                                 {"source", std::string(fusion::to_string(f.source))},
                                 {"confidence", std::string(fusion::to_string(f.confidence))},
                                 {"field", std::string(fusion::to_string(f.field))},
                                 {"rule", f.rule}});
        item["policy_trace"].push_back(fusion::to_json(fused->policy_trace.at(f.trace_index)));
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

ReviewStore::ReviewStore(std::vector<json> items, fs::path audit_log) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end(),
            [](const json& a, const json& b) { return a.at("id").get<std::string>() < b.at("id").get<std::string>(); });
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!by_id_.emplace(items_[i].at("id").get<std::string>(), i).second)
      throw Error("duplicate item id " + items_[i].at("id").get<std::string>());
  }
  log_ = std::make_unique<AuditLog>(std::move(audit_log));
  const auto& recs = log_->records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    history_[recs[i].item_id].push_back(i);
    if (recs[i].idempotency_key) idempotency_[*recs[i].idempotency_key] = eval::to_json(recs[i]).dump();
  }
}

const AuditRecord* ReviewStore::effective_locked(const std::string& id) const {
  auto it = history_.find(id);
  if (it == history_.end()) return nullptr;
  std::vector<const AuditRecord*> h;
  for (auto i : it->second) h.push_back(&log_->records()[i]);
  return effective_record(h);
}

json ReviewStore::view(const json& item) const {
  json v = item;
  const auto* eff = effective_locked(item.at("id").get<std::string>());
  v["status"] = std::string(eff ? status_for(eff->decision) : kStatusUnaudited);
  v["effective_audit"] = eff ? eval::to_json(*eff) : json(nullptr);
  v["corrected_text"] = eff && eff->corrected_text ? json(*eff->corrected_text) : json(nullptr);
  return v;
}

std::string ReviewStore::status_of(std::string_view id) const {
  std::shared_lock lock(mu_);
  const auto* eff = effective_locked(std::string(id));
  return std::string(eff ? status_for(eff->decision) : kStatusUnaudited);
}

std::size_t ReviewStore::log_size() const {
  std::shared_lock lock(mu_);
  return log_->records().size();
}

namespace {

Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

}  // namespace

Response ReviewStore::list_items(std::optional<std::string_view> status, std::optional<std::string_view> cursor,
                                 std::optional<std::string_view> limit) const {
  if (status && !status->empty() && !is_status(*status)) return error(400, "unknown status filter");
  std::size_t page = kDefaultPageSize;
  if (limit) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(std::string(*limit), &used);
      if (used != limit->size() || v < 1 || v > static_cast<long long>(kMaxPageSize)) throw std::out_of_range("limit");
      page = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      return error(400, "limit must be an integer in [1, " + std::to_string(kMaxPageSize) + "]");
    }
  }
  std::optional<std::string> after;
  if (cursor && !cursor->empty()) {
    after = decode_cursor(*cursor);
    if (!after) return error(400, "malformed cursor");
  }

  std::shared_lock lock(mu_);
  json out = json::array();
  std::optional<std::string> last;
  bool more = false;
  auto it = after ? by_id_.upper_bound(*after) : by_id_.begin();
  for (; it != by_id_.end(); ++it) {
    json v = view(items_[it->second]);
    if (status && !status->empty() && v["status"] != *status) continue;
    if (out.size() == page) {
      more = true;
      break;
    }
    last = it->first;
    out.push_back(std::move(v));
  }
  return {200, {{"items", out}, {"next_cursor", more && last ? json(encode_cursor(*last)) : json(nullptr)}}};
}

Response ReviewStore::get_item(std::string_view id) const {
  std::shared_lock lock(mu_);
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return error(404, "unknown item");
  return {200, view(items_[it->second])};
}

Response ReviewStore::post_audit(std::string_view id, std::string_view body,
                                 std::optional<std::string_view> annotator_header,
                                 std::optional<std::string_view> idempotency_header, std::int64_t now_ms) {
  {
    std::shared_lock lock(mu_);
    if (!by_id_.count(std::string(id))) return error(404, "unknown item");
  }
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error(422, "body must be a JSON object");
  j["item_id"] = std::string(id);
  if (!j.contains("annotator_id") && annotator_header) j["annotator_id"] = std::string(*annotator_header);
  const bool stamped_by_server = !j.contains("timestamp_ms");
  if (stamped_by_server) j["timestamp_ms"] = now_ms;
  if (!j.contains("idempotency_key") && idempotency_header) j["idempotency_key"] = std::string(*idempotency_header);

  AuditRecord rec;
  try {
    rec = eval::audit_from_json(j);
  } catch (const SchemaError& e) {
    return error(422, e.what());
  }
  if (!rec.valid()) {
    if (rec.decision == eval::Decision::correct) return error(422, "decision 'correct' requires corrected_text");
    return error(422, "annotator_id is required");
  }

  std::unique_lock lock(mu_);
  if (rec.idempotency_key) {
    if (auto it = idempotency_.find(*rec.idempotency_key); it != idempotency_.end()) {
      const json stored = json::parse(it->second);
      // A retry without a timestamp is stamped anew; only the client's fields are compared.
      AuditRecord candidate = rec;
      if (stamped_by_server) candidate.timestamp_ms = stored.at("timestamp_ms").get<std::int64_t>();
      if (eval::to_json(candidate) != stored) return error(409, "idempotency key reused with a different body");
      const auto* eff = effective_locked(rec.item_id);
      return {200, {{"record", stored}, {"status", std::string(status_for(eff->decision))}, {"replayed", true}}};
    }
  }
  log_->append(rec);
  history_[rec.item_id].push_back(log_->records().size() - 1);
  if (rec.idempotency_key) idempotency_[*rec.idempotency_key] = eval::to_json(rec).dump();
  const auto* eff = effective_locked(rec.item_id);
  return {201, {{"record", eval::to_json(rec)}, {"status", std::string(status_for(eff->decision))}, {"replayed", false}}};
}

Response ReviewStore::stats() const {
  std::shared_lock lock(mu_);
  std::vector<AuditRecord> effective;
  for (const auto& [id, _] : history_)
    if (const auto* r = effective_locked(id)) effective.push_back(*r);
  json hist = json::object();
  for (const auto& r : effective) {
    if (r.decision == eval::Decision::accept) continue;
    const std::string tag = r.error_tags.empty() ? "untagged" : r.error_tags.front();
    hist[tag] = hist.value(tag, 0) + 1;
  }
  if (effective.empty())
    return {200, {{"correction_rate", nullptr}, {"count", 0}, {"total", 0}, {"histogram", hist}}};
  const auto rate = eval::correction_rate(effective);
  return {200, {{"correction_rate", rate.percent}, {"count", rate.count}, {"total", rate.total}, {"histogram", hist}}};
}

Response ReviewStore::export_audits() const {
  std::shared_lock lock(mu_);
  json arr = json::array();
  for (const auto& r : log_->records()) arr.push_back(eval::to_json(r));
  return {200, {{"audits", arr}}};
}

}  // namespace forge::review
