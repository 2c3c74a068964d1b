#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/eval/metrics.hpp"

namespace forge::review {

using eval::AuditRecord;

/// Append-only JSONL file; every append is flushed and fsynced before it returns.
class AuditLog {
 public:
  /// Opens or creates the log and replays existing lines. Throws forge::ParseError on a
  /// damaged line.
  explicit AuditLog(std::filesystem::path path);
  ~AuditLog();
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  void append(const AuditRecord& record);
  const std::vector<AuditRecord>& records() const { return records_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::vector<AuditRecord> records_;
};

inline constexpr std::string_view kStatusUnaudited = "unaudited";
inline constexpr std::string_view kStatusAccepted = "audited-accepted";
inline constexpr std::string_view kStatusCorrected = "audited-corrected";
inline constexpr std::string_view kStatusRejected = "audited-rejected";
std::string_view status_for(eval::Decision d);
bool is_status(std::string_view s);

/// Latest timestamp wins; equal timestamps go to the greater annotator id, then to the
/// later log position.
const AuditRecord* effective_record(const std::vector<const AuditRecord*>& history);

/// Item payloads read from a manifest directory: caption/QA text, fact provenance, the
/// policy_trace entries of cited facts and file URLs under /files.
std::vector<nlohmann::json> load_review_items(const std::filesystem::path& manifest_path);

struct Response {
  int status = 200;
  nlohmann::json body;
};

inline constexpr std::size_t kDefaultPageSize = 10;
inline constexpr std::size_t kMaxPageSize = 100;

/// Transport-independent service state. Reads run concurrently; writes are serialized.
class ReviewStore {
 public:
  /// Each item payload needs a string `id`.
  ReviewStore(std::vector<nlohmann::json> items, std::filesystem::path audit_log);

  Response list_items(std::optional<std::string_view> status, std::optional<std::string_view> cursor,
                      std::optional<std::string_view> limit) const;
  Response get_item(std::string_view id) const;
  /// `annotator_header` fills a missing annotator_id, `idempotency_header` a missing key.
  /// `now_ms` stamps records that carry no timestamp.
  Response post_audit(std::string_view id, std::string_view body, std::optional<std::string_view> annotator_header,
                      std::optional<std::string_view> idempotency_header, std::int64_t now_ms);
  Response stats() const;
  Response export_audits() const;

  std::string status_of(std::string_view id) const;
  std::size_t log_size() const;

 private:
  nlohmann::json view(const nlohmann::json& item) const;
  const AuditRecord* effective_locked(const std::string& id) const;

  mutable std::shared_mutex mu_;
  std::vector<nlohmann::json> items_;
  std::map<std::string, std::size_t> by_id_;
  std::unique_ptr<AuditLog> log_;
  std::map<std::string, std::vector<std::size_t>> history_;
  std::map<std::string, std::string> idempotency_;
};

/// Cursor is the lowercase hex of the last item id on the previous page.
std::string encode_cursor(std::string_view item_id);
std::optional<std::string> decode_cursor(std::string_view cursor);

std::string_view openapi_document();

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8630;
  /// Directory whose renders/ and keyframes/ are served under /files.
  std::filesystem::path files_root;
  /// Optional static UI bundle served at /.
  std::filesystem::path ui_root;
};

class ReviewServer {
 public:
  ReviewServer(ReviewStore& store, ServerOptions options);
  ~ReviewServer();

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind();
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace forge::review
