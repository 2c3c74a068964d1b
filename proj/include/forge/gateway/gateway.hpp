#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "forge/common/error.hpp"

namespace forge::gateway {

enum class Task { caption, graph_parse, paraphrase, judge };
std::string_view to_string(Task t);
Task parse_task(std::string_view s);

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 512;
  std::string model = "mock";

  friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

struct GatewayRequest {
  Task task = Task::caption;
  std::string prompt;
  GenerationParams params;

  nlohmann::json canonical() const;
  /// SHA-256 of the canonical JSON of (task, prompt, params).
  std::string idempotency_key() const;
};

/// Upstream answered with a status that will not improve on retry, or retries ran out.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class CacheCorruption : public Error {
 public:
  using Error::Error;
};

/// The judge reply could not be read as scores. `raw()` keeps the reply for audit.
class JudgeParseError : public Error {
 public:
  JudgeParseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct TransportResponse {
  /// 0 for connection failures.
  int status = 200;
  std::string text;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse send(const GatewayRequest& req) = 0;
};

bool is_transient(int status);

/// Offline stand-in for every task. Output is a pure function of the request.
class MockTransport : public Transport {
 public:
  enum class Mode { normal, malformed };

  explicit MockTransport(Mode mode = Mode::normal) : mode_(mode) {}

  TransportResponse send(const GatewayRequest& req) override;

  /// Statuses returned, in order, before normal answers resume.
  void inject_failures(std::vector<int> statuses);
  std::size_t calls() const { return calls_.load(); }

 private:
  Mode mode_;
  std::atomic<std::size_t> calls_{0};
  std::mutex mu_;
  std::deque<int> failures_;
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpTransport : public Transport {
 public:
  /// `api_key` empty means read FORGE_LLM_KEY.
  explicit HttpTransport(std::string base_url, std::string api_key = {},
                         std::chrono::seconds timeout = std::chrono::seconds(60));
  TransportResponse send(const GatewayRequest& req) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

struct JudgeScores {
  int ci = 0;
  int do_ = 0;
  int cu = 0;
  double ave = 0.0;
  std::map<std::string, bool> acc_attrs;

  friend bool operator==(const JudgeScores&, const JudgeScores&) = default;
};

/// Reads `{"ci":..,"do":..,"cu":..,"acc_attrs":{..}}`, tolerating prose around the object.
JudgeScores parse_judge_reply(std::string_view reply);
nlohmann::json to_json(const JudgeScores& s);
JudgeScores judge_scores_from_json(const nlohmann::json& j);

/// Prompt blocks are `<tag>\ncontent\n</tag>`; the mock reads them back by tag.
std::string prompt_block(std::string_view tag, std::string_view content);
std::optional<std::string> extract_block(std::string_view prompt, std::string_view tag);

inline constexpr std::string_view kJudgePromptVersion = "forge-judge/v1";
std::string judge_prompt(std::string_view question, std::string_view reference, std::string_view candidate,
                         const std::map<std::string, std::string>& gold_attributes = {});

struct RetryLogEntry {
  std::string key;
  int attempt = 0;
  int status = 0;
  std::chrono::milliseconds delay{0};
};

struct GatewayOptions {
  std::filesystem::path cache_dir = "cache";
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::size_t max_in_flight = 4;
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct GatewayStats {
  std::size_t upstream_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t coalesced = 0;
  std::size_t retries = 0;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Transport> transport, GatewayOptions options);

  /// Cached, retried, deduplicated completion.
  std::string complete(const GatewayRequest& req);
  JudgeScores judge(std::string_view question, std::string_view reference, std::string_view candidate,
                    const std::map<std::string, std::string>& gold_attributes = {}, GenerationParams params = {});

  GatewayStats stats() const;
  std::vector<RetryLogEntry> retry_log() const;
  std::filesystem::path cache_path(const GatewayRequest& req) const;

 private:
  std::optional<std::string> read_cache(const GatewayRequest& req, const std::string& key) const;
  void write_cache(const GatewayRequest& req, const std::string& key, const std::string& text) const;
  std::string call_upstream(const GatewayRequest& req, const std::string& key);

  std::shared_ptr<Transport> transport_;
  GatewayOptions options_;
  std::counting_semaphore<1024> in_flight_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::string>> pending_;
  GatewayStats stats_;
  std::vector<RetryLogEntry> retry_log_;
};

}  // namespace forge::gateway
