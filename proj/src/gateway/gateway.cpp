#include "forge/gateway/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>

#include "forge/common/fileio.hpp"
#include "forge/common/hash.hpp"

namespace forge::gateway {

using nlohmann::json;

std::string_view to_string(Task t) {
  switch (t) {
    case Task::caption: return "caption";
    case Task::graph_parse: return "graph_parse";
    case Task::paraphrase: return "paraphrase";
    case Task::judge: return "judge";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "caption") return Task::caption;
  if (s == "graph_parse") return Task::graph_parse;
  if (s == "paraphrase") return Task::paraphrase;
  if (s == "judge") return Task::judge;
  throw std::invalid_argument("unknown task '" + std::string(s) + "'");
}

json GatewayRequest::canonical() const {
  return {{"task", std::string(to_string(task))},
          {"prompt", prompt},
          {"params", {{"temperature", params.temperature}, {"max_tokens", params.max_tokens}, {"model", params.model}}}};
}

std::string GatewayRequest::idempotency_key() const { return sha256_hex(canonical().dump()); }

bool is_transient(int status) { return status == 0 || status == 429 || (status >= 500 && status <= 599); }

std::string prompt_block(std::string_view tag, std::string_view content) {
  std::string out;
  out += "<";
  out += tag;
  out += ">\n";
  out += content;
  if (!content.empty() && content.back() != '\n') out += "\n";
  out += "</";
  out += tag;
  out += ">\n";
  return out;
}

std::optional<std::string> extract_block(std::string_view prompt, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">\n";
  const std::string close = "</" + std::string(tag) + ">";
  auto b = prompt.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  b += open.size();
  auto e = prompt.find(close, b);
  if (e == std::string_view::npos) return std::nullopt;
  std::string body(prompt.substr(b, e - b));
  if (!body.empty() && body.back() == '\n') body.pop_back();
  return body;
}

std::string judge_prompt(std::string_view question, std::string_view reference, std::string_view candidate,
                         const std::map<std::string, std::string>& gold_attributes) {
  std::string p;
  p += "[";
  p += kJudgePromptVersion;
  p += "]\n";
  p += "You are evaluating a model answer about an event-camera scene against a reference answer.\n"
       "Score Correctness of Information (ci), Detail Orientation (do) and Contextual Understanding (cu),\n"
       "each an integer from 0 to 5. For every gold attribute, report whether the candidate states it.\n"
       "Reply with one JSON object only: {\"ci\":int,\"do\":int,\"cu\":int,\"acc_attrs\":{name:bool}}.\n";
  p += prompt_block("question", question);
  p += prompt_block("reference", reference);
  p += prompt_block("candidate", candidate);
  p += prompt_block("gold", json(gold_attributes).dump());
  return p;
}

json to_json(const JudgeScores& s) {
  return {{"ci", s.ci}, {"do", s.do_}, {"cu", s.cu}, {"ave", s.ave}, {"acc_attrs", s.acc_attrs}};
}

JudgeScores judge_scores_from_json(const json& j) {
  JudgeScores s;
  auto likert = [&](const char* key) {
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw std::invalid_argument(std::string(key) + " is not an integer");
    const int x = v.get<int>();
    if (x < 0 || x > 5) throw std::invalid_argument(std::string(key) + " outside 0..5");
    return x;
  };
  s.ci = likert("ci");
  s.do_ = likert("do");
  s.cu = likert("cu");
  s.ave = (s.ci + s.do_ + s.cu) / 3.0;
  if (auto it = j.find("acc_attrs"); it != j.end()) {
    for (auto a = it->begin(); a != it->end(); ++a) {
      if (!a.value().is_boolean()) throw std::invalid_argument("acc_attrs." + a.key() + " is not a boolean");
      s.acc_attrs[a.key()] = a.value().get<bool>();
    }
  }
  return s;
}

JudgeScores parse_judge_reply(std::string_view reply) {
  const auto b = reply.find('{');
  const auto e = reply.rfind('}');
  if (b == std::string_view::npos || e == std::string_view::npos || e < b)
    throw JudgeParseError("judge reply has no JSON object", std::string(reply));
  try {
    return judge_scores_from_json(json::parse(reply.substr(b, e - b + 1)));
  } catch (const std::exception& ex) {
    throw JudgeParseError(std::string("unreadable judge reply: ") + ex.what(), std::string(reply));
  }
}

Gateway::Gateway(std::shared_ptr<Transport> transport, GatewayOptions options)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options_.max_in_flight, 1, 1024))) {
  if (!transport_) throw std::invalid_argument("Gateway: null transport");
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::filesystem::path Gateway::cache_path(const GatewayRequest& req) const {
  return options_.cache_dir / std::string(to_string(req.task)) / (req.idempotency_key() + ".json");
}

std::optional<std::string> Gateway::read_cache(const GatewayRequest& req, const std::string& key) const {
  const auto path = cache_path(req);
  if (!std::filesystem::exists(path)) return std::nullopt;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CacheCorruption("cache entry " + path.string() + " is not valid JSON");
  }
  if (!j.is_object() || !j.contains("response") || !j.contains("sha256") || !j["response"].is_string())
    throw CacheCorruption("cache entry " + path.string() + " is missing fields");
  const std::string text = j["response"].get<std::string>();
  if (sha256_hex(text) != j["sha256"].get<std::string>() || j.value("key", std::string()) != key)
    throw CacheCorruption("cache entry " + path.string() + " fails its checksum");
  return text;
}

void Gateway::write_cache(const GatewayRequest& req, const std::string& key, const std::string& text) const {
  const auto path = cache_path(req);
  if (std::filesystem::exists(path)) return;
  json j = {{"key", key}, {"request", req.canonical()}, {"response", text}, {"sha256", sha256_hex(text)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string Gateway::call_upstream(const GatewayRequest& req, const std::string& key) {
  for (int attempt = 0;; ++attempt) {
    TransportResponse r;
    {
      in_flight_.acquire();
      try {
        r = transport_->send(req);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
    }
    {
      std::lock_guard lock(mu_);
      ++stats_.upstream_calls;
    }
    if (r.status >= 200 && r.status < 300) return r.text;
    if (!is_transient(r.status))
      throw ServiceError(r.status, "upstream returned status " + std::to_string(r.status) + ": " + r.text);
    if (attempt >= options_.max_retries)
      throw ServiceError(r.status, "upstream still failing after " + std::to_string(attempt) + " retries");
    const auto delay = options_.backoff_base * (1LL << attempt);
    {
      std::lock_guard lock(mu_);
      ++stats_.retries;
      retry_log_.push_back({key, attempt + 1, r.status, delay});
    }
    options_.sleep(delay);
  }
}

std::string Gateway::complete(const GatewayRequest& req) {
  const std::string key = req.idempotency_key();
  std::promise<std::string> promise;
  std::shared_future<std::string> waiting;
  {
    std::lock_guard lock(mu_);
    if (auto it = pending_.find(key); it != pending_.end()) {
      waiting = it->second;
      ++stats_.coalesced;
    } else {
      pending_.emplace(key, promise.get_future().share());
    }
  }
  if (waiting.valid()) return waiting.get();

  auto finish = [&] {
    std::lock_guard lock(mu_);
    pending_.erase(key);
  };
  try {
    std::string text;
    if (auto cached = read_cache(req, key)) {
      std::lock_guard lock(mu_);
      ++stats_.cache_hits;
      text = std::move(*cached);
    } else {
      text = call_upstream(req, key);
      write_cache(req, key, text);
    }
    promise.set_value(text);
    finish();
    return text;
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

JudgeScores Gateway::judge(std::string_view question, std::string_view reference, std::string_view candidate,
                           const std::map<std::string, std::string>& gold_attributes, GenerationParams params) {
  if (question.empty() || reference.empty()) throw std::invalid_argument("judge: question and reference must be non-empty");
  GatewayRequest req{Task::judge, judge_prompt(question, reference, candidate, gold_attributes), std::move(params)};
  return parse_judge_reply(complete(req));
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<RetryLogEntry> Gateway::retry_log() const {
  std::lock_guard lock(mu_);
  return retry_log_;
}

}  // namespace forge::gateway
