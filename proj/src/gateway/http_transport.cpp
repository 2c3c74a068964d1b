#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "forge/gateway/gateway.hpp"

namespace forge::gateway {

using nlohmann::json;

HttpTransport::HttpTransport(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {
  if (api_key_.empty()) {
    if (const char* k = std::getenv("FORGE_LLM_KEY")) api_key_ = k;
  }
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

TransportResponse HttpTransport::send(const GatewayRequest& req) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  json body = {{"model", req.params.model},
               {"temperature", req.params.temperature},
               {"max_tokens", req.params.max_tokens},
               {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})}};
  auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res) return {0, "connection failed: " + httplib::to_string(res.error())};
  if (res->status < 200 || res->status >= 300) return {res->status, res->body};

  auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) return {502, "upstream body is not JSON"};
  try {
    return {200, j.at("choices").at(0).at("message").at("content").get<std::string>()};
  } catch (const json::exception&) {
    return {502, "upstream body lacks choices[0].message.content"};
  }
}

}  // namespace forge::gateway
