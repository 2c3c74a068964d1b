#include <httplib.h>

#include <chrono>

#include "forge/review/review.hpp"

namespace forge::review {

struct ReviewServer::Impl {
  Impl(ReviewStore& s, ServerOptions o) : store(s), options(std::move(o)) {}
  ReviewStore& store;
  ServerOptions options;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

std::optional<std::string> header(const httplib::Request& req, const char* key) {
  if (!req.has_header(key)) return std::nullopt;
  return req.get_header_value(key);
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

ReviewServer::ReviewServer(ReviewStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  auto& s = impl_->server;
  auto& st = impl_->store;

  s.Get("/items", [&st](const httplib::Request& req, httplib::Response& res) {
    auto status = param(req, "status");
    auto cursor = param(req, "cursor");
    auto limit = param(req, "limit");
    send(res, st.list_items(status, cursor, limit));
  });
  s.Get(R"(/items/([^/]+))", [&st](const httplib::Request& req, httplib::Response& res) {
    send(res, st.get_item(req.matches[1].str()));
  });
  s.Post(R"(/items/([^/]+)/audit)", [&st](const httplib::Request& req, httplib::Response& res) {
    auto annotator = header(req, "X-Annotator-Id");
    auto key = header(req, "Idempotency-Key");
    send(res, st.post_audit(req.matches[1].str(), req.body, annotator, key, now_ms()));
  });
  s.Get("/stats", [&st](const httplib::Request&, httplib::Response& res) { send(res, st.stats()); });
  s.Get("/audits", [&st](const httplib::Request&, httplib::Response& res) { send(res, st.export_audits()); });
  s.Get("/openapi.json", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(openapi_document()), "application/json");
  });

  const auto& files = impl_->options.files_root;
  if (!files.empty()) {
    for (const char* sub : {"renders", "keyframes"})
      if (std::filesystem::is_directory(files / sub)) s.set_mount_point(std::string("/files/") + sub, (files / sub).string());
  }
  if (!impl_->options.ui_root.empty()) s.set_mount_point("/", impl_->options.ui_root.string());
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) return o.port = impl_->server.bind_to_any_port(o.host);
  if (!impl_->server.bind_to_port(o.host, o.port)) return -1;
  return o.port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace forge::review
