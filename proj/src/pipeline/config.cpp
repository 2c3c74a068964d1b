#include "forge/pipeline/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/hash.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;

fs::path PipelineConfig::resolve(const std::string& p) const {
  fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

fs::path PipelineConfig::cache_root() const {
  if (const char* env = std::getenv("FORGE_CACHE_DIR"); env && *env) return env;
  return cache_dir.empty() ? output_root() / "cache" : resolve(cache_dir);
}

nlohmann::json PipelineConfig::effective() const {
  return {{"dataset", {{"name", dataset_name}}},
          {"input", {{"index", index}, {"root", root}}},
          {"window",
           {{"n", n}, {"frame_ms", frame_ms}, {"n_slices", n_slices}, {"regression_tolerance_us", regression_tolerance_us}}},
          {"fusion", {{"tau", tau}}},
          {"synth", {{"mode", synth_mode}}},
          {"gateway",
           {{"mode", gateway_mode},
            {"base_url", base_url},
            {"model", model},
            {"temperature", temperature},
            {"max_tokens", max_tokens}}},
          {"stam", {{"lambda", lambda}}},
          {"output", {{"root", output}}},
          {"pipeline_version", std::string(kPipelineVersion)}};
}

std::string PipelineConfig::hash() const { return sha256_hex(effective().dump()); }

void PipelineConfig::validate() const {
  if (n == 0) throw ConfigError("window.n must be positive");
  if (frame_ms == 0) throw ConfigError("window.frame_ms must be positive");
  if (n_slices == 0) throw ConfigError("window.n_slices must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("fusion.tau must lie in [0, 1]");
  if (synth_mode != "template" && synth_mode != "external") throw ConfigError("synth.mode must be template or external");
  if (gateway_mode != "mock" && gateway_mode != "http") throw ConfigError("gateway.mode must be mock or http");
  if (gateway_mode == "http" && base_url.empty()) throw ConfigError("gateway.base_url is required in http mode");
  if (workers == 0) throw ConfigError("run.workers must be positive");
  if (max_in_flight == 0) throw ConfigError("gateway.max_in_flight must be positive");
  if (!fs::is_regular_file(index_path())) throw ConfigError("input.index not found: " + index_path().string());
  if (!fs::is_directory(input_root())) throw ConfigError("input.root not found: " + input_root().string());
}

namespace {

template <typename T>
void read(const toml::table& section, const std::string& name, std::string_view key, T& out) {
  const toml::node* node = section.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) {
      out = *v;
      return;
    }
  } else {
    if (auto v = node->value<std::int64_t>(); v && *v >= 0) {
      out = static_cast<T>(*v);
      return;
    }
  }
  throw ConfigError(name + "." + std::string(key) + " has the wrong type");
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const fs::path& base_dir) {
  toml::table doc;
  try {
    doc = toml::parse(text);
  } catch (const toml::parse_error& e) {
    throw ConfigError("config is not valid TOML: " + std::string(e.description()) + " (line " +
                      std::to_string(e.source().begin.line) + ")");
  }
  PipelineConfig c;
  c.base_dir = base_dir;

  using Setter = std::function<void(const toml::table&, const std::string&)>;
  const std::map<std::string, std::pair<std::set<std::string>, Setter>> sections = {
      {"dataset", {{"name"}, [&](auto& t, auto& n) { read(t, n, "name", c.dataset_name); }}},
      {"input",
       {{"index", "root"},
        [&](auto& t, auto& n) {
          read(t, n, "index", c.index);
          read(t, n, "root", c.root);
        }}},
      {"window",
       {{"n", "frame_ms", "n_slices", "regression_tolerance_us"},
        [&](auto& t, auto& n) {
          read(t, n, "n", c.n);
          read(t, n, "frame_ms", c.frame_ms);
          read(t, n, "n_slices", c.n_slices);
          read(t, n, "regression_tolerance_us", c.regression_tolerance_us);
        }}},
      {"fusion", {{"tau"}, [&](auto& t, auto& n) { read(t, n, "tau", c.tau); }}},
      {"synth", {{"mode"}, [&](auto& t, auto& n) { read(t, n, "mode", c.synth_mode); }}},
      {"gateway",
       {{"mode", "base_url", "model", "temperature", "max_tokens", "cache_dir", "max_in_flight"},
        [&](auto& t, auto& n) {
          read(t, n, "mode", c.gateway_mode);
          read(t, n, "base_url", c.base_url);
          read(t, n, "model", c.model);
          read(t, n, "temperature", c.temperature);
          read(t, n, "max_tokens", c.max_tokens);
          read(t, n, "cache_dir", c.cache_dir);
          read(t, n, "max_in_flight", c.max_in_flight);
        }}},
      {"stam", {{"lambda"}, [&](auto& t, auto& n) { read(t, n, "lambda", c.lambda); }}},
      {"output", {{"root"}, [&](auto& t, auto& n) { read(t, n, "root", c.output); }}},
      {"run", {{"workers"}, [&](auto& t, auto& n) { read(t, n, "workers", c.workers); }}},
  };

  for (const auto& [key, node] : doc) {
    const std::string name(key.str());
    auto it = sections.find(name);
    if (it == sections.end()) throw ConfigError("unknown config section [" + name + "]");
    const toml::table* table = node.as_table();
    if (!table) throw ConfigError("[" + name + "] must be a table");
    for (const auto& [k, _] : *table)
      if (!it->second.first.count(std::string(k.str())))
        throw ConfigError("unknown key " + name + "." + std::string(k.str()));
    it->second.second(*table, name);
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  return parse_config(text, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace forge::pipeline
