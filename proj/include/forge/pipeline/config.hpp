#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace forge::pipeline {

inline constexpr std::string_view kPipelineVersion = "forge-pipeline/1";

struct PipelineConfig {
  std::string dataset_name = "forge";
  /// Directory the config was read from; relative paths below resolve against it.
  std::filesystem::path base_dir = ".";

  // [input]
  std::string index = "keyframes.csv";
  std::string root = ".";

  // [window]
  std::uint32_t n = 4;
  std::uint32_t frame_ms = 33;
  std::uint32_t n_slices = 3;
  std::uint64_t regression_tolerance_us = 0;

  // [fusion]
  double tau = 0.3;

  // [synth]
  std::string synth_mode = "template";

  // [gateway]
  std::string gateway_mode = "mock";
  std::string base_url;
  std::string model = "mock";
  double temperature = 0.0;
  int max_tokens = 512;
  std::string cache_dir;
  std::size_t max_in_flight = 4;

  // [stam]
  double lambda = 0.1;

  // [output]
  std::string output = "out";

  // [run]
  std::size_t workers = 2;

  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path index_path() const { return resolve(index); }
  std::filesystem::path input_root() const { return resolve(root); }
  std::filesystem::path output_root() const { return resolve(output); }
  /// FORGE_CACHE_DIR wins over [gateway].cache_dir, which defaults to <output>/cache.
  std::filesystem::path cache_root() const;

  /// Settings that affect outputs, as a canonical JSON object. Worker count and the
  /// config location are excluded.
  nlohmann::json effective() const;
  /// SHA-256 of effective().dump(); independent of key order in the source file.
  std::string hash() const;

  /// Throws forge::ConfigError on out-of-range parameters or missing input paths.
  void validate() const;
};

/// Reads a TOML document. Unknown sections or keys are errors. Throws forge::ConfigError.
PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace forge::pipeline
