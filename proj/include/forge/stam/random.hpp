#pragma once

#include <cstdint>
#include <random>

namespace forge::stam {

/// Platform-stable uniform draws in [-1, 1). std::mt19937_64 output is fully specified by the
/// standard; the distributions are not, so we map raw bits ourselves.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace forge::stam
