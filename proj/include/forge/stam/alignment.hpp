#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/stam/grid.hpp"

namespace forge::stam {

inline constexpr double kDefaultLambda = 0.1;

template <std::floating_point T>
struct ImportanceMaps {
  /// Fused per-frame weights; each frame is non-negative and sums to 1.
  FrameMaps<T> weights;
  /// Per-modality token degrees (row sums of the cosine Gram matrix).
  FrameMaps<T> rgb_saliency;
  FrameMaps<T> event_saliency;
  std::vector<std::string> warnings;
};

namespace detail {

/// Row sums of the Gram matrix of L2-normalized tokens for frame t, computed as
/// <u_i, sum_j u_j> in a fixed order. Zero tokens stay zero and are reported.
template <std::floating_point T>
void token_degrees(const FeatureGrid<T>& g, std::size_t t, T* out, const char* modality,
                   std::vector<std::string>& warnings) {
  const std::size_t n = g.h() * g.w();
  const std::size_t d = g.d();
  std::vector<T> unit(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* tok = g.token(t, i / g.w(), i % g.w());
    T sq = 0;
    for (std::size_t c = 0; c < d; ++c) sq += tok[c] * tok[c];
    const T norm = std::sqrt(sq);
    if (norm == T(0)) {
      warnings.push_back(std::string(modality) + " token (t=" + std::to_string(t) + ", y=" +
                         std::to_string(i / g.w()) + ", x=" + std::to_string(i % g.w()) +
                         ") has zero norm; left unnormalized");
      continue;
    }
    for (std::size_t c = 0; c < d; ++c) unit[i * d + c] = tok[c] / norm;
  }
  std::vector<T> total(d, T(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) total[c] += unit[i * d + c];
  for (std::size_t i = 0; i < n; ++i) {
    T acc = 0;
    for (std::size_t c = 0; c < d; ++c) acc += unit[i * d + c] * total[c];
    out[i] = acc;
  }
}

}  // namespace detail

/// Dual self-attention saliency. Per frame: token degrees for each modality, averaged,
/// shifted so the minimum is 0 and divided by the sum. A frame whose averaged degrees are
/// all equal (including a single token) gets the uniform map.
template <std::floating_point T>
ImportanceMaps<T> stam_importance(const AlignedPair<T>& pair) {
  pair.check();
  const auto& r = pair.rgb;
  const std::size_t n = r.h() * r.w();
  ImportanceMaps<T> maps{FrameMaps<T>(r.t(), r.h(), r.w()), FrameMaps<T>(r.t(), r.h(), r.w()),
                         FrameMaps<T>(r.t(), r.h(), r.w()), {}};
  std::vector<T> fused(n);
  for (std::size_t t = 0; t < r.t(); ++t) {
    T* dr = maps.rgb_saliency.frame(t);
    T* de = maps.event_saliency.frame(t);
    detail::token_degrees(pair.rgb, t, dr, "rgb", maps.warnings);
    detail::token_degrees(pair.event, t, de, "event", maps.warnings);

    T lo = std::numeric_limits<T>::infinity();
    T peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
      fused[i] = (dr[i] + de[i]) / T(2);
      lo = std::min(lo, fused[i]);
      peak = std::max(peak, std::abs(fused[i]));
    }
    T sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      fused[i] -= lo;
      sum += fused[i];
    }
    T* w = maps.weights.frame(t);
    const T degenerate = static_cast<T>(16 * n) * std::numeric_limits<T>::epsilon() * std::max(T(1), peak);
    if (!(sum > degenerate)) {
      std::fill(w, w + n, T(1) / static_cast<T>(n));
    } else {
      for (std::size_t i = 0; i < n; ++i) w[i] = fused[i] / sum;
    }
  }
  return maps;
}

/// Channel-wise mean absolute difference per lattice site.
template <std::floating_point T>
FrameMaps<T> discrepancy_map(const AlignedPair<T>& pair) {
  pair.check();
  const auto& r = pair.rgb;
  const auto& e = pair.event;
  FrameMaps<T> out(r.t(), r.h(), r.w());
  const auto d = static_cast<T>(r.d());
  for (std::size_t t = 0; t < r.t(); ++t)
    for (std::size_t y = 0; y < r.h(); ++y)
      for (std::size_t x = 0; x < r.w(); ++x) {
        const T* a = r.token(t, y, x);
        const T* b = e.token(t, y, x);
        T acc = 0;
        for (std::size_t c = 0; c < r.d(); ++c) acc += std::abs(a[c] - b[c]);
        out(t, y, x) = acc / d;
      }
  return out;
}

/// Frame-averaged importance-weighted discrepancy.
template <std::floating_point T>
T ca_wtd_loss(const FrameMaps<T>& weights, const FrameMaps<T>& discrepancy) {
  if (!weights.same_shape(discrepancy) || weights.t() == 0) {
    throw std::invalid_argument("ca_wtd_loss: shape mismatch between importance and discrepancy maps");
  }
  T total = 0;
  for (std::size_t t = 0; t < weights.t(); ++t) {
    const T* w = weights.frame(t);
    const T* d = discrepancy.frame(t);
    T inner = 0;
    for (std::size_t i = 0; i < weights.frame_size(); ++i) inner += w[i] * d[i];
    total += inner;
  }
  return total / static_cast<T>(weights.t());
}

template <std::floating_point T>
struct LossBreakdown {
  T l_cawtd = 0;
  T lambda = 0;
  T l_llm = 0;
  T total = 0;
};

/// Adds the weighted alignment regularizer to an externally supplied language loss.
template <std::floating_point T>
LossBreakdown<T> total_loss(T l_llm, T l_cawtd, T lambda = static_cast<T>(kDefaultLambda)) {
  if (!std::isfinite(l_llm) || !std::isfinite(l_cawtd) || !std::isfinite(lambda)) {
    throw std::invalid_argument("total_loss: non-finite input");
  }
  return {l_cawtd, lambda, l_llm, l_llm + lambda * l_cawtd};
}

template <std::floating_point T>
struct LossGradients {
  T loss = 0;
  FeatureGrid<T> d_rgb;
  FeatureGrid<T> d_event;
};

/// Gradients of the alignment loss with `weights` held constant. |x| is differentiated with
/// sign(x), so exact ties contribute zero.
template <std::floating_point T>
LossGradients<T> loss_gradients(const AlignedPair<T>& pair, const FrameMaps<T>& weights) {
  pair.check();
  const auto& r = pair.rgb;
  const auto& e = pair.event;
  if (weights.t() != r.t() || weights.h() != r.h() || weights.w() != r.w()) {
    throw std::invalid_argument("loss_gradients: weight maps do not match the lattice");
  }
  LossGradients<T> out{ca_wtd_loss(weights, discrepancy_map(pair)), FeatureGrid<T>(r.t(), r.h(), r.w(), r.d()),
                       FeatureGrid<T>(r.t(), r.h(), r.w(), r.d())};
  const T scale = T(1) / (static_cast<T>(r.t()) * static_cast<T>(r.d()));
  for (std::size_t t = 0; t < r.t(); ++t)
    for (std::size_t y = 0; y < r.h(); ++y)
      for (std::size_t x = 0; x < r.w(); ++x) {
        const T w = weights(t, y, x) * scale;
        for (std::size_t c = 0; c < r.d(); ++c) {
          const T diff = r(t, y, x, c) - e(t, y, x, c);
          const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
          out.d_rgb(t, y, x, c) = w * sign;
          out.d_event(t, y, x, c) = -w * sign;
        }
      }
  return out;
}

/// Importance maps are computed from the pair and then treated as constants.
template <std::floating_point T>
LossGradients<T> loss_gradients(const AlignedPair<T>& pair) {
  return loss_gradients(pair, stam_importance(pair).weights);
}

}  // namespace forge::stam
