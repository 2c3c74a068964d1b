#pragma once

// Loop-by-definition reference implementations used to check the kernel. They share no
// code with the library beyond the tensor containers.

#include <cmath>
#include <random>
#include <vector>

#include "forge/stam/alignment.hpp"
#include "forge/stam/grid.hpp"

namespace forge::fixtures {

using Grid = stam::FeatureGrid<double>;
using Maps = stam::FrameMaps<double>;

inline Grid random_grid(std::mt19937_64& rng, std::size_t t, std::size_t h, std::size_t w, std::size_t d,
                        double lo = -1.0, double hi = 1.0) {
  Grid g(t, h, w, d);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : g.data()) v = u(rng);
  return g;
}

// D[t][y][x] = (1/D) * sum_c |r - e|
inline Maps oracle_discrepancy(const Grid& r, const Grid& e) {
  Maps out(r.t(), r.h(), r.w());
  for (std::size_t t = 0; t < r.t(); ++t)
    for (std::size_t y = 0; y < r.h(); ++y)
      for (std::size_t x = 0; x < r.w(); ++x) {
        double s = 0;
        for (std::size_t c = 0; c < r.d(); ++c) s += std::abs(r(t, y, x, c) - e(t, y, x, c));
        out(t, y, x) = s / static_cast<double>(r.d());
      }
  return out;
}

// (1/T) * sum_t sum_{y,x} w * D
inline double oracle_loss(const Maps& w, const Maps& d) {
  double total = 0;
  for (std::size_t t = 0; t < w.t(); ++t) {
    double frame = 0;
    for (std::size_t y = 0; y < w.h(); ++y)
      for (std::size_t x = 0; x < w.w(); ++x) frame += w(t, y, x) * d(t, y, x);
    total += frame;
  }
  return total / static_cast<double>(w.t());
}

// Builds the full n x n cosine-affinity matrix and sums its rows, then min-shifts and
// normalizes the modality average.
inline Maps oracle_importance(const Grid& r, const Grid& e) {
  const std::size_t n = r.h() * r.w();
  Maps out(r.t(), r.h(), r.w());
  auto degrees = [&](const Grid& g, std::size_t t) {
    std::vector<std::vector<double>> u(n, std::vector<double>(g.d()));
    for (std::size_t i = 0; i < n; ++i) {
      double sq = 0;
      for (std::size_t c = 0; c < g.d(); ++c) sq += g(t, i / g.w(), i % g.w(), c) * g(t, i / g.w(), i % g.w(), c);
      for (std::size_t c = 0; c < g.d(); ++c)
        u[i][c] = sq > 0 ? g(t, i / g.w(), i % g.w(), c) / std::sqrt(sq) : 0.0;
    }
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double a = 0;
        for (std::size_t c = 0; c < g.d(); ++c) a += u[i][c] * u[j][c];
        deg[i] += a;
      }
    return deg;
  };
  for (std::size_t t = 0; t < r.t(); ++t) {
    auto dr = degrees(r, t), de = degrees(e, t);
    std::vector<double> avg(n);
    double lo = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      avg[i] = 0.5 * (dr[i] + de[i]);
      lo = std::min(lo, avg[i]);
    }
    double sum = 0;
    for (auto& v : avg) sum += (v -= lo);
    for (std::size_t i = 0; i < n; ++i)
      out(t, i / r.w(), i % r.w()) = sum > 1e-12 ? avg[i] / sum : 1.0 / static_cast<double>(n);
  }
  return out;
}

// Pushes every coordinate of the difference at least `gap` away from zero so |.| is smooth
// within the finite-difference step.
inline void avoid_kinks(Grid& r, const Grid& e, double gap) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    double diff = r.data()[i] - e.data()[i];
    if (std::abs(diff) < gap) r.data()[i] = e.data()[i] + (diff >= 0 ? gap : -gap);
  }
}

struct GradCheck {
  double max_rel_err = 0;
  std::size_t coords = 0;
};

// Central differences of the fixed-weight loss against the analytic gradients.
inline GradCheck check_loss_gradients(const stam::AlignedPair<double>& pair, double step = 1e-5) {
  const auto weights = stam::stam_importance(pair).weights;
  const auto analytic = stam::loss_gradients(pair, weights);
  GradCheck out;
  auto fixed_loss = [&](const Grid& r, const Grid& e) { return oracle_loss(weights, oracle_discrepancy(r, e)); };
  auto probe = [&](bool rgb_side) {
    Grid r = pair.rgb, e = pair.event;
    Grid& g = rgb_side ? r : e;
    const Grid& a = rgb_side ? analytic.d_rgb : analytic.d_event;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double keep = g.data()[i];
      g.data()[i] = keep + step;
      const double up = fixed_loss(r, e);
      g.data()[i] = keep - step;
      const double down = fixed_loss(r, e);
      g.data()[i] = keep;
      const double numeric = (up - down) / (2 * step);
      const double scale = std::max(std::abs(numeric), std::abs(a.data()[i]));
      const double err = scale < 1e-12 ? 0.0 : std::abs(numeric - a.data()[i]) / scale;
      out.max_rel_err = std::max(out.max_rel_err, err);
      ++out.coords;
    }
  };
  probe(true);
  probe(false);
  return out;
}

}  // namespace forge::fixtures
