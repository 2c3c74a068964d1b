#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "forge/stam/kernel.hpp"
#include "support/stam_oracles.hpp"

using namespace forge::stam;
using forge::fixtures::Grid;
using forge::fixtures::Maps;
using forge::fixtures::random_grid;

TEST(Encoder, ConstantImageGivesIdenticalTokens) {
  Image<double> img(8, 8, 3, 0.25);
  auto g = toy_patch_encoder(img, 4, 5, 7);
  EXPECT_EQ(g.t(), 1u);
  EXPECT_EQ(g.h(), 2u);
  EXPECT_EQ(g.w(), 2u);
  EXPECT_EQ(g.d(), 5u);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(g(0, y, x, c), g(0, 0, 0, c));
}

TEST(Encoder, MatchesDoubleLoop) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Image<double> img(4, 4, 2);
  for (auto& v : img.data) v = u(rng);
  PatchEncoder<double> enc(2, 3, 2, 99);
  auto g = enc.encode(img);
  for (std::size_t py = 0; py < 2; ++py)
    for (std::size_t px = 0; px < 2; ++px)
      for (std::size_t o = 0; o < 3; ++o) {
        double expect = 0;
        for (std::size_t ch = 0; ch < 2; ++ch) {
          double mean = (img(2 * py, 2 * px, ch) + img(2 * py, 2 * px + 1, ch) + img(2 * py + 1, 2 * px, ch) +
                         img(2 * py + 1, 2 * px + 1, ch)) / 4.0;
          expect += enc.weights()[o * 2 + ch] * mean;
        }
        EXPECT_NEAR(g(0, py, px, o), expect, 1e-14);
      }
}

TEST(Encoder, DeterministicAndValidated) {
  Image<double> img(4, 4, 1, 1.0);
  EXPECT_EQ(toy_patch_encoder(img, 2, 4, 3), toy_patch_encoder(img, 2, 4, 3));
  EXPECT_NE(toy_patch_encoder(img, 2, 4, 3), toy_patch_encoder(img, 2, 4, 4));
  EXPECT_THROW(toy_patch_encoder(img, 3, 4, 3), std::invalid_argument);
}

TEST(TemporalConv, IdentityBranch) {
  std::mt19937_64 rng(2);
  auto f = random_grid(rng, 3, 2, 2, 4);
  EXPECT_EQ(TemporalConv<double>::identity(4, {1})(f), f);
}

TEST(TemporalConv, SingleStepUsesCentreTapOnly) {
  std::vector<std::vector<double>> taps{{0.3, 2.0, 0.7}};
  TemporalConv<double> conv(1, {3}, taps, {1.0});
  Grid f(1, 1, 1, 1, 5.0);
  EXPECT_DOUBLE_EQ(conv(f)(0, 0, 0, 0), 10.0);
}

TEST(TemporalConv, EvenKernelRejected) {
  EXPECT_THROW(TemporalConv<double>::initialized(2, {1, 2}), std::invalid_argument);
}

TEST(TemporalConv, MatchesDefinition) {
  std::mt19937_64 rng(3);
  auto f = random_grid(rng, 3, 2, 2, 4);
  auto conv = TemporalConv<double>::initialized(4, {1, 3}, 5, 0.3);
  auto out = conv(f);
  const std::size_t d = 4;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) {
        std::vector<double> cat;
        for (std::size_t b = 0; b < 2; ++b) {
          const std::size_t k = conv.kernel_sizes()[b];
          for (std::size_t c = 0; c < d; ++c) {
            double acc = 0;
            for (std::size_t j = 0; j < k; ++j) {
              const long src = long(t) + long(j) - long(k / 2);
              if (src >= 0 && src < 3) acc += conv.taps()[b][c * k + j] * f(src, y, x, c);
            }
            cat.push_back(acc);
          }
        }
        for (std::size_t o = 0; o < d; ++o) {
          double expect = 0;
          for (std::size_t j = 0; j < cat.size(); ++j) expect += conv.projection()[o * cat.size() + j] * cat[j];
          EXPECT_LT(std::abs(out(t, y, x, o) - expect), 1e-10);
        }
      }
}

TEST(TemporalSE, ZeroWeightsHalve) {
  std::mt19937_64 rng(4);
  auto f = random_grid(rng, 3, 2, 2, 3);
  auto out = TemporalSE<double>::zeros(3)(f);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(out.data()[i], f.data()[i] / 2);
}

TEST(TemporalSE, GatesInsideOpenInterval) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = random_grid(rng, 3, 2, 2, 3, -1e3, 1e3);
    auto gates = TemporalSE<double>::random(3, 2, trial, 50.0).gates(f);
    for (double g : gates) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(TemporalSE, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_grid(rng, 3, 2, 2, 3);
    auto se = TemporalSE<double>::random(3, 2, 100 + trial);
    Grid ones(3, 2, 2, 3, 1.0);
    auto grad = se.backward(f, ones);
    auto total = [&](const Grid& g) {
      auto o = se(g);
      return std::accumulate(o.data().begin(), o.data().end(), 0.0);
    };
    for (std::size_t i = 0; i < f.size(); ++i) {
      Grid up = f, down = f;
      up.data()[i] += 1e-5;
      down.data()[i] -= 1e-5;
      const double numeric = (total(up) - total(down)) / 2e-5;
      const double scale = std::max({std::abs(numeric), std::abs(grad.data()[i]), 1e-12});
      EXPECT_LT(std::abs(numeric - grad.data()[i]) / scale, 1e-4) << "trial " << trial << " coord " << i;
    }
  }
}

TEST(Lattice, IdentityAndConstant) {
  std::mt19937_64 rng(7);
  auto g = random_grid(rng, 3, 4, 5, 2);
  EXPECT_EQ(resample(g, {3, 4, 5}), g);
  Grid c(1, 3, 3, 2, 0.7);
  auto big = resample(c, {3, 7, 4});
  for (double v : big.data()) EXPECT_DOUBLE_EQ(v, 0.7);
}

TEST(Lattice, TwoByTwoToThreeByThreeByHand) {
  Grid g(1, 2, 2, 1);
  g(0, 0, 0, 0) = 0;
  g(0, 0, 1, 0) = 1;
  g(0, 1, 0, 0) = 2;
  g(0, 1, 1, 0) = 3;
  auto o = resample(g, {1, 3, 3});
  // Corner-aligned: the centre row and column sit halfway between the sources.
  const double expect[3][3] = {{0, 0.5, 1}, {1, 1.5, 2}, {2, 2.5, 3}};
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_DOUBLE_EQ(o(0, y, x, 0), expect[y][x]);
}

TEST(Lattice, RgbReplicatedAndEventInterpolated) {
  std::mt19937_64 rng(8);
  auto rgb = random_grid(rng, 1, 4, 4, 3);
  auto ev = random_grid(rng, 2, 2, 2, 3);
  auto pair = resample_to_lattice(rgb, ev, {3, 2, 2});
  for (std::size_t t = 1; t < 3; ++t)
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(pair.rgb.data()[t * 12 + i], pair.rgb.data()[i]);
  for (std::size_t i = 0; i < 12; ++i)
    EXPECT_NEAR(pair.event.data()[12 + i], 0.5 * (ev.data()[i] + ev.data()[12 + i]), 1e-15);
  auto lat = default_lattice(rgb, ev);
  EXPECT_EQ(lat.t, 2u);
  EXPECT_EQ(lat.h, 2u);
  EXPECT_THROW(resample_to_lattice(rgb, random_grid(rng, 2, 2, 2, 4)), std::invalid_argument);
}

TEST(Importance, SingletonFrame) {
  std::mt19937_64 rng(9);
  AlignedPair<double> p{random_grid(rng, 3, 1, 1, 4), random_grid(rng, 3, 1, 1, 4)};
  auto m = stam_importance(p);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(m.weights(t, 0, 0), 1.0);
}

TEST(Importance, OrthogonalTokensUniform) {
  Grid g(1, 1, 2, 2);
  g(0, 0, 0, 0) = 1;
  g(0, 0, 1, 1) = 1;
  auto m = stam_importance(AlignedPair<double>{g, g});
  EXPECT_DOUBLE_EQ(m.rgb_saliency(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.rgb_saliency(0, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.weights(0, 0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.weights(0, 0, 1), 0.5);
}

TEST(Importance, SymmetricForEqualGrids) {
  std::mt19937_64 rng(10);
  auto g = random_grid(rng, 3, 3, 3, 4);
  auto m = stam_importance(AlignedPair<double>{g, g});
  EXPECT_EQ(m.rgb_saliency, m.event_saliency);
}

TEST(Importance, MatchesGramOracleAndNormalizes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    AlignedPair<double> p{random_grid(rng, 3, 3, 4, 5), random_grid(rng, 3, 3, 4, 5)};
    auto m = stam_importance(p);
    auto expect = forge::fixtures::oracle_importance(p.rgb, p.event);
    for (std::size_t t = 0; t < 3; ++t) {
      double sum = 0;
      for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_GE(m.weights.frame(t)[i], 0.0);
        EXPECT_NEAR(m.weights.frame(t)[i], expect.frame(t)[i], 1e-12);
        sum += m.weights.frame(t)[i];
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Importance, ZeroTokenWarns) {
  std::mt19937_64 rng(12);
  auto r = random_grid(rng, 1, 2, 2, 3);
  for (std::size_t c = 0; c < 3; ++c) r(0, 1, 1, c) = 0;
  auto m = stam_importance(AlignedPair<double>{r, random_grid(rng, 1, 2, 2, 3)});
  ASSERT_EQ(m.warnings.size(), 1u);
  EXPECT_EQ(m.rgb_saliency(0, 1, 1), 0.0);
}

TEST(Discrepancy, EqualAndConstantOffset) {
  std::mt19937_64 rng(13);
  auto e = random_grid(rng, 2, 3, 3, 4);
  const auto same = discrepancy_map(AlignedPair<double>{e, e});
  for (double v : same.data()) EXPECT_EQ(v, 0.0);
  Grid r = e;
  for (auto& v : r.data()) v += 0.25;
  const auto shifted = discrepancy_map(AlignedPair<double>{r, e});
  for (double v : shifted.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(Discrepancy, LoopOracleExact) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    AlignedPair<double> p{random_grid(rng, 2, 2, 2, 3), random_grid(rng, 2, 2, 2, 3)};
    EXPECT_EQ(discrepancy_map(p), forge::fixtures::oracle_discrepancy(p.rgb, p.event));
  }
}

TEST(Loss, ZeroAndConstant) {
  Maps w(2, 2, 2, 0.25), zero(2, 2, 2, 0.0), c(2, 2, 2, 0.8);
  EXPECT_EQ(ca_wtd_loss(w, zero), 0.0);
  EXPECT_NEAR(ca_wtd_loss(w, c), 0.8, 1e-12);
  EXPECT_THROW(ca_wtd_loss(w, Maps(1, 2, 2)), std::invalid_argument);
}

TEST(Loss, LoopOracleExact) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Maps w(2, 2, 2), d(2, 2, 2);
    for (auto& v : w.data()) v = u(rng);
    for (auto& v : d.data()) v = u(rng);
    EXPECT_EQ(ca_wtd_loss(w, d), forge::fixtures::oracle_loss(w, d));
  }
}

TEST(Loss, EqualGridsEndToEndZero) {
  std::mt19937_64 rng(16);
  auto g = random_grid(rng, 3, 3, 3, 4);
  AlignedPair<double> p{g, g};
  EXPECT_EQ(ca_wtd_loss(stam_importance(p).weights, discrepancy_map(p)), 0.0);
}

TEST(Loss, NonNegativeAndInvariantUnderPermutations) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    AlignedPair<double> p{random_grid(rng, 2, 2, 3, 4), random_grid(rng, 2, 2, 3, 4)};
    const double base = ca_wtd_loss(stam_importance(p).weights, discrepancy_map(p));
    EXPECT_GE(base, 0.0);

    // Same channel permutation on both sides.
    std::vector<std::size_t> perm{2, 0, 3, 1};
    AlignedPair<double> pc = p;
    for (std::size_t i = 0; i < p.rgb.size() / 4; ++i)
      for (std::size_t c = 0; c < 4; ++c) {
        pc.rgb.data()[i * 4 + c] = p.rgb.data()[i * 4 + perm[c]];
        pc.event.data()[i * 4 + c] = p.event.data()[i * 4 + perm[c]];
      }
    auto d0 = discrepancy_map(p), d1 = discrepancy_map(pc);
    for (std::size_t i = 0; i < d0.data().size(); ++i) EXPECT_NEAR(d0.data()[i], d1.data()[i], 1e-15);
    EXPECT_NEAR(ca_wtd_loss(stam_importance(pc).weights, d1), base, 1e-12);

    // Same spatial permutation (swap two sites) on both sides.
    AlignedPair<double> ps = p;
    auto swap_sites = [](Grid& g) {
      for (std::size_t t = 0; t < g.t(); ++t)
        for (std::size_t c = 0; c < g.d(); ++c) std::swap(g(t, 0, 0, c), g(t, 1, 2, c));
    };
    swap_sites(ps.rgb);
    swap_sites(ps.event);
    auto w0 = stam_importance(p).weights, w1 = stam_importance(ps).weights;
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_NEAR(w0(t, 0, 0), w1(t, 1, 2), 1e-12);
      EXPECT_NEAR(w0(t, 1, 2), w1(t, 0, 0), 1e-12);
      EXPECT_NEAR(w0(t, 0, 1), w1(t, 0, 1), 1e-12);
    }
    EXPECT_NEAR(ca_wtd_loss(w1, discrepancy_map(ps)), base, 1e-12);
  }
}

TEST(TotalLoss, Examples) {
  EXPECT_NEAR(total_loss(2.0, 1.0, 0.1).total, 2.1, 1e-12);
  EXPECT_EQ(kDefaultLambda, 0.1);
  EXPECT_EQ(total_loss(3.5, 9.0, 0.0).total, 3.5);
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 20; ++i) {
    const double x = u(rng);
    EXPECT_EQ(total_loss(0.0, x, 1.0).total, x);
  }
  EXPECT_THROW(total_loss(std::nan(""), 1.0), std::invalid_argument);
  EXPECT_THROW(total_loss(1.0, std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Gradients, SignFollowsDiscrepancy) {
  Grid e(1, 1, 2, 2, 0.5);
  Grid r = e;
  r(0, 0, 1, 0) += 1e-3;
  auto g = loss_gradients(AlignedPair<double>{r, e}, Maps(1, 1, 2, 0.5));
  EXPECT_GT(g.d_rgb(0, 0, 1, 0), 0.0);
  EXPECT_LT(g.d_event(0, 0, 1, 0), 0.0);
}

TEST(Gradients, ZeroWeightGivesZeroGradient) {
  std::mt19937_64 rng(19);
  AlignedPair<double> p{random_grid(rng, 1, 1, 2, 3), random_grid(rng, 1, 1, 2, 3)};
  Maps w(1, 1, 2);
  w(0, 0, 1) = 1.0;
  auto g = loss_gradients(p, w);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(g.d_rgb(0, 0, 0, c), 0.0);
    EXPECT_EQ(g.d_event(0, 0, 0, c), 0.0);
  }
}

TEST(Gradients, FiniteDifferences) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    AlignedPair<double> p{random_grid(rng, 2, 2, 2, 3), random_grid(rng, 2, 2, 2, 3)};
    forge::fixtures::avoid_kinks(p.rgb, p.event, 1e-3);
    auto check = forge::fixtures::check_loss_gradients(p);
    EXPECT_EQ(check.coords, 48u);
    EXPECT_LT(check.max_rel_err, 1e-4) << "trial " << trial;
  }
}

TEST(Precision, FloatBuildAgreesWithDouble) {
  std::mt19937_64 rng(21);
  auto rd = random_grid(rng, 3, 3, 3, 4), ed = random_grid(rng, 3, 3, 3, 4);
  FeatureGrid<float> rf(3, 3, 3, 4), ef(3, 3, 3, 4);
  for (std::size_t i = 0; i < rd.size(); ++i) {
    rf.data()[i] = static_cast<float>(rd.data()[i]);
    ef.data()[i] = static_cast<float>(ed.data()[i]);
  }
  AlignedPair<double> pd{rd, ed};
  AlignedPair<float> pf{rf, ef};
  const double ld = ca_wtd_loss(stam_importance(pd).weights, discrepancy_map(pd));
  const float lf = ca_wtd_loss(stam_importance(pf).weights, discrepancy_map(pf));
  EXPECT_NEAR(lf, ld, 1e-5);
}
