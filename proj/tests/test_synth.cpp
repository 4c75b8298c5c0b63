#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "model_fixtures.hpp"
#include "tspulse/error.hpp"
#include "tspulse/synth.hpp"

using namespace tspulse;

namespace {

constexpr double kPi = std::numbers::pi;

GeneratorSpec base(Pattern p, double f, std::size_t L = 512, std::uint64_t seed = 0) {
  GeneratorSpec s;
  s.p1 = p;
  s.frequency = f;
  s.length = L;
  s.seed = seed;
  return s;
}

// Table rows evaluated directly, phase 0.
std::vector<double> direct(Pattern p, double f, std::size_t L, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(L);
  double walk = f;
  for (std::size_t t = 0; t < L; ++t) {
    const double b = 2.0 * kPi * double(t) * f / double(L);
    const double c = double(t) * f / double(L);
    switch (p) {
      case Pattern::sin: v[t] = std::sin(b); break;
      case Pattern::modcos: v[t] = std::cos(b) * std::sin(b / 2); break;
      case Pattern::square_modcos:
        v[t] = (std::sin(b) > 0 ? 1.0 : std::sin(b) < 0 ? -1.0 : 0.0) * std::abs(std::cos(2 * b));
        break;
      case Pattern::gaussian_spike: v[t] = std::exp(-40.0 * std::pow(c - f / 2, 2)); break;
      case Pattern::impulse: v[t] = std::fmod(double(t), 10.0 * f) == 0.0 ? 1.0 : 0.0; break;
      case Pattern::randwalk:
        walk += normal(rng);
        v[t] = walk;
        break;
      case Pattern::sincos: v[t] = std::sin(b) * std::cos(2 * b); break;
      case Pattern::tanhmix: v[t] = std::tanh(std::sin(3 * b)) + 0.2 * normal(rng); break;
    }
  }
  return v;
}

Embedder identity_embedder() {
  return [](const std::vector<Series>& xs) {
    std::vector<std::vector<double>> out;
    for (const Series& x : xs) {
      std::vector<double> v = x.values;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!x.observed.empty() && !x.observed[i]) v[i] = 0.0;
      out.push_back(v);
    }
    return out;
  };
}

}  // namespace

TEST(Generate, SineClosedForm) {
  EXPECT_NEAR(generate(base(Pattern::sin, 1.0)).values[128], 1.0, 1e-15);
}

TEST(Generate, EveryBasePatternMatchesTable) {
  for (Pattern p : kBasePatterns)
    for (double f : {1.0, 3.0, 7.0}) {
      const Series s = generate(base(p, f, 512, 42));
      const auto want = direct(p, f, 512, 42);
      for (std::size_t t = 0; t < 512; ++t) ASSERT_NEAR(s.values[t], want[t], 1e-12) << pattern_name(p) << " " << t;
    }
}

TEST(Generate, ImpulsePositions) {
  const Series s = generate(base(Pattern::impulse, 1.0));
  for (std::size_t t = 0; t < 512; ++t) EXPECT_EQ(s.values[t] != 0.0, t % 10 == 0) << t;
}

TEST(Generate, RandomWalkReproducibleWithCenteredSteps) {
  const Series a = generate(base(Pattern::randwalk, 2.0, 10000, 7));
  const Series b = generate(base(Pattern::randwalk, 2.0, 10000, 7));
  EXPECT_EQ(a.values, b.values);
  double mean = 0.0;
  for (std::size_t t = 1; t < a.values.size(); ++t) mean += a.values[t] - a.values[t - 1];
  mean /= double(a.values.size() - 1);
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(10000.0));
  EXPECT_NE(generate(base(Pattern::randwalk, 2.0, 100, 8)).values, generate(base(Pattern::randwalk, 2.0, 100, 7)).values);
}

TEST(Generate, CombosAreSumsAndProducts) {
  const auto specs = combo_specs();
  ASSERT_EQ(specs.size(), 56u);
  std::set<std::string> names;
  for (GeneratorSpec s : specs) {
    names.insert(s.family());
    if (s.p1 == Pattern::randwalk || s.p2 == Pattern::randwalk || s.p1 == Pattern::tanhmix ||
        s.p2 == Pattern::tanhmix)
      continue;
    s.frequency = 3.0;
    const Series c = generate(s);
    const Series a = generate(base(s.p1, 3.0)), b = generate(base(s.p2, 3.0));
    for (std::size_t t = 0; t < 512; ++t) {
      const double want = s.op == Combine::add ? a.values[t] + b.values[t] : a.values[t] * b.values[t];
      ASSERT_NEAR(c.values[t], want, 1e-15);
    }
  }
  EXPECT_EQ(names.size(), 56u);
}

TEST(Generate, SensitivityFamilies) {
  GeneratorSpec s = base(Pattern::sin, 2.0, 256);
  s.phase = 0.3;
  s.kind = GeneratorKind::shape;
  s.shape = ShapeFn::f2;
  const Series f2 = generate(s);
  s.shape = ShapeFn::f3;
  const Series f3 = generate(s);
  s.kind = GeneratorKind::scaled_sine;
  s.exponent = 4.0;
  const Series sc = generate(s);
  s.kind = GeneratorKind::trend;
  s.trend = 2.0;
  s.frequency = 3.0;
  const Series tr = generate(s);
  for (std::size_t t = 0; t < 256; ++t) {
    const double x = std::sin(2 * kPi * double(t) * 2.0 / 256.0 + 0.3);
    EXPECT_NEAR(f2.values[t], 2 * std::pow(x + 1, 4) - 1, 1e-12);
    EXPECT_NEAR(f3.values[t], 2 * std::pow(x + 1, 0.25) - 1, 1e-12);
    EXPECT_NEAR(sc.values[t], (x < 0 ? -1 : 1) * std::pow(std::abs(x), 4.0), 1e-12);
    const double u = double(t) / 256.0;
    EXPECT_NEAR(tr.values[t], u * u + std::sin(3 * kPi * u + 0.3), 1e-12);
  }
}

TEST(Generate, InvalidSpecsRejected) {
  EXPECT_THROW(generate(base(Pattern::sin, 0.0)), ArgumentError);
  EXPECT_THROW(generate(base(Pattern::sin, 1.0, 0)), ArgumentError);
  EXPECT_THROW(parse_pattern("triangle"), ArgumentError);
  EXPECT_EQ(parse_pattern("square-modcos"), Pattern::square_modcos);
}

TEST(Corpus, SearchRecipeIs1680) {
  const auto items = build_search_corpus(512, 1);
  ASSERT_EQ(items.size(), 56u * 10u * 3u);
  std::map<std::string, int> fam, fine;
  std::set<std::string> ids;
  for (const auto& it : items) {
    EXPECT_EQ(it.x.length, 512u);
    ++fam[it.family];
    ++fine[it.fine];
    ids.insert(it.id);
  }
  EXPECT_EQ(fam.size(), 56u);
  EXPECT_EQ(fine.size(), 560u);
  EXPECT_EQ(ids.size(), 1680u);
  for (auto& [k, n] : fam) EXPECT_EQ(n, 30);
  for (auto& [k, n] : fine) EXPECT_EQ(n, 3);
}

TEST(Corpus, PretrainSplitsAreDisjointAndDeterministic) {
  const auto train = build_pretrain_corpus(300, 64, 5, CorpusSplit::train);
  const auto eval = build_pretrain_corpus(300, 64, 5, CorpusSplit::eval);
  const auto again = build_pretrain_corpus(300, 64, 5, CorpusSplit::train);
  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_EQ(train[i].values, again[i].values);
    EXPECT_EQ(train[i].length, 64u);
    seen.insert(train[i].values);
  }
  for (const auto& x : eval) EXPECT_EQ(seen.count(x.values), 0u);
  EXPECT_EQ(build_pretrain_corpus(1680, 512, 2).size(), 1680u);
  EXPECT_THROW(build_pretrain_corpus(0, 64, 1), ArgumentError);
}

TEST(Distortion, EmptyMaskGivesZero) {
  std::vector<Series> xs;
  for (int i = 0; i < 6; ++i) xs.push_back(generate(base(Pattern::sin, 1.0 + i, 64)));
  const auto r = distortion_mask(identity_embedder(), xs, xs);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.used, 15u);
}

TEST(Distortion, MaskHandInstance) {
  Series x(4, 1), y(4, 1);
  x.values = {1, 2, 3, 4};
  y.values = {0, 0, 0, 0};
  Series xm = x, ym = y;
  xm.observed = {1, 0, 1, 1};
  ym.observed = {1, 0, 1, 1};
  // |x - y| = sqrt(30); with index 1 zeroed: sqrt(26).
  const auto r = distortion_mask(identity_embedder(), {x, y}, {xm, ym});
  EXPECT_NEAR(r.value, 1.0 - std::sqrt(26.0 / 30.0), 1e-15);
  const auto same = distortion_mask(identity_embedder(), {x, x}, {xm, xm});
  EXPECT_EQ(same.used, 0u);
  EXPECT_EQ(same.skipped, 1u);
}

TEST(Distortion, NoiseMatchesAnalyticValue) {
  const double eta = 0.5;
  std::vector<Series> clean, noisy;
  Rng rng(3);
  for (int i = 0; i < 40; ++i) {
    Series x = generate(base(Pattern::sin, 4.0, 8192));
    clean.push_back(x);
    for (double& v : x.values) v += eta * normal(rng);
    noisy.push_back(x);
  }
  EXPECT_EQ(distortion_noise(identity_embedder(), clean, clean).value, 0.0);
  // E|x + n|^2 / |x|^2 = 1 + eta^2 / mean(x^2) with mean(x^2) = 1/2.
  const double want = std::sqrt(1.0 + eta * eta / 0.5) - 1.0;
  EXPECT_NEAR(distortion_noise(identity_embedder(), clean, noisy).value, want, 5e-3);
}

TEST(Distortion, PhaseMatchesTrigIdentity) {
  for (double phi : {0.0, 0.4, 1.0, 2.5}) {
    std::vector<Series> a, b;
    for (double f : {2.0, 3.0, 5.0}) {
      GeneratorSpec s = base(Pattern::sin, f, 512);
      s.phase = 0.7;
      a.push_back(generate(s));
      s.phase += phi;
      b.push_back(generate(s));
    }
    EXPECT_NEAR(distortion_phase(identity_embedder(), a, b).value, 2.0 * std::abs(std::sin(phi / 2)), 1e-6);
  }
  Series z(8, 1);
  const auto r = distortion_phase(identity_embedder(), {z}, {generate(base(Pattern::sin, 1.0, 8))});
  EXPECT_EQ(r.skipped, 1u);
}

TEST(Distortion, RotationInvariant) {
  std::vector<Series> xs, ms;
  for (int i = 0; i < 5; ++i) xs.push_back(generate(base(Pattern::sincos, 1.0 + i, 16)));
  ms = apply_masks(xs, MaskKind::hybrid, 0.25, 4, 2);
  const Embedder id = identity_embedder();
  // Orthogonal map: reverse and negate pairs of coordinates.
  const Embedder rot = [id](const std::vector<Series>& s) {
    auto e = id(s);
    for (auto& v : e) {
      std::reverse(v.begin(), v.end());
      for (std::size_t j = 0; j < v.size(); j += 2) v[j] = -v[j];
    }
    return e;
  };
  EXPECT_NEAR(distortion_mask(id, xs, ms).value, distortion_mask(rot, xs, ms).value, 1e-14);
}

TEST(Sensitivity, ToyModelRunsAllViews) {
  const Model m = init_model(tsptest::toy_config(), 2);
  SensitivityConfig cfg;
  cfg.samples = 8;
  const auto rows = run_sensitivity(m, cfg);
  EXPECT_EQ(rows.size(), 27u);
  for (const auto& r : rows) {
    EXPECT_TRUE(std::isfinite(r.delta.value));
    EXPECT_GE(r.delta.value, 0.0);
    EXPECT_GT(r.delta.used, 0u);
  }
}
