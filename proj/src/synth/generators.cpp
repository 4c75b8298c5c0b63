#include <cmath>
#include <numbers>

#include "tspulse/error.hpp"
#include "tspulse/rng.hpp"
#include "tspulse/synth.hpp"

namespace tspulse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> pattern_values(Pattern p, const GeneratorSpec& s, Rng& rng) {
  const std::size_t L = s.length;
  const double f = s.frequency;
  std::vector<double> v(L);
  auto b = [&](std::size_t t) { return kTwoPi * double(t) * f / double(L) + s.phase; };
  switch (p) {
    case Pattern::sin:
      for (std::size_t t = 0; t < L; ++t) v[t] = std::sin(b(t));
      break;
    case Pattern::modcos:
      for (std::size_t t = 0; t < L; ++t) v[t] = std::cos(b(t)) * std::sin(b(t) / 2.0);
      break;
    case Pattern::square_modcos:
      for (std::size_t t = 0; t < L; ++t) {
        const double sn = std::sin(b(t));
        v[t] = double((sn > 0) - (sn < 0)) * std::abs(std::cos(2.0 * b(t)));
      }
      break;
    case Pattern::gaussian_spike:
      for (std::size_t t = 0; t < L; ++t) {
        const double c = double(t) * f / double(L) + s.phase / kTwoPi;
        v[t] = std::exp(-40.0 * (c - f / 2.0) * (c - f / 2.0));
      }
      break;
    case Pattern::impulse: {
      const auto period = std::max<long long>(1, std::llround(10.0 * f));
      const auto shift = std::llround(s.phase * double(L) / (kTwoPi * f));
      for (std::size_t t = 0; t < L; ++t) v[t] = ((static_cast<long long>(t) + shift) % period + period) % period == 0;
      break;
    }
    case Pattern::randwalk: {
      double acc = f;
      for (std::size_t t = 0; t < L; ++t) v[t] = acc += normal(rng);
      break;
    }
    case Pattern::sincos:
      for (std::size_t t = 0; t < L; ++t) v[t] = std::sin(b(t)) * std::cos(2.0 * b(t));
      break;
    case Pattern::tanhmix:
      for (std::size_t t = 0; t < L; ++t) v[t] = std::tanh(std::sin(3.0 * b(t))) + 0.2 * normal(rng);
      break;
  }
  return v;
}

}  // namespace

const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::sin: return "sin";
    case Pattern::modcos: return "modcos";
    case Pattern::square_modcos: return "square-modcos";
    case Pattern::gaussian_spike: return "gaussian-spike";
    case Pattern::impulse: return "impulse";
    case Pattern::randwalk: return "randwalk";
    case Pattern::sincos: return "sincos";
    case Pattern::tanhmix: return "tanhmix";
  }
  return "unknown";
}

Pattern parse_pattern(std::string_view name) {
  for (Pattern p : kBasePatterns)
    if (name == pattern_name(p)) return p;
  throw ArgumentError("unknown pattern '" + std::string(name) + "'");
}

void GeneratorSpec::validate() const {
  if (length == 0) throw ArgumentError("generator length must be positive");
  if (!(frequency > 0.0) || !std::isfinite(frequency)) throw ArgumentError("generator frequency must be positive");
  if (!std::isfinite(phase) || !std::isfinite(scale)) throw ArgumentError("generator phase and scale must be finite");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ArgumentError("generator noise must be non-negative");
  if (kind == GeneratorKind::scaled_sine && !(exponent > 0.0)) throw ArgumentError("exponent must be positive");
  if (kind == GeneratorKind::trend && !(trend >= 0.0)) throw ArgumentError("trend exponent must be non-negative");
}

std::string GeneratorSpec::family() const {
  switch (kind) {
    case GeneratorKind::base: return pattern_name(p1);
    case GeneratorKind::combo:
      return std::string(pattern_name(p1)) + (op == Combine::add ? "+" : "*") + pattern_name(p2);
    case GeneratorKind::scaled_sine: return "scaled-sine";
    case GeneratorKind::trend: return "trend";
    case GeneratorKind::shape: return shape == ShapeFn::f1 ? "F1" : shape == ShapeFn::f2 ? "F2" : "F3";
  }
  return "unknown";
}

Series generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t L = spec.length;
  std::vector<double> v;
  switch (spec.kind) {
    case GeneratorKind::base: v = pattern_values(spec.p1, spec, rng); break;
    case GeneratorKind::combo: {
      v = pattern_values(spec.p1, spec, rng);
      const std::vector<double> w = pattern_values(spec.p2, spec, rng);
      for (std::size_t t = 0; t < L; ++t) v[t] = spec.op == Combine::add ? v[t] + w[t] : v[t] * w[t];
      break;
    }
    case GeneratorKind::scaled_sine:
      v = pattern_values(Pattern::sin, spec, rng);
      for (double& x : v) x = std::copysign(std::pow(std::abs(x), spec.exponent), x);
      break;
    case GeneratorKind::trend:
      v.resize(L);
      for (std::size_t t = 0; t < L; ++t) {
        const double u = double(t) / double(L);
        v[t] = std::pow(u, spec.trend) + std::sin(std::numbers::pi * spec.frequency * u + spec.phase);
      }
      break;
    case GeneratorKind::shape:
      v = pattern_values(Pattern::sin, spec, rng);
      for (double& x : v) {
        if (spec.shape == ShapeFn::f2) x = 2.0 * std::pow(x + 1.0, 4.0) - 1.0;
        if (spec.shape == ShapeFn::f3) x = 2.0 * std::pow(x + 1.0, 0.25) - 1.0;
      }
      break;
  }
  Series out(L, 1);
  for (std::size_t t = 0; t < L; ++t) out.values[t] = spec.scale * v[t];
  if (spec.noise > 0.0)
    for (double& x : out.values) x += spec.noise * normal(rng);
  return out;
}

std::vector<GeneratorSpec> combo_specs() {
  std::vector<GeneratorSpec> out;
  for (Combine op : {Combine::add, Combine::mul})
    for (std::size_t i = 0; i < kBasePatterns.size(); ++i)
      for (std::size_t j = i + 1; j < kBasePatterns.size(); ++j) {
        GeneratorSpec s;
        s.kind = GeneratorKind::combo;
        s.p1 = kBasePatterns[i];
        s.p2 = kBasePatterns[j];
        s.op = op;
        out.push_back(s);
      }
  return out;
}

namespace {

constexpr std::size_t kFrequencies = 10;
constexpr std::size_t kVariants = 3;

// Recipe entry r of the 56 x 10 x 3 search layout.
GeneratorSpec recipe(const std::vector<GeneratorSpec>& combos, std::size_t r, std::size_t length) {
  GeneratorSpec s = combos[r / (kFrequencies * kVariants)];
  s.frequency = double(r / kVariants % kFrequencies + 1);
  s.length = length;
  return s;
}

// 1% scaling and noise with sigma 1% of the series std.
void light_augment(Series& x, Rng& rng) {
  const double a = uniform(rng, 0.99, 1.01);
  double mean = 0.0;
  for (double& v : x.values) mean += v *= a;
  mean /= double(x.values.size());
  double var = 0.0;
  for (double v : x.values) var += (v - mean) * (v - mean);
  const double sigma = 0.01 * std::sqrt(var / double(x.values.size()));
  for (double& v : x.values) v += sigma * normal(rng);
}

}  // namespace

std::vector<BenchmarkItem> build_search_corpus(std::size_t length, std::uint64_t seed) {
  const auto combos = combo_specs();
  const std::size_t n = combos.size() * kFrequencies * kVariants;
  std::vector<BenchmarkItem> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    GeneratorSpec s = recipe(combos, r, length);
    s.seed = derive_seed(seed, r);
    BenchmarkItem it;
    it.x = generate(s);
    Rng rng(derive_seed(s.seed, "variant"));
    light_augment(it.x, rng);
    const std::string f = std::to_string(static_cast<int>(s.frequency));
    it.family = s.family();
    it.fine = it.family + "@" + f;
    it.id = it.fine + "#" + std::to_string(r % kVariants);
    out.push_back(std::move(it));
  }
  return out;
}

std::vector<Series> build_pretrain_corpus(std::size_t n_windows, std::size_t length, std::uint64_t seed,
                                          CorpusSplit split) {
  if (n_windows == 0) throw ArgumentError("corpus needs at least one window");
  const auto combos = combo_specs();
  const std::size_t cycle = combos.size() * kFrequencies * kVariants;
  const std::uint64_t root = derive_seed(seed, split == CorpusSplit::train ? "corpus-train" : "corpus-eval");
  std::vector<Series> out;
  out.reserve(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) {
    GeneratorSpec s = recipe(combos, i % cycle, length);
    s.seed = derive_seed(root, i);
    Rng rng(derive_seed(s.seed, "draw"));
    s.phase = uniform(rng, 0.0, kTwoPi);
    s.noise = uniform(rng, 0.0, 0.1);
    out.push_back(generate(s));
  }
  return out;
}

}  // namespace tspulse
