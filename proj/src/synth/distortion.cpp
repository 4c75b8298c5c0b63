#include <cmath>
#include <numbers>
#include <unordered_set>

#include "tspulse/error.hpp"
#include "tspulse/imputation.hpp"
#include "tspulse/rng.hpp"
#include "tspulse/synth.hpp"

namespace tspulse {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Up to `want` distinct unordered pairs of [0, n), drawn without replacement;
// every pair when there are no more than `want`.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(std::size_t n, std::size_t want, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t total = n * (n - 1) / 2;
  if (total <= want) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  Rng rng(derive_seed(seed, "pairs"));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::unordered_set<std::size_t> seen;
  while (out.size() < want) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (seen.insert(i * n + j).second) out.emplace_back(i, j);
  }
  return out;
}

void check_aligned(const std::vector<Series>& a, const std::vector<Series>& b, const char* what) {
  if (a.size() != b.size()) throw ArgumentError(std::string(what) + ": sample counts differ");
}

}  // namespace

DistortionResult distortion_mask(const Embedder& embed, const std::vector<Series>& clean,
                                 const std::vector<Series>& masked, std::size_t pairs, std::uint64_t seed) {
  check_aligned(clean, masked, "distortion_mask");
  if (clean.size() < 2) throw ArgumentError("distortion_mask needs at least two samples");
  const auto e = embed(clean), em = embed(masked);
  DistortionResult r;
  for (auto [i, j] : sample_pairs(clean.size(), pairs, seed)) {
    const double d = dist(e[i], e[j]);
    if (d == 0.0) {
      ++r.skipped;
      continue;
    }
    r.value += std::abs(1.0 - dist(em[i], em[j]) / d);
    ++r.used;
  }
  if (r.used) r.value /= double(r.used);
  return r;
}

DistortionResult distortion_noise(const Embedder& embed, const std::vector<Series>& clean,
                                  const std::vector<Series>& noisy) {
  check_aligned(clean, noisy, "distortion_noise");
  const auto e = embed(clean), en = embed(noisy);
  DistortionResult r;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double n0 = norm(e[i]);
    if (n0 == 0.0) {
      ++r.skipped;
      continue;
    }
    r.value += std::abs(norm(en[i]) / n0 - 1.0);
    ++r.used;
  }
  if (r.used) r.value /= double(r.used);
  return r;
}

DistortionResult distortion_phase(const Embedder& embed, const std::vector<Series>& a, const std::vector<Series>& b) {
  check_aligned(a, b, "distortion_phase");
  const auto ea = embed(a), eb = embed(b);
  DistortionResult r;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const double m = std::min(norm(ea[i]), norm(eb[i]));
    if (m == 0.0) {
      ++r.skipped;
      continue;
    }
    r.value += dist(ea[i], eb[i]) / m;
    ++r.used;
  }
  if (r.used) r.value /= double(r.used);
  return r;
}

std::vector<Series> apply_masks(const std::vector<Series>& xs, MaskKind kind, double ratio, std::size_t patch_len,
                                std::uint64_t seed) {
  std::vector<Series> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(hide(xs[i], make_mask_plan(kind, xs[i].length, xs[i].channels, patch_len, ratio, rng)));
  }
  return out;
}

std::vector<SensitivityRow> run_sensitivity(const Model& m, const SensitivityConfig& cfg) {
  if (cfg.samples < 2) throw ArgumentError("sensitivity needs at least two samples");
  const std::size_t S = m.cfg.context;
  std::vector<GeneratorSpec> specs;
  std::vector<Series> base;
  Rng rng(derive_seed(cfg.seed, "sensitivity"));
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    GeneratorSpec s;
    s.kind = GeneratorKind::shape;
    s.shape = std::array{ShapeFn::f1, ShapeFn::f2, ShapeFn::f3}[i % 3];
    s.frequency = uniform(rng, 2.0, 12.0);
    s.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    s.length = S;
    specs.push_back(s);
    base.push_back(generate(s));
  }
  std::vector<SensitivityRow> rows;
  const std::array views = {EmbeddingView::time, EmbeddingView::fft, EmbeddingView::reg};
  auto embedder = [&m](EmbeddingView v) -> Embedder {
    return [&m, v](const std::vector<Series>& xs) { return embed_view(m, xs, v); };
  };
  for (double level : cfg.mask_levels) {
    const auto masked = apply_masks(base, MaskKind::hybrid, level, m.cfg.patch_len, derive_seed(cfg.seed, "mask"));
    for (EmbeddingView v : views)
      rows.push_back({v, "mask", level, distortion_mask(embedder(v), base, masked, cfg.pairs, cfg.seed)});
  }
  for (double level : cfg.noise_levels) {
    std::vector<Series> noisy = base;
    Rng nr(derive_seed(cfg.seed, "noise"));
    for (Series& x : noisy)
      for (double& y : x.values) y += level * normal(nr);
    for (EmbeddingView v : views) rows.push_back({v, "noise", level, distortion_noise(embedder(v), base, noisy)});
  }
  for (double level : cfg.phase_levels) {
    std::vector<Series> shifted;
    for (GeneratorSpec s : specs) {
      s.phase += level;
      shifted.push_back(generate(s));
    }
    for (EmbeddingView v : views) rows.push_back({v, "phase", level, distortion_phase(embedder(v), base, shifted)});
  }
  return rows;
}

}  // namespace tspulse
