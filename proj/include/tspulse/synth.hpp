#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tspulse/preprocess.hpp"
#include "tspulse/search.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

enum class Pattern { sin, modcos, square_modcos, gaussian_spike, impulse, randwalk, sincos, tanhmix };

inline constexpr std::array<Pattern, 8> kBasePatterns = {
    Pattern::sin,      Pattern::modcos, Pattern::square_modcos, Pattern::gaussian_spike,
    Pattern::impulse,  Pattern::randwalk, Pattern::sincos,     Pattern::tanhmix};

const char* pattern_name(Pattern p);
Pattern parse_pattern(std::string_view name);

enum class Combine { add, mul };
enum class ShapeFn { f1, f2, f3 };
enum class GeneratorKind { base, combo, scaled_sine, trend, shape };

/// One synthetic univariate signal. With b_t = 2*pi*t*f/length + phase:
///   base        the named pattern
///   combo       p1 (+|*) p2
///   scaled_sine sign(sin b_t) * |sin b_t|^exponent
///   trend       (t/length)^trend + sin(pi*f*t/length + phase)
///   shape       F1 = sin, F2 = 2(sin+1)^4 - 1, F3 = 2(sin+1)^(1/4) - 1
/// The result is multiplied by `scale` and gets noise * N(0,1) added.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::base;
  Pattern p1 = Pattern::sin;
  Pattern p2 = Pattern::sin;
  Combine op = Combine::add;
  ShapeFn shape = ShapeFn::f1;
  double frequency = 1.0;
  double phase = 0.0;
  double noise = 0.0;
  double scale = 1.0;
  double exponent = 1.0;
  double trend = 0.0;
  std::size_t length = 512;
  std::uint64_t seed = 0;

  void validate() const;
  /// "sin+modcos", "impulse*randwalk", "sin".
  std::string family() const;
};

/// Deterministic per (spec, seed).
Series generate(const GeneratorSpec& spec);

/// The 56 ordered-pair combinations: every unordered pair of base patterns
/// joined by addition, then by multiplication.
std::vector<GeneratorSpec> combo_specs();

/// 56 combos x f = 1..10 x 3 lightly augmented variants (1% noise, 1%
/// scaling). Family label: the combo; fine label: combo and frequency.
std::vector<BenchmarkItem> build_search_corpus(std::size_t length, std::uint64_t seed);

enum class CorpusSplit { train, eval };

/// Pre-training windows cycling through the search recipe with random phase
/// and noise. The two splits draw from disjoint seed streams.
std::vector<Series> build_pretrain_corpus(std::size_t n_windows, std::size_t length, std::uint64_t seed,
                                          CorpusSplit split = CorpusSplit::train);

struct DistortionResult {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
};

inline constexpr std::size_t kDistortionPairs = 2000;

/// Mean of |1 - |E(x;M) - E(y;M)| / |E(x) - E(y)|| over up to `pairs` random
/// distinct pairs. Pairs with coincident clean embeddings are skipped.
DistortionResult distortion_mask(const Embedder& embed, const std::vector<Series>& clean,
                                 const std::vector<Series>& masked, std::size_t pairs = kDistortionPairs,
                                 std::uint64_t seed = 0);
/// Mean of ||E(noisy_i)|| / ||E(clean_i)|| - 1| over aligned samples.
DistortionResult distortion_noise(const Embedder& embed, const std::vector<Series>& clean,
                                  const std::vector<Series>& noisy);
/// Mean of |E(a_i) - E(b_i)| / min(|E(a_i)|, |E(b_i)|) over aligned pairs whose
/// phases differ by the level under study.
DistortionResult distortion_phase(const Embedder& embed, const std::vector<Series>& a,
                                  const std::vector<Series>& b);

/// Copies of `xs` with an independent mask of the given kind per sample.
std::vector<Series> apply_masks(const std::vector<Series>& xs, MaskKind kind, double ratio, std::size_t patch_len,
                                std::uint64_t seed);

struct SensitivityConfig {
  std::size_t samples = 64;
  std::vector<double> mask_levels = {0.1, 0.3, 0.5};
  std::vector<double> noise_levels = {0.1, 0.5, 1.0};
  std::vector<double> phase_levels = {0.5, 1.0, 2.0};
  std::size_t pairs = kDistortionPairs;
  std::uint64_t seed = 0;
};

struct SensitivityRow {
  EmbeddingView view = EmbeddingView::reg;
  std::string perturbation;  // mask, noise or phase
  double level = 0.0;
  DistortionResult delta;
};

/// Periodic signals (sine and the F2/F3 shape family over random frequency
/// and phase) run through all three perturbations for every view.
std::vector<SensitivityRow> run_sensitivity(const Model& m, const SensitivityConfig& cfg);

}  // namespace tspulse
