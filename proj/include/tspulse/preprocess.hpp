#pragma once

#include <cstdint>
#include <vector>

#include "tspulse/autodiff.hpp"
#include "tspulse/rng.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

/// Point-level missingness (true = hidden) and its patch decomposition.
struct MaskPlan {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t patch_len = 0;
  std::vector<std::uint8_t> point_mask;  // [t * channels + c]
  std::vector<std::uint8_t> patch_full;  // [patch * channels + c]
  double realized_ratio = 0.0;

  bool masked(std::size_t t, std::size_t c) const { return point_mask[t * channels + c] != 0; }
  std::size_t masked_count() const;

  /// Builds the plan (patch_full, realized_ratio) from a point mask.
  static MaskPlan from_points(std::vector<std::uint8_t> points, std::size_t length,
                              std::size_t channels, std::size_t patch_len);
  static MaskPlan none(std::size_t length, std::size_t channels, std::size_t patch_len);
};

enum class MaskKind { block, hybrid };

/// round(ratio * N) whole patches per channel.
MaskPlan block_mask_plan(std::size_t length, std::size_t channels, std::size_t patch_len,
                         double ratio, Rng& rng);
/// round(ratio * S) points per channel: half as whole patches, the rest
/// scattered over the remaining points.
MaskPlan hybrid_mask_plan(std::size_t length, std::size_t channels, std::size_t patch_len,
                          double ratio, Rng& rng);
MaskPlan make_mask_plan(MaskKind kind, std::size_t length, std::size_t channels,
                        std::size_t patch_len, double ratio, Rng& rng);

/// Replaces every masked point at in-patch offset j with token[j].
Series apply_mask(const Series& x, const MaskPlan& plan, const std::vector<double>& token);

struct MaskedSeries {
  Series x_hat;
  MaskPlan plan;
};
MaskedSeries apply_block_mask(const Series& x, double ratio, const std::vector<double>& token, Rng& rng);
MaskedSeries apply_hybrid_mask(const Series& x, double ratio, const std::vector<double>& token, Rng& rng);

/// Plans for a batch stacked as a [B, C, S] 0/1 tensor.
Tensor mask_tensor(const std::vector<MaskPlan>& plans);

struct RevInState {
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<double> gamma;  // empty means 1
  std::vector<double> beta;   // empty means 0
  double eps = 1e-5;
};

/// Fills state.mean/stdev from `x_hat` and returns the normalized series.
Series revin_forward(const Series& x_hat, RevInState& state);
/// Normalizes `x` with statistics already held in `state`.
Series revin_normalize(const Series& x, const RevInState& state);
/// Throws SingularityError when a gamma entry is zero.
Series revin_inverse(const Series& y, const RevInState& state);

struct FftFeatures {
  Series packed;  // S x C: [re_0..re_{S/2-1}, im_0..im_{S/2-1}] per channel
  std::vector<double> scale_re;
  std::vector<double> scale_im;
};

struct FftTargets {
  Series packed;     // S x C, packaged like FftFeatures
  Series signature;  // (S/2) x C, columns sum to 1
};

FftFeatures extract_fft_features(const Series& x_m);
FftTargets compute_fft_targets(const Series& x_scaled);

inline constexpr double kFftNormFloor = 1e-8;
inline constexpr double kLogMagEps = 1e-8;
inline constexpr double kRevinEps = 1e-5;

/// Differentiable building blocks shared with the model. Series tensors are
/// [B, C, S].
namespace pre {

struct RevinStats {
  Var mean;   // [B, C, 1]
  Var stdev;  // [B, C, 1]
  Var gamma;
  Var beta;
};

/// x * (1 - mask) + tile(token) * mask.
Var fill_mask(Var x, const Tensor& mask, Var token);
RevinStats revin_stats(Var x_hat, Var gamma, Var beta, double eps = kRevinEps);
Var revin_apply(Var x, const RevinStats& st);
Var revin_invert(Var y, const RevinStats& st);

struct PackedSpectrum {
  Var packed;    // [B, C, S]
  Var scale_re;  // [B, C, 1]
  Var scale_im;  // [B, C, 1]
};
PackedSpectrum pack_spectrum(Var x);
/// Inverse of pack_spectrum using the given scales; the Nyquist bin is zero.
Var unpack_spectrum(Var packed, Var scale_re, Var scale_im);
/// Softmax of the log-magnitude over bins 1..S/2: [B, C, S/2].
Var signature(Var x);

}  // namespace pre

}  // namespace tspulse
