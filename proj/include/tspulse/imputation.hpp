#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tspulse/model.hpp"
#include "tspulse/preprocess.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

inline constexpr std::array<double, 4> kEvalRatios = {0.125, 0.25, 0.375, 0.5};

struct EvalMaskSpec {
  MaskKind kind = MaskKind::hybrid;
  double ratio = 0.25;
  std::uint64_t seed = 0;

  /// ArgumentError unless ratio lies in (0, 1).
  void validate() const;
};

/// Deterministic evaluation mask: whole patches (block) or half patches,
/// half scattered points (hybrid).
MaskPlan generate_eval_mask(const EvalMaskSpec& spec, std::size_t length, std::size_t channels,
                            std::size_t patch_len);

/// Copy of `x` with the planned points marked missing and set to NaN.
Series hide(const Series& x, const MaskPlan& plan);

/// Zero-shot imputation of the missing entries of `x` (length >= S). Series
/// longer than the context are processed in consecutive windows, the last
/// one aligned to the end. Observed entries are returned unchanged. A channel
/// with no observed entry in a window is filled with the RevIN mean of the
/// masked input and reported in `warnings`.
Series impute(const Series& x, const Model& model, std::vector<std::string>* warnings = nullptr);

enum class BaselineMethod { naive, linear, nearest, cubic };

BaselineMethod parse_baseline(std::string_view name);
const char* baseline_name(BaselineMethod m);

/// Classical gap filling of the missing entries, channel by channel.
/// naive: last observed value, leading gap back-filled.
/// linear: straight lines between observed neighbours, constant beyond.
/// nearest: closest observed step, ties to the lower index.
/// cubic: natural cubic spline through the observed steps.
/// linear and cubic fall back to naive (with a warning) below two observed
/// points; a channel with none is filled with 0.
Series baseline_interpolate(const Series& x, BaselineMethod method,
                            std::vector<std::string>* warnings = nullptr);

/// Mean squared error over the planned points. ArgumentError if the plan is
/// empty or shapes differ.
double eval_mse_masked(const Series& truth, const Series& completed, const MaskPlan& plan);

}  // namespace tspulse
