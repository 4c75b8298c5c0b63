#include <cmath>
#include <limits>

#include "tspulse/error.hpp"
#include "tspulse/imputation.hpp"
#include "tspulse/rng.hpp"

namespace tspulse {

void EvalMaskSpec::validate() const {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("evaluation mask ratio must lie in (0, 1)");
}

MaskPlan generate_eval_mask(const EvalMaskSpec& spec, std::size_t length, std::size_t channels,
                            std::size_t patch_len) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "eval-mask"));
  return make_mask_plan(spec.kind, length, channels, patch_len, spec.ratio, rng);
}

Series hide(const Series& x, const MaskPlan& plan) {
  if (plan.length != x.length || plan.channels != x.channels) {
    throw DimensionError("mask plan does not match the series shape");
  }
  Series out = x;
  if (out.observed.empty()) out.observed.assign(x.values.size(), 1);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    if (plan.point_mask[i]) {
      out.observed[i] = 0;
      out.values[i] = std::numeric_limits<double>::quiet_NaN();
    }
  return out;
}

namespace {

// Imputes the window [start, start + S) and writes missing entries that are
// not yet filled.
void impute_window(const Series& x, const Model& model, std::size_t start, Series& out,
                   std::vector<std::uint8_t>& done, std::vector<std::string>* warnings) {
  const std::size_t S = model.cfg.context, C = x.channels, pl = model.cfg.patch_len;
  Batch b;
  b.x = Tensor(Shape{1, C, S}, 0.0);
  b.mask = Tensor(Shape{1, C, S}, 0.0);
  bool any_missing = false;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < S; ++t) {
      if (x.is_observed(start + t, c)) {
        b.x[c * S + t] = x.at(start + t, c);
      } else {
        b.mask[c * S + t] = 1.0;
        any_missing = true;
      }
    }
  if (!any_missing) return;
  const Inference inf = infer(model, b);
  const Tensor& token = model.params.at("mask_token");
  for (std::size_t c = 0; c < C; ++c) {
    bool observed_any = false;
    for (std::size_t t = 0; t < S; ++t) observed_any = observed_any || b.mask[c * S + t] == 0.0;
    double fill = 0.0;
    if (!observed_any) {
      // Every step holds the mask token, so the RevIN mean is its tile mean.
      for (std::size_t t = 0; t < S; ++t) fill += token[t % pl];
      fill /= double(S);
      if (warnings) {
        warnings->push_back("channel " + std::to_string(c) + " has no observed value in steps [" +
                            std::to_string(start) + ", " + std::to_string(start + S) + "); filled with the RevIN mean");
      }
    }
    for (std::size_t t = 0; t < S; ++t) {
      const std::size_t i = (start + t) * C + c;
      if (b.mask[c * S + t] == 0.0 || done[i]) continue;
      out.values[i] = observed_any ? inf.y[c * S + t] : fill;
      done[i] = 1;
    }
  }
}

}  // namespace

Series impute(const Series& x, const Model& model, std::vector<std::string>* warnings) {
  const std::size_t S = model.cfg.context;
  if (x.length < S) {
    throw ArgumentError("imputation needs at least " + std::to_string(S) + " steps, got " + std::to_string(x.length));
  }
  Series out = x;
  if (x.fully_observed()) return out;
  std::vector<std::uint8_t> done(x.values.size(), 0);
  for (std::size_t start = 0;; start += S) {
    const std::size_t s = std::min(start, x.length - S);
    impute_window(x, model, s, out, done, warnings);
    if (s + S >= x.length) break;
  }
  out.observed.clear();
  return out;
}

double eval_mse_masked(const Series& truth, const Series& completed, const MaskPlan& plan) {
  if (truth.length != completed.length || truth.channels != completed.channels || plan.length != truth.length ||
      plan.channels != truth.channels) {
    throw DimensionError("eval_mse_masked: series and plan shapes differ");
  }
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < truth.values.size(); ++i)
    if (plan.point_mask[i]) {
      const double d = truth.values[i] - completed.values[i];
      acc += d * d;
      ++n;
    }
  if (n == 0) throw ArgumentError("eval_mse_masked: the mask hides no point");
  return acc / double(n);
}

}  // namespace tspulse
