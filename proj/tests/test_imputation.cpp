#include <gtest/gtest.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <cmath>

#include "model_fixtures.hpp"
#include "tspulse/error.hpp"
#include "tspulse/imputation.hpp"
#include "tspulse/rng.hpp"

using namespace tspulse;

namespace {

Series noisy_sine(std::size_t L, std::size_t C, std::uint64_t seed) {
  Series s(L, C);
  Rng rng(seed);
  for (std::size_t t = 0; t < L; ++t)
    for (std::size_t c = 0; c < C; ++c) s.at(t, c) = std::sin(0.1 * double(t) + double(c)) + 0.1 * normal(rng);
  return s;
}

Series with_missing(const Series& x, const std::vector<std::size_t>& steps, std::size_t c = 0) {
  Series out = x;
  out.observed.assign(x.values.size(), 1);
  for (std::size_t t : steps) {
    out.observed[t * x.channels + c] = 0;
    out.at(t, c) = std::nan("");
  }
  return out;
}

}  // namespace

TEST(Baselines, CubicMatchesGslNaturalSpline) {
  const std::size_t L = 200;
  Series x = noisy_sine(L, 1, 3);
  Rng rng(11);
  std::vector<std::size_t> missing;
  for (std::size_t t = 1; t + 1 < L; ++t)
    if (uniform(rng, 0.0, 1.0) < 0.4) missing.push_back(t);
  Series h = with_missing(x, missing);
  std::vector<double> xs, ys;
  for (std::size_t t = 0; t < L; ++t)
    if (h.is_observed(t, 0)) {
      xs.push_back(double(t));
      ys.push_back(x.at(t, 0));
    }
  gsl_interp_accel* acc = gsl_interp_accel_alloc();
  gsl_spline* sp = gsl_spline_alloc(gsl_interp_cspline, xs.size());
  gsl_spline_init(sp, xs.data(), ys.data(), xs.size());
  const Series out = baseline_interpolate(h, BaselineMethod::cubic);
  for (std::size_t t = 0; t < L; ++t) EXPECT_NEAR(out.at(t, 0), gsl_spline_eval(sp, double(t), acc), 1e-8) << t;
  gsl_spline_free(sp);
  gsl_interp_accel_free(acc);
}

TEST(Baselines, LinearIsExactOnARamp) {
  Series x(50, 2);
  for (std::size_t t = 0; t < 50; ++t) {
    x.at(t, 0) = 2.0 * double(t) - 7.0;
    x.at(t, 1) = -0.5 * double(t);
  }
  Series h = with_missing(x, {3, 4, 5, 20, 21, 33});
  const Series out = baseline_interpolate(h, BaselineMethod::linear);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(out.at(t, 0), x.at(t, 0), 1e-12);
  EXPECT_TRUE(out.observed.empty());
}

TEST(Baselines, LinearAndCubicClampBeyondObservedRange) {
  Series x(10, 1);
  for (std::size_t t = 0; t < 10; ++t) x.at(t, 0) = double(t * t);
  Series h = with_missing(x, {0, 1, 8, 9});
  for (BaselineMethod m : {BaselineMethod::linear, BaselineMethod::naive, BaselineMethod::nearest}) {
    const Series out = baseline_interpolate(h, m);
    EXPECT_EQ(out.at(0, 0), 4.0) << baseline_name(m);
    EXPECT_EQ(out.at(9, 0), 49.0) << baseline_name(m);
  }
}

TEST(Baselines, NearestTiesGoLeft) {
  Series x(7, 1);
  for (std::size_t t = 0; t < 7; ++t) x.at(t, 0) = double(t);
  // Observed 0, 4, 6: step 2 is equidistant from 0 and 4.
  Series h = with_missing(x, {1, 2, 3, 5});
  const Series out = baseline_interpolate(h, BaselineMethod::nearest);
  EXPECT_EQ(out.at(1, 0), 0.0);
  EXPECT_EQ(out.at(2, 0), 0.0);
  EXPECT_EQ(out.at(3, 0), 4.0);
  EXPECT_EQ(out.at(5, 0), 4.0);
}

TEST(Baselines, NaiveForwardFillsThenBackfills) {
  Series x(6, 1);
  for (std::size_t t = 0; t < 6; ++t) x.at(t, 0) = double(t) + 1.0;
  const Series out = baseline_interpolate(with_missing(x, {0, 1, 3, 4}), BaselineMethod::naive);
  const std::vector<double> want = {3, 3, 3, 3, 3, 6};
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(out.at(t, 0), want[t]);
}

TEST(Baselines, DegenerateChannelsWarn) {
  Series x(5, 2, 4.0);
  Series h = with_missing(x, {0, 1, 2, 3, 4}, 0);
  for (std::size_t t : {0, 1, 3, 4}) {
    h.observed[t * 2 + 1] = 0;
    h.at(t, 1) = std::nan("");
  }
  std::vector<std::string> warn;
  const Series out = baseline_interpolate(h, BaselineMethod::cubic, &warn);
  EXPECT_EQ(warn.size(), 2u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(out.at(t, 0), 0.0);
    EXPECT_EQ(out.at(t, 1), 4.0);
  }
}

TEST(Baselines, ParseNames) {
  EXPECT_EQ(parse_baseline("cubic"), BaselineMethod::cubic);
  EXPECT_EQ(parse_baseline("nearest"), BaselineMethod::nearest);
  EXPECT_THROW(parse_baseline("spline"), ArgumentError);
}

TEST(EvalMask, BlockRatioGivesWholePatches) {
  EvalMaskSpec spec{MaskKind::block, 0.125, 5};
  const MaskPlan p = generate_eval_mask(spec, 512, 3, 8);
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t full = 0, points = 0;
    for (std::size_t k = 0; k < 64; ++k) full += p.patch_full[k * 3 + c];
    for (std::size_t t = 0; t < 512; ++t) points += p.masked(t, c);
    EXPECT_EQ(full, 8u);
    EXPECT_EQ(points, 64u);
  }
}

TEST(EvalMask, HybridBudgetAndSeedReuse) {
  for (double r : kEvalRatios) {
    EvalMaskSpec spec{MaskKind::hybrid, r, 9};
    const MaskPlan a = generate_eval_mask(spec, 512, 2, 8);
    const MaskPlan b = generate_eval_mask(spec, 512, 2, 8);
    EXPECT_EQ(a.point_mask, b.point_mask);
    for (std::size_t c = 0; c < 2; ++c) {
      std::size_t points = 0;
      for (std::size_t t = 0; t < 512; ++t) points += a.masked(t, c);
      EXPECT_EQ(points, std::size_t(std::llround(r * 512))) << r;
    }
  }
  EvalMaskSpec other{MaskKind::hybrid, 0.25, 10};
  EXPECT_NE(generate_eval_mask(other, 512, 2, 8).point_mask,
            generate_eval_mask(EvalMaskSpec{MaskKind::hybrid, 0.25, 9}, 512, 2, 8).point_mask);
  EXPECT_THROW(generate_eval_mask(EvalMaskSpec{MaskKind::block, 1.0, 0}, 64, 1, 8), ArgumentError);
}

TEST(EvalMask, HideMarksPlannedPoints) {
  const Series x = noisy_sine(64, 2, 1);
  const MaskPlan p = generate_eval_mask(EvalMaskSpec{MaskKind::hybrid, 0.25, 2}, 64, 2, 8);
  const Series h = hide(x, p);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    EXPECT_EQ(h.observed[i] == 0, p.point_mask[i] != 0);
    if (p.point_mask[i]) EXPECT_TRUE(std::isnan(h.values[i]));
    else EXPECT_EQ(h.values[i], x.values[i]);
  }
  EXPECT_THROW(hide(noisy_sine(32, 2, 1), p), DimensionError);
}

TEST(EvalMask, MseMatchesLoop) {
  const Series a = noisy_sine(64, 2, 1), b = noisy_sine(64, 2, 2);
  const MaskPlan p = generate_eval_mask(EvalMaskSpec{MaskKind::block, 0.25, 2}, 64, 2, 8);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < 64; ++t)
    for (std::size_t c = 0; c < 2; ++c)
      if (p.masked(t, c)) {
        acc += (a.at(t, c) - b.at(t, c)) * (a.at(t, c) - b.at(t, c));
        ++n;
      }
  EXPECT_NEAR(eval_mse_masked(a, b, p), acc / double(n), 1e-14);
  EXPECT_THROW(eval_mse_masked(a, b, MaskPlan::none(64, 2, 8)), ArgumentError);
}

TEST(Impute, ObservedValuesAreKeptAndMissingFilled) {
  const Model m = init_model(tsptest::toy_config(), 4);
  const Series x = noisy_sine(152, 2, 6);
  const MaskPlan p = generate_eval_mask(EvalMaskSpec{MaskKind::hybrid, 0.375, 3}, 152, 2, 8);
  const Series out = impute(hide(x, p), m);
  EXPECT_TRUE(out.observed.empty());
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    EXPECT_TRUE(std::isfinite(out.values[i]));
    if (!p.point_mask[i]) EXPECT_EQ(out.values[i], x.values[i]);
  }
}

TEST(Impute, HiddenValuesDoNotLeak) {
  const Model m = init_model(tsptest::toy_config(), 4);
  const Series x = noisy_sine(64, 2, 6);
  const MaskPlan p = generate_eval_mask(EvalMaskSpec{MaskKind::block, 0.25, 3}, 64, 2, 8);
  Series y = x;
  for (std::size_t i = 0; i < y.values.size(); ++i)
    if (p.point_mask[i]) y.values[i] += 100.0;
  const Series a = impute(hide(x, p), m), b = impute(hide(y, p), m);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (p.point_mask[i]) EXPECT_EQ(a.values[i], b.values[i]);
}

TEST(Impute, FullyObservedIsIdentity) {
  const Model m = init_model(tsptest::toy_config(), 4);
  const Series x = noisy_sine(70, 1, 6);
  const Series out = impute(x, m);
  EXPECT_EQ(out.values, x.values);
  EXPECT_THROW(impute(noisy_sine(63, 1, 6), m), ArgumentError);
}

TEST(Impute, EmptyChannelWarns) {
  const Model m = init_model(tsptest::toy_config(), 4);
  Series x = noisy_sine(64, 2, 6);
  x.observed.assign(x.values.size(), 1);
  for (std::size_t t = 0; t < 64; ++t) {
    x.observed[t * 2 + 1] = 0;
    x.at(t, 1) = std::nan("");
  }
  std::vector<std::string> warn;
  const Series out = impute(x, m, &warn);
  ASSERT_EQ(warn.size(), 1u);
  for (std::size_t t = 1; t < 64; ++t) EXPECT_EQ(out.at(t, 1), out.at(0, 1));
}
