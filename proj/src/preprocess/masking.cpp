#include <algorithm>
#include <cmath>
#include <numeric>

#include "tspulse/error.hpp"
#include "tspulse/preprocess.hpp"

namespace tspulse {

namespace {

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ArgumentError("mask ratio must be in [0, 1], got " + std::to_string(ratio));
  }
}

std::size_t patch_count(std::size_t length, std::size_t patch_len) {
  if (patch_len == 0 || length % patch_len != 0) {
    throw ConfigError("series length " + std::to_string(length) +
                      " is not a multiple of patch length " + std::to_string(patch_len));
  }
  return length / patch_len;
}

// k distinct indices from [0, n), in increasing order.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, n - 1);
    std::swap(idx[i], idx[d(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::size_t MaskPlan::masked_count() const {
  return static_cast<std::size_t>(std::count(point_mask.begin(), point_mask.end(), 1));
}

MaskPlan MaskPlan::from_points(std::vector<std::uint8_t> points, std::size_t length,
                               std::size_t channels, std::size_t patch_len) {
  if (points.size() != length * channels) {
    throw DimensionError("mask has " + std::to_string(points.size()) + " entries, expected " +
                         std::to_string(length * channels));
  }
  const std::size_t n = patch_count(length, patch_len);
  MaskPlan p;
  p.length = length;
  p.channels = channels;
  p.patch_len = patch_len;
  p.point_mask = std::move(points);
  p.patch_full.assign(n * channels, 0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      bool full = true;
      for (std::size_t j = 0; j < patch_len && full; ++j)
        full = p.point_mask[(i * patch_len + j) * channels + c] != 0;
      p.patch_full[i * channels + c] = full;
    }
  const std::size_t total = length * channels;
  p.realized_ratio = total ? double(p.masked_count()) / double(total) : 0.0;
  return p;
}

MaskPlan MaskPlan::none(std::size_t length, std::size_t channels, std::size_t patch_len) {
  return from_points(std::vector<std::uint8_t>(length * channels, 0), length, channels, patch_len);
}

MaskPlan block_mask_plan(std::size_t length, std::size_t channels, std::size_t patch_len,
                         double ratio, Rng& rng) {
  check_ratio(ratio);
  const std::size_t n = patch_count(length, patch_len);
  const auto k = static_cast<std::size_t>(std::llround(ratio * double(n)));
  std::vector<std::uint8_t> pts(length * channels, 0);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i : choose(n, k, rng))
      for (std::size_t j = 0; j < patch_len; ++j) pts[(i * patch_len + j) * channels + c] = 1;
  return MaskPlan::from_points(std::move(pts), length, channels, patch_len);
}

MaskPlan hybrid_mask_plan(std::size_t length, std::size_t channels, std::size_t patch_len,
                          double ratio, Rng& rng) {
  check_ratio(ratio);
  const std::size_t n = patch_count(length, patch_len);
  const auto budget = static_cast<std::size_t>(std::llround(ratio * double(length)));
  const std::size_t n_full = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(double(budget) / 2.0 / double(patch_len))));
  const std::size_t scattered = budget > n_full * patch_len ? budget - n_full * patch_len : 0;
  std::vector<std::uint8_t> pts(length * channels, 0);
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<std::uint8_t> taken(length, 0);
    for (std::size_t i : choose(n, n_full, rng))
      for (std::size_t j = 0; j < patch_len; ++j) taken[i * patch_len + j] = 1;
    std::vector<std::size_t> free;
    for (std::size_t t = 0; t < length; ++t)
      if (!taken[t]) free.push_back(t);
    for (std::size_t k : choose(free.size(), std::min(scattered, free.size()), rng)) taken[free[k]] = 1;
    for (std::size_t t = 0; t < length; ++t) pts[t * channels + c] = taken[t];
  }
  return MaskPlan::from_points(std::move(pts), length, channels, patch_len);
}

MaskPlan make_mask_plan(MaskKind kind, std::size_t length, std::size_t channels,
                        std::size_t patch_len, double ratio, Rng& rng) {
  return kind == MaskKind::block ? block_mask_plan(length, channels, patch_len, ratio, rng)
                                 : hybrid_mask_plan(length, channels, patch_len, ratio, rng);
}

Series apply_mask(const Series& x, const MaskPlan& plan, const std::vector<double>& token) {
  if (plan.length != x.length || plan.channels != x.channels) {
    throw DimensionError("mask plan " + std::to_string(plan.length) + "x" +
                         std::to_string(plan.channels) + " does not match series " +
                         std::to_string(x.length) + "x" + std::to_string(x.channels));
  }
  if (token.size() != plan.patch_len) {
    throw DimensionError("mask token length " + std::to_string(token.size()) +
                         " differs from patch length " + std::to_string(plan.patch_len));
  }
  Series out = x;
  for (std::size_t t = 0; t < x.length; ++t)
    for (std::size_t c = 0; c < x.channels; ++c)
      if (plan.masked(t, c)) out.at(t, c) = token[t % plan.patch_len];
  return out;
}

MaskedSeries apply_block_mask(const Series& x, double ratio, const std::vector<double>& token, Rng& rng) {
  MaskPlan plan = block_mask_plan(x.length, x.channels, token.size(), ratio, rng);
  return {apply_mask(x, plan, token), std::move(plan)};
}

MaskedSeries apply_hybrid_mask(const Series& x, double ratio, const std::vector<double>& token, Rng& rng) {
  MaskPlan plan = hybrid_mask_plan(x.length, x.channels, token.size(), ratio, rng);
  return {apply_mask(x, plan, token), std::move(plan)};
}

Tensor mask_tensor(const std::vector<MaskPlan>& plans) {
  if (plans.empty()) throw ArgumentError("mask_tensor on an empty batch");
  const std::size_t C = plans[0].channels, S = plans[0].length;
  Tensor out(Shape{plans.size(), C, S});
  for (std::size_t b = 0; b < plans.size(); ++b) {
    if (plans[b].channels != C || plans[b].length != S) throw DimensionError("mask plans differ in shape");
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < S; ++t) out[(b * C + c) * S + t] = plans[b].masked(t, c) ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace tspulse
