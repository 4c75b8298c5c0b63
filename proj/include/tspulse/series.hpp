#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tspulse/tensor.hpp"

namespace tspulse {

/// Multivariate series of `length` steps and `channels` channels stored
/// time-major: values[t * channels + c]. `observed` is either empty (all
/// observed) or parallel to `values` with 0 marking a missing entry.
struct Series {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> observed;

  Series() = default;
  Series(std::size_t length, std::size_t channels, double fill = 0.0)
      : length(length), channels(channels), values(length * channels, fill) {}

  double& at(std::size_t t, std::size_t c) { return values[t * channels + c]; }
  double at(std::size_t t, std::size_t c) const { return values[t * channels + c]; }
  bool is_observed(std::size_t t, std::size_t c) const {
    return observed.empty() || observed[t * channels + c] != 0;
  }
  bool fully_observed() const;

  /// Channel c as a contiguous vector.
  std::vector<double> channel(std::size_t c) const;
  /// Steps [start, start + n).
  Series window(std::size_t start, std::size_t n) const;
};

/// Series -> [1, C, S] tensor and back.
Tensor to_tensor(const Series& s);
Series from_tensor(const Tensor& t, std::size_t batch_index = 0);
/// Stacks equally-shaped series into [B, C, S].
Tensor stack_series(const std::vector<Series>& batch);

}  // namespace tspulse
