#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tspulse/optim.hpp"

namespace tspulse {

struct FdOptions {
  double h = 1e-4;
  double tol = 1e-4;
  /// Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct FdEntry {
  std::string name;
  std::size_t coords = 0;
  /// max |analytic - numeric| / max(max |numeric|, 1e-10) over sampled coords.
  double rel_err = 0.0;
};

struct FdReport {
  std::vector<FdEntry> entries;
  double max_rel_err = 0.0;
  bool passed = true;
};

using LossClosure = std::function<double(const ParamMap&)>;

/// Compares `analytic` against central differences of `loss` around `params`.
/// The closure is evaluated twice at the base point first; differing values
/// raise UsageError.
FdReport finite_difference_check(const LossClosure& loss, const ParamMap& params,
                                 const ParamMap& analytic, const FdOptions& opt = {});

}  // namespace tspulse
