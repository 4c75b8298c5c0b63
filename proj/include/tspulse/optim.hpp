#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tspulse/tensor.hpp"

namespace tspulse {

/// Named parameter tensors. Ordered so iteration is deterministic.
using ParamMap = std::map<std::string, Tensor>;

struct AdamState {
  ParamMap m;
  ParamMap v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of the parameters named in `grads`; the
/// rest stay untouched. Moments are created on the first call and must keep
/// the same keys afterwards. Unknown keys or shape mismatches raise
/// ConsistencyError.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state);

}  // namespace tspulse
