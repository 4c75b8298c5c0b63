#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/optim.hpp"

namespace tspulse {

namespace {

// Every key of `sub` must name a parameter of the same shape.
void check_subset(const ParamMap& params, const ParamMap& sub, const char* what) {
  for (const auto& [name, t] : sub) {
    auto it = params.find(name);
    if (it == params.end()) throw ConsistencyError(std::string(what) + " has unknown key '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ConsistencyError(std::string(what) + " '" + name + "' has shape " + shape_str(t.shape()) +
                             ", parameter has " + shape_str(it->second.shape()));
    }
  }
}

}  // namespace

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state) {
  check_subset(params, grads, "gradients");
  if (state.m.empty() && state.v.empty()) {
    for (const auto& [name, g] : grads) {
      state.m.emplace(name, Tensor(g.shape(), 0.0));
      state.v.emplace(name, Tensor(g.shape(), 0.0));
    }
  }
  if (state.m.size() != grads.size() || state.v.size() != grads.size()) {
    throw ConsistencyError("gradients have " + std::to_string(grads.size()) + " entries, moments have " +
                           std::to_string(state.m.size()));
  }
  check_subset(state.m, grads, "gradients");
  check_subset(state.v, grads, "gradients");

  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      p[i] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
  }
}

}  // namespace tspulse
