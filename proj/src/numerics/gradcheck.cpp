#include "tspulse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tspulse/error.hpp"

namespace tspulse {

FdReport finite_difference_check(const LossClosure& loss, const ParamMap& params,
                                 const ParamMap& analytic, const FdOptions& opt) {
  const double base1 = loss(params);
  const double base2 = loss(params);
  if (base1 != base2) {
    throw UsageError("finite_difference_check: closure is not deterministic (" +
                     std::to_string(base1) + " vs " + std::to_string(base2) + ")");
  }
  FdReport report;
  ParamMap work = params;
  std::mt19937_64 rng(opt.seed);
  for (const auto& [name, p] : params) {
    auto git = analytic.find(name);
    if (git == analytic.end()) throw ConsistencyError("no analytic gradient for '" + name + "'");
    const Tensor& g = git->second;
    if (g.shape() != p.shape()) {
      throw ConsistencyError("gradient '" + name + "' shape " + shape_str(g.shape()) +
                             " differs from parameter " + shape_str(p.shape()));
    }
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_coords > 0 && coords.size() > opt.max_coords) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.max_coords);
      std::sort(coords.begin(), coords.end());
    }
    Tensor& w = work.at(name);
    double max_diff = 0.0, max_num = 0.0;
    for (std::size_t i : coords) {
      const double orig = w[i];
      w[i] = orig + opt.h;
      const double fp = loss(work);
      w[i] = orig - opt.h;
      const double fm = loss(work);
      w[i] = orig;
      const double num = (fp - fm) / (2.0 * opt.h);
      max_diff = std::max(max_diff, std::abs(num - g[i]));
      max_num = std::max(max_num, std::abs(num));
    }
    FdEntry e{name, coords.size(), max_diff / std::max(max_num, 1e-10)};
    report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
    report.entries.push_back(std::move(e));
  }
  report.passed = report.max_rel_err < opt.tol;
  return report;
}

}  // namespace tspulse
