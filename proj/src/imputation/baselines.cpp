#include <algorithm>
#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/imputation.hpp"

namespace tspulse {

namespace {

using Index = std::vector<std::size_t>;

void fill_naive(std::vector<double>& v, const Index& obs) {
  std::size_t k = 0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    while (k + 1 < obs.size() && obs[k + 1] <= t) ++k;
    v[t] = v[obs[k]];
  }
}

void fill_linear(std::vector<double>& v, const Index& obs) {
  std::size_t k = 0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    if (t <= obs.front()) {
      v[t] = v[obs.front()];
      continue;
    }
    if (t >= obs.back()) {
      v[t] = v[obs.back()];
      continue;
    }
    while (obs[k + 1] < t) ++k;
    const std::size_t a = obs[k], b = obs[k + 1];
    if (t == a || t == b) continue;
    const double f = double(t - a) / double(b - a);
    v[t] = (1.0 - f) * v[a] + f * v[b];
  }
}

void fill_nearest(std::vector<double>& v, const Index& obs) {
  std::size_t k = 0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    while (k + 1 < obs.size() && obs[k + 1] <= t) ++k;
    if (obs[k] == t) continue;
    if (t < obs[k]) {
      v[t] = v[obs[k]];
    } else if (k + 1 == obs.size()) {
      v[t] = v[obs[k]];
    } else {
      const std::size_t a = obs[k], b = obs[k + 1];
      v[t] = (t - a <= b - t) ? v[a] : v[b];
    }
  }
}

// Natural cubic spline through (obs[i], v[obs[i]]); outside the observed
// range the end pieces are extended.
void fill_cubic(std::vector<double>& v, const Index& obs) {
  const std::size_t n = obs.size();
  std::vector<double> h(n - 1), m(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = double(obs[i + 1] - obs[i]);
  if (n > 2) {
    // Tridiagonal system for the interior second derivatives (Thomas).
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      diag[i] = 2.0 * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = 6.0 * ((v[obs[i + 2]] - v[obs[i + 1]]) / h[i + 1] - (v[obs[i + 1]] - v[obs[i]]) / h[i]);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
  }
  std::size_t seg = 0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    while (seg + 2 < n && obs[seg + 1] <= t) ++seg;
    if (std::binary_search(obs.begin(), obs.end(), t)) continue;
    const std::size_t a = obs[seg], b = obs[seg + 1];
    const double hi = h[seg], ya = v[a], yb = v[b];
    const double A = (double(b) - double(t)) / hi, B = (double(t) - double(a)) / hi;
    v[t] = A * ya + B * yb + ((A * A * A - A) * m[seg] + (B * B * B - B) * m[seg + 1]) * hi * hi / 6.0;
  }
}

}  // namespace

BaselineMethod parse_baseline(std::string_view name) {
  for (BaselineMethod m : {BaselineMethod::naive, BaselineMethod::linear, BaselineMethod::nearest, BaselineMethod::cubic})
    if (name == baseline_name(m)) return m;
  throw ArgumentError("unknown interpolation method '" + std::string(name) + "'");
}

const char* baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::naive: return "naive";
    case BaselineMethod::linear: return "linear";
    case BaselineMethod::nearest: return "nearest";
    case BaselineMethod::cubic: return "cubic";
  }
  return "unknown";
}

Series baseline_interpolate(const Series& x, BaselineMethod method, std::vector<std::string>* warnings) {
  Series out = x;
  out.observed.clear();
  if (x.fully_observed()) return out;
  for (std::size_t c = 0; c < x.channels; ++c) {
    std::vector<double> v = x.channel(c);
    Index obs;
    for (std::size_t t = 0; t < x.length; ++t)
      if (x.is_observed(t, c)) obs.push_back(t);
    if (obs.size() == x.length) continue;
    if (obs.empty()) {
      std::fill(v.begin(), v.end(), 0.0);
      if (warnings) warnings->push_back("channel " + std::to_string(c) + " has no observed value; filled with 0");
    } else {
      BaselineMethod m = method;
      if ((m == BaselineMethod::linear || m == BaselineMethod::cubic) && obs.size() < 2) {
        if (warnings) {
          warnings->push_back(std::string(baseline_name(m)) + " needs two observed points in channel " +
                              std::to_string(c) + "; using naive");
        }
        m = BaselineMethod::naive;
      }
      switch (m) {
        case BaselineMethod::naive: fill_naive(v, obs); break;
        case BaselineMethod::linear: fill_linear(v, obs); break;
        case BaselineMethod::nearest: fill_nearest(v, obs); break;
        case BaselineMethod::cubic: fill_cubic(v, obs); break;
      }
    }
    for (std::size_t t = 0; t < x.length; ++t) out.at(t, c) = v[t];
  }
  return out;
}

}  // namespace tspulse
