#include <cmath>
#include <numbers>

#include "ops_internal.hpp"

namespace tspulse::ad {
namespace detail {

std::vector<std::uint32_t> broadcast_map(const Shape& src, const Shape& dst, const char* op) {
  if (src.size() > dst.size()) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(src) + " to " +
                         shape_str(dst));
  }
  const std::size_t r = dst.size();
  const std::size_t off = r - src.size();
  // Strides of src expressed in dst index space (0 on broadcast axes).
  std::vector<std::size_t> stride(r, 0);
  std::size_t s = 1;
  for (std::size_t i = src.size(); i-- > 0;) {
    const std::size_t d = dst[i + off];
    if (src[i] == d) {
      stride[i + off] = s;
    } else if (src[i] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(src) + " to " +
                           shape_str(dst));
    }
    s *= src[i];
  }
  const std::size_t total = shape_size(dst);
  std::vector<std::uint32_t> map(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t pos = 0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    map[lin] = static_cast<std::uint32_t>(pos);
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      pos += stride[ax];
      if (idx[ax] < dst[ax]) break;
      pos -= stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return map;
}

Broadcast make_broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  if (a == b) {
    bc.out = a;
    bc.same = true;
    return bc;
  }
  const std::size_t r = std::max(a.size(), b.size());
  bc.out.assign(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError(std::string(op) + ": shapes " + shape_str(a) + " and " +
                           shape_str(b) + " do not broadcast");
    }
    bc.out[i] = std::max(da, db);
  }
  bc.ia = broadcast_map(a, bc.out, op);
  bc.ib = broadcast_map(b, bc.out, op);
  return bc;
}

}  // namespace detail

using detail::tape_of;

namespace {

enum class BinOp { add, sub, mul, div };

Var binary(Var a, Var b, BinOp op, const char* name) {
  Tape& t = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  auto bc = std::make_shared<detail::Broadcast>(detail::make_broadcast(av.shape(), bv.shape(), name));
  Tensor out(bc->out);
  const std::size_t n = out.size();
  const double* pa = av.ptr();
  const double* pb = bv.ptr();
  double* po = out.ptr();
  auto ia = [&](std::size_t i) { return bc->same ? i : bc->ia[i]; };
  auto ib = [&](std::size_t i) { return bc->same ? i : bc->ib[i]; };
  switch (op) {
    case BinOp::add:
      if (bc->same) { for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i]; }
      else { for (std::size_t i = 0; i < n; ++i) po[i] = pa[ia(i)] + pb[ib(i)]; }
      break;
    case BinOp::sub:
      if (bc->same) { for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i]; }
      else { for (std::size_t i = 0; i < n; ++i) po[i] = pa[ia(i)] - pb[ib(i)]; }
      break;
    case BinOp::mul:
      if (bc->same) { for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i]; }
      else { for (std::size_t i = 0; i < n; ++i) po[i] = pa[ia(i)] * pb[ib(i)]; }
      break;
    case BinOp::div:
      if (bc->same) { for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i]; }
      else { for (std::size_t i = 0; i < n; ++i) po[i] = pa[ia(i)] / pb[ib(i)]; }
      break;
  }
  const std::uint32_t aid = a.id;
  const std::uint32_t bid = b.id;
  return t.record(std::move(out), {a, b}, [aid, bid, bc, op](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const double* pg = g.ptr();
    const double* pa = tp.value(aid).ptr();
    const double* pb = tp.value(bid).ptr();
    const std::size_t n = g.size();
    auto ia = [&](std::size_t i) { return bc->same ? i : bc->ia[i]; };
    auto ib = [&](std::size_t i) { return bc->same ? i : bc->ib[i]; };
    if (tp.requires_grad(aid)) {
      double* ga = tp.grad_buffer(aid).ptr();
      for (std::size_t i = 0; i < n; ++i) {
        double d = pg[i];
        if (op == BinOp::mul) d *= pb[ib(i)];
        else if (op == BinOp::div) d /= pb[ib(i)];
        ga[ia(i)] += d;
      }
    }
    if (tp.requires_grad(bid)) {
      double* gb = tp.grad_buffer(bid).ptr();
      for (std::size_t i = 0; i < n; ++i) {
        double d = pg[i];
        switch (op) {
          case BinOp::add: break;
          case BinOp::sub: d = -d; break;
          case BinOp::mul: d *= pa[ia(i)]; break;
          case BinOp::div: {
            const double bv = pb[ib(i)];
            d *= -pa[ia(i)] / (bv * bv);
            break;
          }
        }
        gb[ib(i)] += d;
      }
    }
  });
}

// Elementwise unary op; `deriv(x, y)` returns dy/dx.
template <class F, class D>
Var unary(Var a, F f, D deriv) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, deriv](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& x = tp.value(aid);
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, BinOp::add, "add"); }
Var sub(Var a, Var b) { return binary(a, b, BinOp::sub, "sub"); }
Var mul(Var a, Var b) { return binary(a, b, BinOp::mul, "mul"); }
Var div(Var a, Var b) { return binary(a, b, BinOp::div, "div"); }

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(a, [](double x) { return std::sqrt(x); },
               [](double, double y) { return 0.5 / y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
               [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Var a) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x, double) {
        return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
      });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::uint32_t aid = a.id;
  return t.record(Tensor::scalar(s), {a}, [aid](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_buffer(self)[0];
    for (double& v : tp.grad_buffer(aid).data()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ArgumentError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_axis(Var a, int axis, bool keepdim) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const int ax = detail::normalize_axis(axis, s.size(), "sum_axis");
  const auto v = detail::axis_view(s, ax);
  Shape out_shape = s;
  if (keepdim) out_shape[static_cast<std::size_t>(ax)] = 1;
  else out_shape.erase(out_shape.begin() + ax);
  Tensor out(out_shape);
  const double* pa = a.value().ptr();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t i = 0; i < v.n; ++i)
      for (std::size_t j = 0; j < v.inner; ++j) out[o * v.inner + j] += pa[(o * v.n + i) * v.inner + j];
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, v](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t i = 0; i < v.n; ++i)
        for (std::size_t j = 0; j < v.inner; ++j) ga[(o * v.n + i) * v.inner + j] += g[o * v.inner + j];
  });
}

Var mean_axis(Var a, int axis, bool keepdim) {
  const int ax = detail::normalize_axis(axis, a.shape().size(), "mean_axis");
  const std::size_t n = a.shape()[static_cast<std::size_t>(ax)];
  if (n == 0) throw ArgumentError("mean over an empty axis");
  return scale(sum_axis(a, ax, keepdim), 1.0 / static_cast<double>(n));
}

Var max_abs_last(Var a, double floor) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (s.empty() || s.back() == 0) throw ArgumentError("max_abs_last over an empty axis");
  const std::size_t n = s.back();
  const std::size_t rows = a.value().size() / n;
  Shape out_shape = s;
  out_shape.back() = 1;
  Tensor out(out_shape);
  auto arg = std::make_shared<std::vector<std::int64_t>>(rows, -1);
  const double* pa = a.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    double best = -1.0;
    std::size_t bi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::abs(pa[r * n + i]);
      if (v > best) {
        best = v;
        bi = i;
      }
    }
    if (best >= floor) {
      out[r] = best;
      (*arg)[r] = static_cast<std::int64_t>(bi);
    } else {
      out[r] = floor;
    }
  }
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, arg, n](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& x = tp.value(aid);
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t r = 0; r < arg->size(); ++r) {
      const std::int64_t bi = (*arg)[r];
      if (bi < 0) continue;
      const std::size_t idx = r * n + static_cast<std::size_t>(bi);
      ga[idx] += g[r] * (x[idx] >= 0.0 ? 1.0 : -1.0);
    }
  });
}

Var mse(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tape& t = tape_of(a, b);
  const std::size_t n = a.value().size();
  if (n == 0) throw ArgumentError("mse of empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  const std::uint32_t aid = a.id;
  const std::uint32_t bid = b.id;
  return t.record(Tensor::scalar(s / static_cast<double>(n)), {a, b},
                  [aid, bid, n](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_buffer(self)[0] * 2.0 / static_cast<double>(n);
                    const Tensor& av = tp.value(aid);
                    const Tensor& bv = tp.value(bid);
                    if (tp.requires_grad(aid)) {
                      Tensor& ga = tp.grad_buffer(aid);
                      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (av[i] - bv[i]);
                    }
                    if (tp.requires_grad(bid)) {
                      Tensor& gb = tp.grad_buffer(bid);
                      for (std::size_t i = 0; i < n; ++i) gb[i] -= g * (av[i] - bv[i]);
                    }
                  });
}

Var masked_mse(Var a, Var b, const Tensor& mask) {
  if (a.shape() != b.shape() || a.shape() != mask.shape()) {
    throw DimensionError("masked_mse shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()) + " vs mask " + shape_str(mask.shape()));
  }
  Tape& t = tape_of(a, b);
  const std::size_t n = a.value().size();
  double count = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    const double d = a.value()[i] - b.value()[i];
    s += mask[i] * d * d;
    count += mask[i];
  }
  const double denom = count > 0.0 ? count : 1.0;
  auto m = std::make_shared<Tensor>(mask);
  const std::uint32_t aid = a.id;
  const std::uint32_t bid = b.id;
  return t.record(Tensor::scalar(count > 0.0 ? s / denom : 0.0), {a, b},
                  [aid, bid, m, denom](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_buffer(self)[0] * 2.0 / denom;
                    const Tensor& av = tp.value(aid);
                    const Tensor& bv = tp.value(bid);
                    const std::size_t n = av.size();
                    if (tp.requires_grad(aid)) {
                      Tensor& ga = tp.grad_buffer(aid);
                      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (*m)[i] * (av[i] - bv[i]);
                    }
                    if (tp.requires_grad(bid)) {
                      Tensor& gb = tp.grad_buffer(bid);
                      for (std::size_t i = 0; i < n; ++i) gb[i] -= g * (*m)[i] * (av[i] - bv[i]);
                    }
                  });
}

Var cross_entropy(Var target, Var probs) {
  if (target.shape() != probs.shape() || probs.shape().empty()) {
    throw DimensionError("cross_entropy shape mismatch " + shape_str(target.shape()) + " vs " +
                         shape_str(probs.shape()));
  }
  Tape& t = tape_of(target, probs);
  const std::size_t k = probs.shape().back();
  if (k == 0) throw ArgumentError("cross_entropy over an empty axis");
  const std::size_t rows = probs.value().size() / k;
  double s = 0.0;
  for (std::size_t i = 0; i < probs.value().size(); ++i) {
    const double tv = target.value()[i];
    if (tv != 0.0) s -= tv * std::log(probs.value()[i]);
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const std::uint32_t tid = target.id;
  const std::uint32_t pid = probs.id;
  return t.record(Tensor::scalar(s * inv_rows), {target, probs},
                  [tid, pid, inv_rows](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_buffer(self)[0] * inv_rows;
                    const Tensor& tv = tp.value(tid);
                    const Tensor& pv = tp.value(pid);
                    if (tp.requires_grad(pid)) {
                      Tensor& gp = tp.grad_buffer(pid);
                      for (std::size_t i = 0; i < pv.size(); ++i) gp[i] -= g * tv[i] / pv[i];
                    }
                    if (tp.requires_grad(tid)) {
                      Tensor& gt = tp.grad_buffer(tid);
                      for (std::size_t i = 0; i < pv.size(); ++i) gt[i] -= g * std::log(pv[i]);
                    }
                  });
}

Var cross_entropy_logits(Var target, Var logits) {
  if (target.shape() != logits.shape() || logits.shape().empty()) {
    throw DimensionError("cross_entropy_logits shape mismatch " + shape_str(target.shape()) +
                         " vs " + shape_str(logits.shape()));
  }
  Tape& t = tape_of(target, logits);
  const std::size_t k = logits.shape().back();
  if (k == 0) throw ArgumentError("cross_entropy_logits over an empty axis");
  const std::size_t rows = logits.value().size() / k;
  auto logp = std::make_shared<Tensor>(logits.shape());
  const Tensor& z = logits.value();
  double s = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = z[r * k];
    for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, z[r * k + i]);
    double se = 0.0;
    for (std::size_t i = 0; i < k; ++i) se += std::exp(z[r * k + i] - mx);
    const double lse = mx + std::log(se);
    for (std::size_t i = 0; i < k; ++i) {
      (*logp)[r * k + i] = z[r * k + i] - lse;
      s -= target.value()[r * k + i] * (*logp)[r * k + i];
    }
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  const std::uint32_t tid = target.id;
  const std::uint32_t lid = logits.id;
  return t.record(Tensor::scalar(s * inv_rows), {target, logits},
                  [tid, lid, logp, k, rows, inv_rows](Tape& tp, std::uint32_t self) {
                    const double g = tp.grad_buffer(self)[0] * inv_rows;
                    const Tensor& tv = tp.value(tid);
                    if (tp.requires_grad(lid)) {
                      Tensor& gl = tp.grad_buffer(lid);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double tsum = 0.0;
                        for (std::size_t i = 0; i < k; ++i) tsum += tv[r * k + i];
                        for (std::size_t i = 0; i < k; ++i) {
                          const std::size_t idx = r * k + i;
                          gl[idx] += g * (std::exp((*logp)[idx]) * tsum - tv[idx]);
                        }
                      }
                    }
                    if (tp.requires_grad(tid)) {
                      Tensor& gt = tp.grad_buffer(tid);
                      for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g * (*logp)[i];
                    }
                  });
}

Var log_magnitude(Var re, Var im, double eps) {
  if (re.shape() != im.shape()) {
    throw DimensionError("log_magnitude shape mismatch " + shape_str(re.shape()) + " vs " +
                         shape_str(im.shape()));
  }
  Tape& t = tape_of(re, im);
  Tensor out(re.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = std::hypot(re.value()[i], im.value()[i]);
    out[i] = std::log(m + eps);
  }
  const std::uint32_t rid = re.id;
  const std::uint32_t iid = im.id;
  return t.record(std::move(out), {re, im}, [rid, iid, eps](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& rv = tp.value(rid);
    const Tensor& iv = tp.value(iid);
    const bool gr = tp.requires_grad(rid);
    const bool gi = tp.requires_grad(iid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double m = std::hypot(rv[i], iv[i]);
      if (m == 0.0) continue;
      const double f = g[i] / (m * (m + eps));
      if (gr) tp.grad_buffer(rid)[i] += f * rv[i];
      if (gi) tp.grad_buffer(iid)[i] += f * iv[i];
    }
  });
}

}  // namespace tspulse::ad
