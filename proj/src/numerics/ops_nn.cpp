#include <cmath>
#include <complex>
#include <memory>

#include "ops_internal.hpp"
#include "tspulse/fft.hpp"
#include "tspulse/kernels.hpp"

namespace tspulse::ad {

using detail::tape_of;

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul shapes " + shape_str(sa) + " and " + shape_str(sb) +
                         " do not conform");
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out(Shape{m, n});
  kernels::gemm(false, false, m, n, k, a.value().ptr(), b.value().ptr(), out.ptr(), false);
  const std::uint32_t aid = a.id;
  const std::uint32_t bid = b.id;
  return t.record(std::move(out), {a, b}, [aid, bid, m, n, k](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    if (tp.requires_grad(aid)) {
      // dA = G * B^T
      kernels::gemm(false, true, m, k, n, g.ptr(), tp.value(bid).ptr(),
                    tp.grad_buffer(aid).ptr(), true);
    }
    if (tp.requires_grad(bid)) {
      // dB = A^T * G
      kernels::gemm(true, false, k, n, m, tp.value(aid).ptr(), g.ptr(),
                    tp.grad_buffer(bid).ptr(), true);
    }
  });
}

namespace {

Var linear_impl(Var x, Var w, const Var* bias) {
  Tape& t = tape_of(x, w);
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.empty() || sw.size() != 2 || sx.back() != sw[0]) {
    throw DimensionError("linear: input " + shape_str(sx) + " does not match weight " +
                         shape_str(sw));
  }
  const std::size_t in = sw[0], outf = sw[1];
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != outf)) {
    throw DimensionError("linear: bias " + shape_str(bias->shape()) + " does not match weight " +
                         shape_str(sw));
  }
  const std::size_t rows = x.value().size() / in;
  Shape out_shape = sx;
  out_shape.back() = outf;
  Tensor out(out_shape);
  if (bias) {
    const double* pb = bias->value().ptr();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(pb, pb + outf, out.ptr() + r * outf);
  }
  kernels::gemm(false, false, rows, outf, in, x.value().ptr(), w.value().ptr(), out.ptr(),
                bias != nullptr);
  const std::uint32_t xid = x.id;
  const std::uint32_t wid = w.id;
  const std::int64_t bid = bias ? static_cast<std::int64_t>(bias->id) : -1;
  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  return t.record(std::move(out), inputs, [xid, wid, bid, rows, in, outf](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    if (tp.requires_grad(xid)) {
      kernels::gemm(false, true, rows, in, outf, g.ptr(), tp.value(wid).ptr(),
                    tp.grad_buffer(xid).ptr(), true);
    }
    if (tp.requires_grad(wid)) {
      kernels::gemm(true, false, in, outf, rows, tp.value(xid).ptr(), g.ptr(),
                    tp.grad_buffer(wid).ptr(), true);
    }
    if (bid >= 0 && tp.requires_grad(static_cast<std::uint32_t>(bid))) {
      double* gb = tp.grad_buffer(static_cast<std::uint32_t>(bid)).ptr();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < outf; ++j) gb[j] += g[r * outf + j];
    }
  });
}

void transpose2d(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

}  // namespace

Var linear(Var x, Var w, Var bias) { return linear_impl(x, w, &bias); }
Var linear(Var x, Var w) { return linear_impl(x, w, nullptr); }

Var mix_axis(Var x, Var w, Var bias, int axis) {
  Tape& t = tape_of(x, w);
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  const int ax = detail::normalize_axis(axis, sx.size(), "mix_axis");
  const auto v = detail::axis_view(sx, ax);
  if (sw.size() != 2 || sw[1] != v.n) {
    throw DimensionError("mix_axis: weight " + shape_str(sw) + " does not contract axis " +
                         std::to_string(ax) + " of " + shape_str(sx));
  }
  const std::size_t outf = sw[0];
  if (bias.shape().size() != 1 || bias.shape()[0] != outf) {
    throw DimensionError("mix_axis: bias " + shape_str(bias.shape()) + " does not match weight " +
                         shape_str(sw));
  }
  Shape out_shape = sx;
  out_shape[static_cast<std::size_t>(ax)] = outf;
  Tensor out(out_shape);
  const double* pw = w.value().ptr();
  const double* pb = bias.value().ptr();
  const double* px = x.value().ptr();
  for (std::size_t o = 0; o < v.outer; ++o) {
    double* po = out.ptr() + o * outf * v.inner;
    for (std::size_t r = 0; r < outf; ++r)
      for (std::size_t j = 0; j < v.inner; ++j) po[r * v.inner + j] = pb[r];
    kernels::gemm(false, false, outf, v.inner, v.n, pw, px + o * v.n * v.inner, po, true);
  }
  const std::uint32_t xid = x.id;
  const std::uint32_t wid = w.id;
  const std::uint32_t bid = bias.id;
  return t.record(std::move(out), {x, w, bias}, [xid, wid, bid, v, outf](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& wv = tp.value(wid);
    if (tp.requires_grad(xid)) {
      std::vector<double> wt(wv.size());
      transpose2d(wv.ptr(), outf, v.n, wt.data());
      double* gx = tp.grad_buffer(xid).ptr();
      for (std::size_t o = 0; o < v.outer; ++o)
        kernels::gemm(false, false, v.n, v.inner, outf, wt.data(), g.ptr() + o * outf * v.inner,
                      gx + o * v.n * v.inner, true);
    }
    if (tp.requires_grad(wid)) {
      const double* px = tp.value(xid).ptr();
      double* gw = tp.grad_buffer(wid).ptr();
      for (std::size_t o = 0; o < v.outer; ++o)
        kernels::gemm(false, true, outf, v.n, v.inner, g.ptr() + o * outf * v.inner,
                      px + o * v.n * v.inner, gw, true);
    }
    if (tp.requires_grad(bid)) {
      double* gb = tp.grad_buffer(bid).ptr();
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t r = 0; r < outf; ++r)
          for (std::size_t j = 0; j < v.inner; ++j) gb[r] += g[(o * outf + r) * v.inner + j];
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& t = tape_of(x, gamma);
  const Shape& sx = x.shape();
  if (sx.empty()) throw DimensionError("layer_norm on a scalar");
  const std::size_t d = sx.back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw DimensionError("layer_norm: affine shapes " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match feature dim of " + shape_str(sx));
  }
  const std::size_t rows = x.value().size() / d;
  const bool keep = t.grad_enabled() &&
                    (t.requires_grad(x.id) || t.requires_grad(gamma.id) || t.requires_grad(beta.id));
  auto xhat = std::make_shared<std::vector<double>>(keep ? x.value().size() : 0);
  auto rstd = std::make_shared<std::vector<double>>(keep ? rows : 0);
  Tensor out(sx);
  const double* px = x.value().ptr();
  const double* pg = gamma.value().ptr();
  const double* pb = beta.value().ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = px + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    if (keep) (*rstd)[r] = rs;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - mu) * rs;
      if (keep) (*xhat)[r * d + j] = xh;
      out[r * d + j] = xh * pg[j] + pb[j];
    }
  }
  const std::uint32_t xid = x.id, gid = gamma.id, bid = beta.id;
  return t.record(std::move(out), {x, gamma, beta},
                  [xid, gid, bid, xhat, rstd, rows, d](Tape& tp, std::uint32_t self) {
                    const Tensor& g = tp.grad_buffer(self);
                    const double* pgam = tp.value(gid).ptr();
                    if (tp.requires_grad(gid)) {
                      double* gg = tp.grad_buffer(gid).ptr();
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[r * d + j];
                    }
                    if (tp.requires_grad(bid)) {
                      double* gb = tp.grad_buffer(bid).ptr();
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                    }
                    if (tp.requires_grad(xid)) {
                      double* gx = tp.grad_buffer(xid).ptr();
                      const double inv_d = 1.0 / static_cast<double>(d);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double m1 = 0.0, m2 = 0.0;
                        for (std::size_t j = 0; j < d; ++j) {
                          const double dxh = g[r * d + j] * pgam[j];
                          m1 += dxh;
                          m2 += dxh * (*xhat)[r * d + j];
                        }
                        m1 *= inv_d;
                        m2 *= inv_d;
                        for (std::size_t j = 0; j < d; ++j) {
                          const double dxh = g[r * d + j] * pgam[j];
                          gx[r * d + j] += (*rstd)[r] * (dxh - m1 - (*xhat)[r * d + j] * m2);
                        }
                      }
                    }
                  });
}

Var softmax(Var a, int axis) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const int ax = detail::normalize_axis(axis, s.size(), "softmax");
  const auto v = detail::axis_view(s, ax);
  if (v.n == 0) throw ArgumentError("softmax over an empty axis");
  Tensor out(s);
  const double* pa = a.value().ptr();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.inner; ++j) {
      const std::size_t base = o * v.n * v.inner + j;
      double mx = pa[base];
      for (std::size_t i = 1; i < v.n; ++i) mx = std::max(mx, pa[base + i * v.inner]);
      double se = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) {
        const double e = std::exp(pa[base + i * v.inner] - mx);
        out[base + i * v.inner] = e;
        se += e;
      }
      const double inv = 1.0 / se;
      for (std::size_t i = 0; i < v.n; ++i) out[base + i * v.inner] *= inv;
    }
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, v](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& y = tp.value(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.inner; ++j) {
        const std::size_t base = o * v.n * v.inner + j;
        double dotv = 0.0;
        for (std::size_t i = 0; i < v.n; ++i) dotv += g[base + i * v.inner] * y[base + i * v.inner];
        for (std::size_t i = 0; i < v.n; ++i) {
          const std::size_t idx = base + i * v.inner;
          ga[idx] += y[idx] * (g[idx] - dotv);
        }
      }
  });
}

Var log_softmax(Var a, int axis) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const int ax = detail::normalize_axis(axis, s.size(), "log_softmax");
  const auto v = detail::axis_view(s, ax);
  if (v.n == 0) throw ArgumentError("log_softmax over an empty axis");
  Tensor out(s);
  const double* pa = a.value().ptr();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t j = 0; j < v.inner; ++j) {
      const std::size_t base = o * v.n * v.inner + j;
      double mx = pa[base];
      for (std::size_t i = 1; i < v.n; ++i) mx = std::max(mx, pa[base + i * v.inner]);
      double se = 0.0;
      for (std::size_t i = 0; i < v.n; ++i) se += std::exp(pa[base + i * v.inner] - mx);
      const double lse = mx + std::log(se);
      for (std::size_t i = 0; i < v.n; ++i) out[base + i * v.inner] = pa[base + i * v.inner] - lse;
    }
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, v](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& y = tp.value(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t o = 0; o < v.outer; ++o)
      for (std::size_t j = 0; j < v.inner; ++j) {
        const std::size_t base = o * v.n * v.inner + j;
        double gs = 0.0;
        for (std::size_t i = 0; i < v.n; ++i) gs += g[base + i * v.inner];
        for (std::size_t i = 0; i < v.n; ++i) {
          const std::size_t idx = base + i * v.inner;
          ga[idx] += g[idx] - std::exp(y[idx]) * gs;
        }
      }
  });
}

namespace {

// Counter-based generator: splitmix64 finaliser over (seed, stream, index).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL) ^ (index * 0xD1B54A32D192ED03ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace

Var dropout(Var a, double p) {
  if (p < 0.0 || p >= 1.0) throw ArgumentError("dropout probability must be in [0, 1)");
  Tape& t = tape_of(a);
  if (p == 0.0 || !t.training()) return a;
  const std::uint64_t stream = t.next_stream();
  const std::uint64_t seed = t.dropout_seed();
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(a.value().size());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = counter_uniform(seed, stream, i) >= p ? keep_scale : 0.0;
    (*mask)[i] = m;
    out[i] = a.value()[i] * m;
  }
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, mask](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*mask)[i];
  });
}

std::pair<Var, Var> rfft(Var x) {
  Tape& t = tape_of(x);
  const Shape& s = x.shape();
  if (s.empty()) throw DimensionError("rfft on a scalar");
  const std::size_t n = s.back();
  if (n == 0 || n % 2 != 0) {
    throw ArgumentError("rfft requires an even length along the last axis, got " +
                        std::to_string(n));
  }
  const std::size_t bins = n / 2 + 1;
  const std::size_t rows = x.value().size() / n;
  Shape os = s;
  os.back() = bins;
  Tensor re(os), im(os);
  for (std::size_t r = 0; r < rows; ++r) {
    fft::rfft(std::span<const double>(x.value().ptr() + r * n, n),
              std::span<double>(re.ptr() + r * bins, bins),
              std::span<double>(im.ptr() + r * bins, bins));
  }
  const std::uint32_t xid = x.id;
  // Adjoint of either component: Re( sum_k Z_k e^{+2 pi i k t / n} ), with
  // Z_k = g_re[k] for the real part and Z_k = i g_im[k] for the imaginary part.
  auto adjoint = [xid, n, bins, rows](Tape& tp, std::uint32_t self, bool imag) {
    const Tensor& g = tp.grad_buffer(self);
    double* gx = tp.grad_buffer(xid).ptr();
    std::vector<std::complex<double>> buf(n);
    for (std::size_t r = 0; r < rows; ++r) {
      std::fill(buf.begin(), buf.end(), std::complex<double>{});
      for (std::size_t k = 0; k < bins; ++k) {
        const double gv = g[r * bins + k];
        buf[k] = imag ? std::complex<double>(0.0, gv) : std::complex<double>(gv, 0.0);
      }
      fft::transform(buf, true);
      for (std::size_t tt = 0; tt < n; ++tt) gx[r * n + tt] += buf[tt].real();
    }
  };
  Var vre = t.record(std::move(re), {x}, [adjoint](Tape& tp, std::uint32_t self) {
    adjoint(tp, self, false);
  });
  Var vim = t.record(std::move(im), {x}, [adjoint](Tape& tp, std::uint32_t self) {
    adjoint(tp, self, true);
  });
  return {vre, vim};
}

Var irfft(Var re, Var im, std::size_t n) {
  Tape& t = tape_of(re, im);
  if (n == 0 || n % 2 != 0) throw ArgumentError("irfft output length must be even and non-zero");
  const std::size_t bins = n / 2 + 1;
  if (re.shape() != im.shape() || re.shape().empty() || re.shape().back() != bins) {
    throw ArgumentError("irfft expects re/im of matching shape with " + std::to_string(bins) +
                        " bins, got " + shape_str(re.shape()) + " and " + shape_str(im.shape()));
  }
  const std::size_t rows = re.value().size() / bins;
  Shape os = re.shape();
  os.back() = n;
  Tensor out(os);
  for (std::size_t r = 0; r < rows; ++r) {
    fft::irfft(std::span<const double>(re.value().ptr() + r * bins, bins),
               std::span<const double>(im.value().ptr() + r * bins, bins),
               std::span<double>(out.ptr() + r * n, n));
  }
  const std::uint32_t rid = re.id;
  const std::uint32_t iid = im.id;
  return t.record(std::move(out), {re, im}, [rid, iid, n, bins, rows](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    std::vector<double> gre(bins), gim(bins);
    const bool need_re = tp.requires_grad(rid);
    const bool need_im = tp.requires_grad(iid);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < rows; ++r) {
      fft::rfft(std::span<const double>(g.ptr() + r * n, n), gre, gim);
      for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = (k == 0 || k == bins - 1);
        const double c = (edge ? 1.0 : 2.0) * inv_n;
        if (need_re) tp.grad_buffer(rid)[r * bins + k] += c * gre[k];
        if (need_im && !edge) tp.grad_buffer(iid)[r * bins + k] += c * gim[k];
      }
    }
  });
}

}  // namespace tspulse::ad
