#include <memory>
#include <numeric>

#include "ops_internal.hpp"

namespace tspulse::ad {

using detail::tape_of;

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    Tensor& ga = tp.grad_buffer(aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var permute(Var a, const std::vector<std::size_t>& perm) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const std::size_t r = s.size();
  if (perm.size() != r) {
    throw DimensionError("permute: permutation of size " + std::to_string(perm.size()) +
                         " for shape " + shape_str(s));
  }
  std::vector<bool> seen(r, false);
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) {
    if (perm[i] >= r || seen[perm[i]]) throw ArgumentError("permute: invalid permutation");
    seen[perm[i]] = true;
    out_shape[i] = s[perm[i]];
  }
  std::vector<std::size_t> src_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) src_stride[i - 1] = src_stride[i] * s[i];
  const std::size_t total = a.value().size();
  auto map = std::make_shared<std::vector<std::uint32_t>>(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t pos = 0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    (*map)[lin] = static_cast<std::uint32_t>(pos);
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      pos += src_stride[perm[ax]];
      if (idx[ax] < out_shape[ax]) break;
      pos -= src_stride[perm[ax]] * idx[ax];
      idx[ax] = 0;
    }
  }
  Tensor out(out_shape);
  const double* pa = a.value().ptr();
  for (std::size_t i = 0; i < total; ++i) out[i] = pa[(*map)[i]];
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, map](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t i = 0; i < g.size(); ++i) ga[(*map)[i]] += g[i];
  });
}

Var transpose(Var a) {
  const std::size_t r = a.shape().size();
  if (r < 2) throw DimensionError("transpose requires rank >= 2, got " + shape_str(a.shape()));
  std::vector<std::size_t> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[r - 1], perm[r - 2]);
  return permute(a, perm);
}

Var broadcast_to(Var a, const Shape& shape) {
  Tape& t = tape_of(a);
  auto map = std::make_shared<std::vector<std::uint32_t>>(
      detail::broadcast_map(a.shape(), shape, "broadcast_to"));
  Tensor out(shape);
  const double* pa = a.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[(*map)[i]];
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, map](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t i = 0; i < g.size(); ++i) ga[(*map)[i]] += g[i];
  });
}

Var tile_last(Var a, std::size_t reps) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (s.empty()) throw DimensionError("tile_last on a scalar");
  const std::size_t n = s.back();
  const std::size_t rows = a.value().size() / std::max<std::size_t>(n, 1);
  Shape out_shape = s;
  out_shape.back() = n * reps;
  Tensor out(out_shape);
  const double* pa = a.value().ptr();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < reps; ++k)
      for (std::size_t j = 0; j < n; ++j) out[(r * reps + k) * n + j] = pa[r * n + j];
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, rows, reps, n](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < reps; ++k)
        for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += g[(r * reps + k) * n + j];
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ArgumentError("concat of zero tensors");
  Tape& t = tape_of(parts.front());
  const Shape& s0 = parts.front().shape();
  const int ax = detail::normalize_axis(axis, s0.size(), "concat");
  Shape out_shape = s0;
  out_shape[static_cast<std::size_t>(ax)] = 0;
  std::vector<std::size_t> sizes;
  for (const Var& p : parts) {
    if (p.tape != &t) throw UsageError("concat mixes variables from different tapes");
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (static_cast<int>(i) != ax && s[i] != s0[i]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: shapes " + shape_str(s0) + " and " + shape_str(s) +
                           " differ off axis " + std::to_string(ax));
    }
    sizes.push_back(s[static_cast<std::size_t>(ax)]);
    out_shape[static_cast<std::size_t>(ax)] += s[static_cast<std::size_t>(ax)];
  }
  const auto v = detail::axis_view(out_shape, ax);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const double* pp = parts[pi].value().ptr();
    const std::size_t n = sizes[pi];
    for (std::size_t o = 0; o < v.outer; ++o)
      std::copy(pp + o * n * v.inner, pp + (o + 1) * n * v.inner,
                out.ptr() + (o * v.n + offset) * v.inner);
    offset += n;
  }
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) ids.push_back(p.id);
  return t.record(std::move(out), parts, [ids, sizes, v](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < ids.size(); ++pi) {
      const std::size_t n = sizes[pi];
      if (tp.requires_grad(ids[pi])) {
        double* gp = tp.grad_buffer(ids[pi]).ptr();
        for (std::size_t o = 0; o < v.outer; ++o) {
          const double* src = g.ptr() + (o * v.n + offset) * v.inner;
          double* dst = gp + o * n * v.inner;
          for (std::size_t i = 0; i < n * v.inner; ++i) dst[i] += src[i];
        }
      }
      offset += n;
    }
  });
}

Var slice(Var a, int axis, std::size_t start, std::size_t length) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const int ax = detail::normalize_axis(axis, s.size(), "slice");
  const auto v = detail::axis_view(s, ax);
  if (start + length > v.n) {
    throw DimensionError("slice [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") exceeds axis of size " +
                         std::to_string(v.n) + " in " + shape_str(s));
  }
  Shape out_shape = s;
  out_shape[static_cast<std::size_t>(ax)] = length;
  Tensor out(out_shape);
  const double* pa = a.value().ptr();
  for (std::size_t o = 0; o < v.outer; ++o)
    std::copy(pa + (o * v.n + start) * v.inner, pa + (o * v.n + start + length) * v.inner,
              out.ptr() + o * length * v.inner);
  const std::uint32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, v, start, length](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    double* ga = tp.grad_buffer(aid).ptr();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* src = g.ptr() + o * length * v.inner;
      double* dst = ga + (o * v.n + start) * v.inner;
      for (std::size_t i = 0; i < length * v.inner; ++i) dst[i] += src[i];
    }
  });
}

std::vector<Var> split(Var a, int axis, const std::vector<std::size_t>& sizes) {
  const int ax = detail::normalize_axis(axis, a.shape().size(), "split");
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total != a.shape()[static_cast<std::size_t>(ax)]) {
    throw DimensionError("split sizes sum to " + std::to_string(total) + " but axis has " +
                         std::to_string(a.shape()[static_cast<std::size_t>(ax)]));
  }
  std::vector<Var> out;
  std::size_t start = 0;
  for (std::size_t n : sizes) {
    out.push_back(slice(a, ax, start, n));
    start += n;
  }
  return out;
}

}  // namespace tspulse::ad
