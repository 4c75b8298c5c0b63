#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tspulse/autodiff.hpp"
#include "tspulse/error.hpp"

namespace tspulse::ad::detail {

inline Tape& tape_of(Var a) {
  if (!a.tape) throw UsageError("operation on an unbound variable");
  return *a.tape;
}

inline Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape || !a.tape) throw UsageError("operation mixes variables from different tapes");
  return *a.tape;
}

inline int normalize_axis(int axis, std::size_t rank, const char* op) {
  const int r = static_cast<int>(rank);
  const int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  return ax;
}

/// View of a shape as [outer, n, inner] around `axis`.
struct AxisView {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

inline AxisView axis_view(const Shape& s, int axis) {
  AxisView v;
  for (int i = 0; i < axis; ++i) v.outer *= s[static_cast<std::size_t>(i)];
  v.n = s[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

/// Index maps from an output element to the source elements of two
/// broadcast operands.
struct Broadcast {
  Shape out;
  bool same = false;
  std::vector<std::uint32_t> ia;
  std::vector<std::uint32_t> ib;
};

Broadcast make_broadcast(const Shape& a, const Shape& b, const char* op);
/// Index map for broadcasting `src` to `dst`.
std::vector<std::uint32_t> broadcast_map(const Shape& src, const Shape& dst, const char* op);

}  // namespace tspulse::ad::detail
