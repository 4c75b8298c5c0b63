#include "tspulse/series.hpp"

#include <algorithm>

#include "tspulse/error.hpp"

namespace tspulse {

bool Series::fully_observed() const {
  return std::all_of(observed.begin(), observed.end(), [](std::uint8_t o) { return o != 0; });
}

std::vector<double> Series::channel(std::size_t c) const {
  std::vector<double> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = at(t, c);
  return out;
}

Series Series::window(std::size_t start, std::size_t n) const {
  if (start + n > length) {
    throw ArgumentError("window [" + std::to_string(start) + ", " + std::to_string(start + n) +
                        ") exceeds series length " + std::to_string(length));
  }
  Series out(n, channels);
  std::copy(values.begin() + start * channels, values.begin() + (start + n) * channels,
            out.values.begin());
  if (!observed.empty()) {
    out.observed.assign(observed.begin() + start * channels,
                        observed.begin() + (start + n) * channels);
  }
  return out;
}

Tensor to_tensor(const Series& s) {
  Tensor t(Shape{1, s.channels, s.length});
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t i = 0; i < s.length; ++i) t[c * s.length + i] = s.at(i, c);
  return t;
}

Series from_tensor(const Tensor& t, std::size_t batch_index) {
  if (t.rank() != 3) throw DimensionError("from_tensor expects [B, C, S], got " + shape_str(t.shape()));
  const std::size_t C = t.shape()[1], S = t.shape()[2];
  if (batch_index >= t.shape()[0]) throw ArgumentError("batch index out of range");
  Series s(S, C);
  const double* p = t.ptr() + batch_index * C * S;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < S; ++i) s.at(i, c) = p[c * S + i];
  return s;
}

Tensor stack_series(const std::vector<Series>& batch) {
  if (batch.empty()) throw ArgumentError("stack_series on an empty batch");
  const std::size_t C = batch[0].channels, S = batch[0].length;
  Tensor out(Shape{batch.size(), C, S});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].channels != C || batch[b].length != S) {
      throw DimensionError("stack_series: series " + std::to_string(b) + " is " +
                           std::to_string(batch[b].length) + "x" + std::to_string(batch[b].channels) +
                           ", expected " + std::to_string(S) + "x" + std::to_string(C));
    }
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < S; ++i) out[(b * C + c) * S + i] = batch[b].at(i, c);
  }
  return out;
}

}  // namespace tspulse
