#include <cmath>

#include "tspulse/adapt.hpp"
#include "tspulse/error.hpp"

namespace tspulse {

void insert_channel_mixers(Model& m, std::size_t channels) {
  if (channels == 0) throw ArgumentError("channel mixers need at least one channel");
  if (m.cfg.decoder_layers == 0) throw ConfigError("decoder_layers is 0: no decoder to hold channel mixers");
  if (m.mixer_channels != 0) {
    throw ConfigError("model already has channel mixers for " + std::to_string(m.mixer_channels) + " channels");
  }
  for (std::size_t i = 0; i < m.cfg.decoder_layers; ++i) {
    const std::string p = "decoder." + std::to_string(i) + ".chan";
    Tensor w(Shape{channels, channels}, 0.0);
    for (std::size_t c = 0; c < channels; ++c) w[c * channels + c] = 1.0;
    m.params[p + ".w"] = std::move(w);
    m.params[p + ".b"] = Tensor(Shape{channels}, 0.0);
  }
  m.mixer_channels = channels;
}

Series expand_channels(const Series& x, std::size_t factor) {
  if (factor == 0) throw ArgumentError("channel expansion factor must be >= 1");
  if (factor == 1) return x;
  const std::size_t C = x.channels, C2 = C * factor;
  Series out(x.length, C2);
  if (!x.observed.empty()) out.observed.assign(x.length * C2, 1);
  for (std::size_t t = 0; t < x.length; ++t)
    for (std::size_t k = 0; k < factor; ++k)
      for (std::size_t c = 0; c < C; ++c) {
        out.values[t * C2 + k * C + c] = x.at(t, c);
        if (!x.observed.empty()) out.observed[t * C2 + k * C + c] = x.observed[t * C + c];
      }
  return out;
}

Series interpolate_length(const Series& x, std::size_t length) {
  if (x.length == 0 || length == 0) throw ArgumentError("cannot resample an empty series");
  if (length == x.length) return x;
  const double ratio = double(length) / double(x.length);
  if (ratio > kMaxInterpolation || ratio < 1.0 / kMaxInterpolation) {
    throw CapabilityError("resampling " + std::to_string(x.length) + " -> " + std::to_string(length) +
                          " points exceeds the supported 20x ratio");
  }
  const std::size_t C = x.channels;
  Series out(length, C);
  if (!x.observed.empty()) out.observed.assign(length * C, 1);
  const double step = length > 1 ? double(x.length - 1) / double(length - 1) : 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double pos = t + 1 == length ? double(x.length - 1) : double(t) * step;
    std::size_t i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= x.length - 1) i0 = x.length > 1 ? x.length - 2 : 0;
    const std::size_t i1 = std::min(i0 + 1, x.length - 1);
    const double f = pos - double(i0);
    for (std::size_t c = 0; c < C; ++c) {
      out.at(t, c) = f == 0.0 ? x.at(i0, c) : f == 1.0 ? x.at(i1, c) : (1.0 - f) * x.at(i0, c) + f * x.at(i1, c);
      if (!x.observed.empty()) {
        const bool ok = (f == 1.0 || x.is_observed(i0, c)) && (f == 0.0 || x.is_observed(i1, c));
        out.observed[t * C + c] = ok ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace tspulse
