#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/preprocess.hpp"

namespace tspulse {

namespace pre {

Var fill_mask(Var x, const Tensor& mask, Var token) {
  Tape& t = *x.tape;
  const Shape& s = x.shape();
  if (mask.shape() != s) {
    throw DimensionError("mask " + shape_str(mask.shape()) + " does not match series " + shape_str(s));
  }
  const std::size_t pl = token.value().size();
  if (s.empty() || pl == 0 || s.back() % pl != 0) {
    throw ConfigError("series length is not a multiple of the mask token length " + std::to_string(pl));
  }
  Tensor keep(s);
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = 1.0 - mask[i];
  Var tiled = ad::tile_last(ad::reshape(token, {1, 1, pl}), s.back() / pl);
  return ad::add(ad::mul(x, t.constant(std::move(keep))), ad::mul(tiled, t.constant(mask)));
}

RevinStats revin_stats(Var x_hat, Var gamma, Var beta, double eps) {
  Var mu = ad::mean_axis(x_hat, -1);
  Var var = ad::mean_axis(ad::square(ad::sub(x_hat, mu)), -1);
  return {mu, ad::sqrt(ad::add_scalar(var, eps)), gamma, beta};
}

Var revin_apply(Var x, const RevinStats& st) {
  return ad::add(ad::mul(ad::div(ad::sub(x, st.mean), st.stdev), st.gamma), st.beta);
}

Var revin_invert(Var y, const RevinStats& st) {
  return ad::add(ad::mul(ad::div(ad::sub(y, st.beta), st.gamma), st.stdev), st.mean);
}

PackedSpectrum pack_spectrum(Var x) {
  const std::size_t S = x.shape().back();
  auto [re, im] = ad::rfft(x);
  re = ad::slice(re, -1, 0, S / 2);
  im = ad::slice(im, -1, 0, S / 2);
  Var sr = ad::max_abs_last(re, kFftNormFloor);
  Var si = ad::max_abs_last(im, kFftNormFloor);
  return {ad::concat({ad::div(re, sr), ad::div(im, si)}, -1), sr, si};
}

Var unpack_spectrum(Var packed, Var scale_re, Var scale_im) {
  Tape& t = *packed.tape;
  const std::size_t S = packed.shape().back();
  Var re = ad::mul(ad::slice(packed, -1, 0, S / 2), scale_re);
  Var im = ad::mul(ad::slice(packed, -1, S / 2, S / 2), scale_im);
  Shape zs = packed.shape();
  zs.back() = 1;
  Var zero = t.constant(Tensor(zs, 0.0));
  return ad::irfft(ad::concat({re, zero}, -1), ad::concat({im, zero}, -1), S);
}

Var signature(Var x) {
  const std::size_t S = x.shape().back();
  auto [re, im] = ad::rfft(x);
  Var mag = ad::log_magnitude(ad::slice(re, -1, 1, S / 2), ad::slice(im, -1, 1, S / 2), kLogMagEps);
  return ad::softmax(mag, -1);
}

}  // namespace pre

namespace {

std::vector<double> param_or(const std::vector<double>& v, std::size_t c, double dflt) {
  if (v.empty()) return std::vector<double>(c, dflt);
  if (v.size() == 1) return std::vector<double>(c, v[0]);
  if (v.size() != c) {
    throw DimensionError("RevIN affine has " + std::to_string(v.size()) + " entries for " +
                         std::to_string(c) + " channels");
  }
  return v;
}

Tensor per_channel(const std::vector<double>& v) {
  return Tensor(Shape{1, v.size(), 1}, v);
}

void require_even(const Series& x) {
  if (x.length == 0 || x.length % 2 != 0) {
    throw ArgumentError("FFT features need an even series length, got " + std::to_string(x.length));
  }
}

}  // namespace

Series revin_forward(const Series& x_hat, RevInState& state) {
  Tape t(false, 0, false);
  const std::size_t C = x_hat.channels;
  Var x = t.constant(to_tensor(x_hat));
  auto st = pre::revin_stats(x, t.constant(per_channel(param_or(state.gamma, C, 1.0))),
                             t.constant(per_channel(param_or(state.beta, C, 0.0))), state.eps);
  state.mean.assign(st.mean.value().data().begin(), st.mean.value().data().end());
  state.stdev.assign(st.stdev.value().data().begin(), st.stdev.value().data().end());
  return from_tensor(pre::revin_apply(x, st).value());
}

namespace {

void check_state(const RevInState& state, std::size_t C) {
  if (state.mean.size() != C || state.stdev.size() != C) {
    throw DimensionError("RevIN state holds " + std::to_string(state.mean.size()) +
                         " channels, series has " + std::to_string(C));
  }
}

}  // namespace

Series revin_normalize(const Series& x, const RevInState& state) {
  const std::size_t C = x.channels;
  check_state(state, C);
  Tape t(false, 0, false);
  pre::RevinStats st{t.constant(per_channel(state.mean)), t.constant(per_channel(state.stdev)),
                     t.constant(per_channel(param_or(state.gamma, C, 1.0))),
                     t.constant(per_channel(param_or(state.beta, C, 0.0)))};
  return from_tensor(pre::revin_apply(t.constant(to_tensor(x)), st).value());
}

Series revin_inverse(const Series& y, const RevInState& state) {
  const std::size_t C = y.channels;
  check_state(state, C);
  auto gamma = param_or(state.gamma, C, 1.0);
  for (std::size_t c = 0; c < C; ++c)
    if (gamma[c] == 0.0) throw SingularityError("RevIN gamma is zero for channel " + std::to_string(c));
  Tape t(false, 0, false);
  pre::RevinStats st{t.constant(per_channel(state.mean)), t.constant(per_channel(state.stdev)),
                     t.constant(per_channel(gamma)),
                     t.constant(per_channel(param_or(state.beta, C, 0.0)))};
  return from_tensor(pre::revin_invert(t.constant(to_tensor(y)), st).value());
}

FftFeatures extract_fft_features(const Series& x_m) {
  require_even(x_m);
  Tape t(false, 0, false);
  auto p = pre::pack_spectrum(t.constant(to_tensor(x_m)));
  const auto& sr = p.scale_re.value().data();
  const auto& si = p.scale_im.value().data();
  return {from_tensor(p.packed.value()), {sr.begin(), sr.end()}, {si.begin(), si.end()}};
}

FftTargets compute_fft_targets(const Series& x_scaled) {
  require_even(x_scaled);
  Tape t(false, 0, false);
  Var x = t.constant(to_tensor(x_scaled));
  return {from_tensor(pre::pack_spectrum(x).packed.value()), from_tensor(pre::signature(x).value())};
}

}  // namespace tspulse
