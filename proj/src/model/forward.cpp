#include <algorithm>
#include <vector>

#include "tspulse/error.hpp"
#include "tspulse/model.hpp"

namespace tspulse {

namespace {

Var gate(const Bound& p, const ModelConfig& cfg, Var x, const std::string& prefix) {
  Var logits = ad::linear(x, p(prefix + ".w"), p(prefix + ".b"));
  Var g = cfg.gate_activation == "sigmoid" ? ad::sigmoid(logits) : ad::softmax(logits, -1);
  return ad::mul(x, g);
}

Var flat_head(const Bound& p, const ModelConfig& cfg, Var v, const std::string& prefix) {
  if (p.has(prefix + ".reduce.w")) v = ad::linear(v, p(prefix + ".reduce.w"), p(prefix + ".reduce.b"));
  const Shape& s = v.shape();
  v = ad::reshape(v, {s[0], s[1], s[2] * s[3]});
  v = ad::dropout(v, cfg.head_dropout);
  return ad::linear(v, p(prefix + ".out.w"), p(prefix + ".out.b"));
}

Var semantic_head(const Bound& p, const ModelConfig& cfg, Var reg, const std::string& prefix) {
  const Shape& s = reg.shape();
  Var v = ad::reshape(reg, {s[0], s[1], s[2] * s[3]});
  v = ad::dropout(v, cfg.head_dropout);
  return ad::linear(v, p(prefix + ".w"), p(prefix + ".b"));
}

void check_series(const ModelConfig& cfg, const Shape& s, const char* what) {
  if (s.size() != 3 || s[2] != cfg.context) {
    throw ConfigError(std::string(what) + " has shape " + shape_str(s) +
                      ", model expects [B, C, " + std::to_string(cfg.context) + "]");
  }
}

}  // namespace

Var encode(const Bound& p, const ModelConfig& cfg, Var x_m, Var xf_m) {
  check_series(cfg, x_m.shape(), "time input");
  check_series(cfg, xf_m.shape(), "frequency input");
  const std::size_t B = x_m.shape()[0], C = x_m.shape()[1];
  const std::size_t N = cfg.patches(), pl = cfg.patch_len, R = cfg.registers, D = cfg.d_model;
  Var te = ad::linear(ad::reshape(x_m, {B, C, N, pl}), p("enc.time.w"), p("enc.time.b"));
  Var fe = ad::linear(ad::reshape(xf_m, {B, C, N, pl}), p("enc.fft.w"), p("enc.fft.b"));
  Var reg = ad::broadcast_to(ad::reshape(p("enc.registers"), {1, 1, R, D}), {B, C, R, D});
  return ad::layer_norm(ad::concat({te, fe, reg}, 2), p("enc.norm.g"), p("enc.norm.b"));
}

Var mixer_block(const Bound& p, const ModelConfig& cfg, Var x, const std::string& prefix,
                bool require_channel_mixing) {
  // token mixing over K
  Var y = ad::layer_norm(x, p(prefix + ".tok.norm.g"), p(prefix + ".tok.norm.b"));
  y = ad::gelu(ad::mix_axis(y, p(prefix + ".tok.fc1.w"), p(prefix + ".tok.fc1.b"), 2));
  y = ad::dropout(y, cfg.dropout);
  y = ad::mix_axis(y, p(prefix + ".tok.fc2.w"), p(prefix + ".tok.fc2.b"), 2);
  y = ad::dropout(y, cfg.dropout);
  x = ad::add(gate(p, cfg, y, prefix + ".tok.gate"), x);

  if (p.has(prefix + ".chan.w")) {
    Var w = p(prefix + ".chan.w");
    if (w.shape()[0] != x.shape()[1]) {
      throw ConfigError("channel mixer in " + prefix + " is built for " +
                        std::to_string(w.shape()[0]) + " channels, input has " +
                        std::to_string(x.shape()[1]));
    }
    x = ad::mix_axis(x, w, p(prefix + ".chan.b"), 1);
  } else if (require_channel_mixing) {
    throw ConfigError("channel mixing requested but " + prefix + " has no channel mixer weights");
  }

  // feature mixing over D
  y = ad::layer_norm(x, p(prefix + ".feat.norm.g"), p(prefix + ".feat.norm.b"));
  y = ad::gelu(ad::linear(y, p(prefix + ".feat.fc1.w"), p(prefix + ".feat.fc1.b")));
  y = ad::dropout(y, cfg.dropout);
  y = ad::linear(y, p(prefix + ".feat.fc2.w"), p(prefix + ".feat.fc2.b"));
  y = ad::dropout(y, cfg.dropout);
  return ad::add(gate(p, cfg, y, prefix + ".feat.gate"), x);
}

Var backbone_forward(const Bound& p, const ModelConfig& cfg, Var input_e) {
  for (std::size_t i = 0; i < cfg.backbone_layers; ++i)
    input_e = mixer_block(p, cfg, input_e, "backbone." + std::to_string(i));
  return input_e;
}

Var decoder_forward(const Bound& p, const ModelConfig& cfg, Var backbone_e) {
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i)
    backbone_e = mixer_block(p, cfg, backbone_e, "decoder." + std::to_string(i));
  return backbone_e;
}

EmbeddingViews split_views(const ModelConfig& cfg, Var decoder_e) {
  const std::size_t N = cfg.patches();
  auto parts = ad::split(decoder_e, 2, {N, N, cfg.registers});
  return {parts[0], parts[1], parts[2]};
}

HeadOutputs heads_forward(const Bound& p, const ModelConfig& cfg, const EmbeddingViews& views,
                          const pre::RevinStats& revin, const pre::PackedSpectrum& features) {
  HeadOutputs h;
  h.y = pre::revin_invert(flat_head(p, cfg, views.time, "head.time"), revin);
  h.y_fft = flat_head(p, cfg, views.fft, "head.fft");
  h.y_alt = pre::revin_invert(pre::unpack_spectrum(h.y_fft, features.scale_re, features.scale_im), revin);
  h.sign_logits = semantic_head(p, cfg, views.reg, "head.sign");
  h.sign = ad::softmax(h.sign_logits, -1);
  h.pred = pre::revin_invert(semantic_head(p, cfg, views.reg, "head.pred"), revin);
  return h;
}

ForwardResult forward(const Bound& p, const ModelConfig& cfg, const Batch& batch) {
  check_series(cfg, batch.x.shape(), "batch");
  Tape& t = p.tape();
  ForwardResult r;
  Var x = t.constant(batch.x);
  r.x_hat = batch.mask.empty() ? x : pre::fill_mask(x, batch.mask, p("mask_token"));
  r.revin = pre::revin_stats(r.x_hat, p("revin.gamma"), p("revin.beta"));
  r.x_m = pre::revin_apply(r.x_hat, r.revin);
  r.features = pre::pack_spectrum(r.x_m);
  r.input_e = encode(p, cfg, r.x_m, r.features.packed);
  r.backbone_e = backbone_forward(p, cfg, r.input_e);
  r.decoder_e = decoder_forward(p, cfg, r.backbone_e);
  r.views = split_views(cfg, r.decoder_e);
  r.out = heads_forward(p, cfg, r.views, r.revin, r.features);
  Var scaled = pre::revin_apply(x, r.revin);
  r.targets.packed = pre::pack_spectrum(scaled).packed;
  r.targets.signature = pre::signature(scaled);
  return r;
}

Var decoder_embedding(const Bound& p, const ModelConfig& cfg, const Batch& batch) {
  check_series(cfg, batch.x.shape(), "batch");
  Tape& t = p.tape();
  Var x = t.constant(batch.x);
  Var x_hat = batch.mask.empty() ? x : pre::fill_mask(x, batch.mask, p("mask_token"));
  Var x_m = pre::revin_apply(x_hat, pre::revin_stats(x_hat, p("revin.gamma"), p("revin.beta")));
  Var input_e = encode(p, cfg, x_m, pre::pack_spectrum(x_m).packed);
  return decoder_forward(p, cfg, backbone_forward(p, cfg, input_e));
}

namespace {

// Series (samples x channels) per evaluation tape. Every op acts on one
// sample at a time, so chunking leaves the outputs bitwise unchanged and
// bounds peak memory.
constexpr std::size_t kInferSequences = 32;

Tensor rows_of(const Tensor& t, std::size_t begin, std::size_t count) {
  if (t.size() == 0) return t;
  Shape s = t.shape();
  const std::size_t stride = t.size() / s[0];
  s[0] = count;
  return Tensor(std::move(s), std::vector<double>(t.ptr() + begin * stride, t.ptr() + (begin + count) * stride));
}

}  // namespace

Inference infer(const Model& m, const Batch& batch) {
  auto run = [&m](const Batch& b) {
    Tape t(false, 0, false);
    Bound p(t, m.params, [](const std::string&) { return false; });
    ForwardResult r = forward(p, m.cfg, b);
    return Inference{r.out.y.value(),    r.out.y_fft.value(),   r.out.y_alt.value(), r.out.sign.value(),
                     r.out.pred.value(), r.views.time.value(), r.views.fft.value(), r.views.reg.value()};
  };
  const Shape& s = batch.x.shape();
  if (s.size() != 3 || s[0] <= 1 || s[0] * s[1] <= kInferSequences) return run(batch);
  const std::size_t B = s[0], step = std::max<std::size_t>(1, kInferSequences / std::max<std::size_t>(s[1], 1));
  Inference out;
  Tensor* fields[] = {&out.y, &out.y_fft, &out.y_alt, &out.sign, &out.pred, &out.time_e, &out.fft_e, &out.reg_e};
  for (std::size_t b0 = 0; b0 < B; b0 += step) {
    const std::size_t n = std::min(step, B - b0);
    const Inference part = run({rows_of(batch.x, b0, n), rows_of(batch.mask, b0, n), rows_of(batch.future, b0, n)});
    const Tensor* parts[] = {&part.y, &part.y_fft, &part.y_alt, &part.sign, &part.pred, &part.time_e, &part.fft_e, &part.reg_e};
    for (std::size_t f = 0; f < 8; ++f) {
      Tensor& dst = *fields[f];
      const Tensor& src = *parts[f];
      const std::size_t stride = src.size() / n;
      if (b0 == 0) {
        Shape ds = src.shape();
        ds[0] = B;
        dst = Tensor(std::move(ds));
      }
      std::copy(src.ptr(), src.ptr() + src.size(), dst.ptr() + b0 * stride);
    }
  }
  return out;
}

}  // namespace tspulse
