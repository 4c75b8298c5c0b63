#include <cmath>

#include "tspulse/adapt.hpp"
#include "tspulse/error.hpp"
#include "tspulse/rng.hpp"

namespace tspulse {

HeadKind parse_head_kind(std::string_view name) {
  if (name == "tslens") return HeadKind::tslens;
  if (name == "avg-pool" || name == "avg_pool") return HeadKind::avg_pool;
  throw ArgumentError("unknown classification head '" + std::string(name) + "'");
}

HeadActivation parse_head_activation(std::string_view name) {
  if (name == "softmax") return HeadActivation::softmax;
  if (name == "sigmoid") return HeadActivation::sigmoid;
  throw ArgumentError("unknown head activation '" + std::string(name) + "'");
}

std::size_t ClassifierHead::flatten_dim(const ModelConfig& cfg) const {
  return kind == HeadKind::tslens ? channels * cfg.tokens() * d_proj : cfg.d_model;
}

ClassifierHead init_head(const ModelConfig& cfg, HeadKind kind, std::size_t channels,
                         std::size_t d_proj, std::size_t classes, std::uint64_t seed) {
  if (classes < 2) throw ArgumentError("a classifier needs at least 2 classes");
  if (channels == 0 || d_proj == 0) throw ArgumentError("head channels and projection width must be >= 1");
  ClassifierHead h;
  h.kind = kind;
  h.channels = channels;
  h.d_proj = d_proj;
  h.classes = classes;
  Rng rng(derive_seed(seed, "head"));
  auto uniform_init = [&](Shape s, std::size_t fan_in) {
    Tensor t(std::move(s));
    const double b = 1.0 / std::sqrt(double(fan_in));
    for (auto& v : t.data()) v = uniform(rng, -b, b);
    return t;
  };
  const std::size_t D = cfg.d_model;
  if (kind == HeadKind::tslens) {
    h.params["head.proj.w"] = uniform_init({D, d_proj}, D);
    h.params["head.proj.b"] = uniform_init({d_proj}, D);
  }
  const std::size_t flat = h.flatten_dim(cfg);
  h.params["head.out.w"] = uniform_init({flat, classes}, flat);
  h.params["head.out.b"] = uniform_init({classes}, flat);
  return h;
}

Var head_logits(const Bound& hp, const ModelConfig& cfg, const ClassifierHead& head, Var decoder_e) {
  const Shape& s = decoder_e.shape();
  if (s.size() != 4 || s[1] != head.channels || s[2] != cfg.tokens() || s[3] != cfg.d_model) {
    throw ConfigError("classifier head expects [B, " + std::to_string(head.channels) + ", " +
                      std::to_string(cfg.tokens()) + ", " + std::to_string(cfg.d_model) + "], got " +
                      shape_str(s));
  }
  const std::size_t B = s[0];
  Var flat;
  if (head.kind == HeadKind::tslens) {
    Var z = ad::linear(decoder_e, hp("head.proj.w"), hp("head.proj.b"));
    flat = ad::reshape(z, {B, head.flatten_dim(cfg)});
  } else {
    Var pooled = ad::mean_axis(ad::mean_axis(decoder_e, 1, false), 1, false);
    flat = pooled;
  }
  return ad::linear(flat, hp("head.out.w"), hp("head.out.b"));
}

}  // namespace tspulse
