#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/model.hpp"
#include "tspulse/rng.hpp"

namespace tspulse {

namespace {

void add_block(std::map<std::string, Shape>& s, const std::string& p, const ModelConfig& cfg,
               std::size_t mixer_channels) {
  const std::size_t K = cfg.tokens(), D = cfg.d_model, e = cfg.expansion;
  s[p + ".tok.norm.g"] = {D};
  s[p + ".tok.norm.b"] = {D};
  s[p + ".tok.fc1.w"] = {e * K, K};
  s[p + ".tok.fc1.b"] = {e * K};
  s[p + ".tok.fc2.w"] = {K, e * K};
  s[p + ".tok.fc2.b"] = {K};
  s[p + ".tok.gate.w"] = {D, D};
  s[p + ".tok.gate.b"] = {D};
  if (mixer_channels > 0) {
    s[p + ".chan.w"] = {mixer_channels, mixer_channels};
    s[p + ".chan.b"] = {mixer_channels};
  }
  s[p + ".feat.norm.g"] = {D};
  s[p + ".feat.norm.b"] = {D};
  s[p + ".feat.fc1.w"] = {D, e * D};
  s[p + ".feat.fc1.b"] = {e * D};
  s[p + ".feat.fc2.w"] = {e * D, D};
  s[p + ".feat.fc2.b"] = {D};
  s[p + ".feat.gate.w"] = {D, D};
  s[p + ".feat.gate.b"] = {D};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::map<std::string, Shape> expected_shapes(const ModelConfig& cfg, std::size_t mixer_channels) {
  cfg.validate();
  const std::size_t D = cfg.d_model, pl = cfg.patch_len, N = cfg.patches(), S = cfg.context;
  const std::size_t hd = cfg.head_width();
  std::map<std::string, Shape> s;
  s["mask_token"] = {pl};
  s["revin.gamma"] = {1};
  s["revin.beta"] = {1};
  s["enc.time.w"] = {pl, D};
  s["enc.time.b"] = {D};
  s["enc.fft.w"] = {pl, D};
  s["enc.fft.b"] = {D};
  s["enc.registers"] = {cfg.registers, D};
  s["enc.norm.g"] = {D};
  s["enc.norm.b"] = {D};
  for (std::size_t i = 0; i < cfg.backbone_layers; ++i)
    add_block(s, "backbone." + std::to_string(i), cfg, 0);
  for (std::size_t i = 0; i < cfg.decoder_layers; ++i)
    add_block(s, "decoder." + std::to_string(i), cfg, mixer_channels);
  for (const char* h : {"head.time", "head.fft"}) {
    const std::string p = h;
    if (hd != D) {
      s[p + ".reduce.w"] = {D, hd};
      s[p + ".reduce.b"] = {hd};
    }
    s[p + ".out.w"] = {N * hd, S};
    s[p + ".out.b"] = {S};
  }
  s["head.sign.w"] = {cfg.semantic_dim(), S / 2};
  s["head.sign.b"] = {S / 2};
  s["head.pred.w"] = {cfg.semantic_dim(), cfg.pred_len};
  s["head.pred.b"] = {cfg.pred_len};
  return s;
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model m;
  m.cfg = cfg;
  Rng rng(derive_seed(seed, "init"));
  const auto shapes = expected_shapes(cfg, 0);
  for (const auto& [name, shape] : shapes) {
    Tensor t(shape, 0.0);
    if (name == "revin.gamma" || ends_with(name, ".norm.g")) {
      t = Tensor(shape, 1.0);
    } else if (name == "enc.registers") {
      for (auto& v : t.data()) v = 0.02 * normal(rng);
    } else if (name != "mask_token" && name != "revin.beta" && !ends_with(name, ".norm.b")) {
      // uniform(+-1/sqrt(fan_in)); token-mixing weights are stored [out, in]
      const Shape& ws = shapes.at(name.substr(0, name.size() - 2) + ".w");
      const bool out_in = name.find(".tok.fc") != std::string::npos;
      const double bound = 1.0 / std::sqrt(double(out_in ? ws[1] : ws[0]));
      for (auto& v : t.data()) v = uniform(rng, -bound, bound);
    }
    m.params.emplace(name, std::move(t));
  }
  return m;
}

std::size_t parameter_count(const ParamMap& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

void check_params(const Model& m) {
  const auto shapes = expected_shapes(m.cfg, m.mixer_channels);
  for (const auto& [name, shape] : shapes) {
    auto it = m.params.find(name);
    if (it == m.params.end()) throw ConfigError("missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw ConfigError("parameter '" + name + "' has shape " + shape_str(it->second.shape()) +
                        ", expected " + shape_str(shape));
    }
  }
  for (const auto& [name, t] : m.params)
    if (!shapes.count(name)) throw ConfigError("unexpected parameter '" + name + "'");
}

Bound::Bound(Tape& tape, const ParamMap& params, const Filter& trainable) : tape_(&tape) {
  for (const auto& [name, t] : params) {
    const bool train = trainable ? trainable(name) : true;
    vars_.emplace(name, tape.leaf(t, train));
    if (train) trainable_.push_back(name);
  }
}

Var Bound::operator()(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ConfigError("parameter '" + name + "' is not bound");
  return it->second;
}

ParamMap Bound::grads() const {
  ParamMap out;
  for (const auto& name : trainable_) out.emplace(name, tape_->grad(vars_.at(name)));
  return out;
}

}  // namespace tspulse
