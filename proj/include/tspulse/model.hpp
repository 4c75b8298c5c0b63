#pragma once

#include <functional>
#include <map>
#include <string>

#include "json.hpp"
#include "tspulse/autodiff.hpp"
#include "tspulse/optim.hpp"
#include "tspulse/preprocess.hpp"

namespace tspulse {

struct ModelConfig {
  std::size_t context = 512;     // S
  std::size_t patch_len = 8;     // pl
  std::size_t d_model = 24;      // D
  std::size_t registers = 8;     // R
  std::size_t pred_len = 8;      // F
  std::size_t backbone_layers = 8;
  std::size_t decoder_layers = 2;
  std::size_t expansion = 2;
  /// Per-token width before the flattened reconstruction heads; 0 means D/2,
  /// D means no reduction.
  std::size_t head_dim = 0;
  double dropout = 0.2;
  double head_dropout = 0.2;
  std::string gate_activation = "softmax";

  std::size_t patches() const { return context / patch_len; }
  std::size_t tokens() const { return 2 * patches() + registers; }
  std::size_t head_width() const { return head_dim == 0 ? d_model / 2 : head_dim; }
  std::size_t semantic_dim() const { return registers * d_model; }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameters plus the configuration that shaped them. Channel mixers are
/// present once `mixer_channels` > 0.
struct Model {
  ModelConfig cfg;
  ParamMap params;
  std::size_t mixer_channels = 0;
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);
std::size_t parameter_count(const ParamMap& params);
/// Expected shape of every parameter for `cfg` (and C channel mixers when
/// mixer_channels > 0).
std::map<std::string, Shape> expected_shapes(const ModelConfig& cfg, std::size_t mixer_channels);
/// ConfigError when names or shapes differ from expected_shapes().
void check_params(const Model& m);

/// Parameters bound to a tape. Names selected by `trainable` become leaves
/// that require gradients; the rest are constants.
class Bound {
 public:
  using Filter = std::function<bool(const std::string&)>;
  Bound(Tape& tape, const ParamMap& params, const Filter& trainable = {});

  Var operator()(const std::string& name) const;
  bool has(const std::string& name) const { return vars_.count(name) != 0; }
  Tape& tape() const { return *tape_; }
  /// Gradients of the trainable parameters after tape.backward().
  ParamMap grads() const;

 private:
  Tape* tape_;
  std::map<std::string, Var> vars_;
  std::vector<std::string> trainable_;
};

/// Model input, [B, C, S]. `mask` is a 0/1 tensor of the same shape or empty
/// (nothing hidden). `future` holds the next F points, [B, C, F], or is empty.
struct Batch {
  Tensor x;
  Tensor mask;
  Tensor future;
};

struct EmbeddingViews {
  Var time;  // [B, C, N, D]
  Var fft;   // [B, C, N, D]
  Var reg;   // [B, C, R, D]
};

struct HeadOutputs {
  Var y;            // [B, C, S] time reconstruction
  Var y_fft;        // [B, C, S] packed spectrum reconstruction
  Var y_alt;        // [B, C, S] time reconstruction through the inverse FFT
  Var sign_logits;  // [B, C, S/2]
  Var sign;         // [B, C, S/2]
  Var pred;         // [B, C, F]
};

struct Targets {
  Var packed;     // [B, C, S]
  Var signature;  // [B, C, S/2]
};

struct ForwardResult {
  Var x_hat;
  Var x_m;
  pre::RevinStats revin;
  pre::PackedSpectrum features;
  Var input_e;
  Var backbone_e;
  Var decoder_e;
  EmbeddingViews views;
  HeadOutputs out;
  Targets targets;
};

/// Token sequence [B, C, K, D]: time patches, fft patches, registers.
Var encode(const Bound& p, const ModelConfig& cfg, Var x_m, Var xf_m);
/// One mixer layer under `prefix` (e.g. "backbone.0"). Channel mixing runs
/// when `prefix.chan.w` is bound; `require_channel_mixing` turns its absence
/// into a ConfigError.
Var mixer_block(const Bound& p, const ModelConfig& cfg, Var x, const std::string& prefix,
                bool require_channel_mixing = false);
Var backbone_forward(const Bound& p, const ModelConfig& cfg, Var input_e);
Var decoder_forward(const Bound& p, const ModelConfig& cfg, Var backbone_e);
EmbeddingViews split_views(const ModelConfig& cfg, Var decoder_e);
HeadOutputs heads_forward(const Bound& p, const ModelConfig& cfg, const EmbeddingViews& views,
                          const pre::RevinStats& revin, const pre::PackedSpectrum& features);

/// Full pass: masking, RevIN, features, encoder, backbone, decoder, heads and
/// reconstruction targets.
ForwardResult forward(const Bound& p, const ModelConfig& cfg, const Batch& batch);

/// Masking, RevIN, features, encoder, backbone and decoder without the
/// heads: the decoder output [B, C, K, D].
Var decoder_embedding(const Bound& p, const ModelConfig& cfg, const Batch& batch);

/// Detached evaluation-mode outputs.
struct Inference {
  Tensor y;
  Tensor y_fft;
  Tensor y_alt;
  Tensor sign;
  Tensor pred;
  Tensor time_e;
  Tensor fft_e;
  Tensor reg_e;
};

/// Evaluation-mode forward (no dropout, no gradients).
Inference infer(const Model& m, const Batch& batch);

}  // namespace tspulse
