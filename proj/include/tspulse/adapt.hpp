#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "tspulse/model.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

/// Adds an identity-initialised C x C channel mixer to every decoder layer.
/// ConfigError when there is no decoder or mixers are already present.
void insert_channel_mixers(Model& m, std::size_t channels);

/// Repeats the channel block `factor` times: channel c + k*C copies c.
Series expand_channels(const Series& x, std::size_t factor);

inline constexpr double kMaxInterpolation = 20.0;

/// Per-channel linear resampling onto `length` points with both endpoints
/// kept. CapabilityError beyond a 20x stretch or shrink.
Series interpolate_length(const Series& x, std::size_t length);

enum class HeadKind { tslens, avg_pool };
enum class HeadActivation { softmax, sigmoid };

HeadKind parse_head_kind(std::string_view name);
HeadActivation parse_head_activation(std::string_view name);

/// Classification head on top of the decoder output [B, C, K, D].
///
/// tslens: every token is projected D -> d_proj, the result is flattened
/// over (C, K, d_proj) and mapped linearly to the class logits.
/// avg_pool: mean over channels and tokens, then D -> classes.
struct ClassifierHead {
  HeadKind kind = HeadKind::tslens;
  std::size_t channels = 1;
  std::size_t d_proj = 1;
  std::size_t classes = 2;
  ParamMap params;

  std::size_t flatten_dim(const ModelConfig& cfg) const;
};

ClassifierHead init_head(const ModelConfig& cfg, HeadKind kind, std::size_t channels,
                         std::size_t d_proj, std::size_t classes, std::uint64_t seed);
/// Logits [B, classes]. ConfigError when `decoder_e` does not fit the head.
Var head_logits(const Bound& hp, const ModelConfig& cfg, const ClassifierHead& head, Var decoder_e);

struct LabeledSet {
  std::vector<Series> series;
  std::vector<std::size_t> labels;

  std::size_t size() const { return series.size(); }
  /// 1 + largest label.
  std::size_t num_classes() const;
};

/// Per-class split: about `fraction` of each class (at least one sample when
/// a class has two or more) goes to the second set.
std::pair<LabeledSet, LabeledSet> stratified_split(const LabeledSet& data, double fraction,
                                                   std::uint64_t seed);

struct FinetuneConfig {
  /// Block-mask ratio applied while training only; nullopt disables it.
  std::optional<double> mask_ratio = 0.3;
  std::size_t channel_expansion = 1;
  std::size_t d_proj = 1;
  HeadActivation activation = HeadActivation::softmax;
  HeadKind head = HeadKind::tslens;
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double val_fraction = 0.1;
  /// Epochs without a validation improvement before stopping.
  std::size_t patience = 5;
  std::uint64_t seed = 0;

  /// ArgumentError for values outside the supported pools.
  void validate() const;
};

struct Classifier {
  Model model;
  ClassifierHead head;
  FinetuneConfig cfg;
  std::size_t input_channels = 0;
};

struct EpochLog {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct FinetuneResult {
  Classifier classifier;
  std::vector<EpochLog> history;
  std::size_t best_epoch = 0;
  double val_accuracy = 0.0;
};

/// Resamples to the model context and applies channel expansion.
Series prepare_input(const Series& x, const ModelConfig& cfg, std::size_t expansion);

/// Trains decoder, channel mixers and head on `data` with the backbone,
/// encoder, RevIN affine and mask token frozen. The parameters with the
/// lowest validation loss are kept.
FinetuneResult finetune_classifier(const LabeledSet& data, const Model& pretrained,
                                   const FinetuneConfig& cfg);

/// Class probabilities [N, classes] in evaluation mode.
Tensor predict_proba(const Classifier& clf, const std::vector<Series>& xs);
std::vector<std::size_t> predict(const Classifier& clf, const std::vector<Series>& xs);
double accuracy(const Classifier& clf, const LabeledSet& data);

}  // namespace tspulse
