#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tspulse/model.hpp"

namespace tspulse {

struct LossWeights {
  double time1 = 1.0;
  double time2 = 1.0;
  double fft = 1.0;
  double sign = 1.0;
  double pred = 1.0;

  /// ArgumentError when a weight is negative or all are zero.
  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class Task { anomaly, imputation, classification, search, unified };

Task parse_task(std::string_view name);
const char* task_name(Task t);

struct TaskPreset {
  LossWeights weights;
  MaskKind mask = MaskKind::hybrid;
  std::size_t patch_len = 8;
};

TaskPreset task_preset(Task t);

struct LossReport {
  double time1 = 0.0;
  double time2 = 0.0;
  double fft = 0.0;
  double sign = 0.0;
  double pred = 0.0;
  double total = 0.0;
  /// No masked points: time1/time2 were defined as 0.
  bool empty_mask = false;
};

struct LossTerms {
  Var time1, time2, fft, sign, pred, total;
  bool empty_mask = false;
  LossReport report() const;
};

/// The five reconstruction losses and their weighted sum. Zero-weight terms
/// are left out of `total`.
LossTerms compute_losses(const ForwardResult& r, const Batch& batch, const LossWeights& w);

struct PretrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  LossWeights weights;
  MaskKind mask = MaskKind::hybrid;
  /// Per-sample mask ratio drawn uniformly from [ratio_lo, ratio_hi].
  double ratio_lo = 0.15;
  double ratio_hi = 0.55;
  std::function<void(std::size_t epoch, const LossReport&)> on_epoch;
};

/// Windows are univariate or multivariate series of length >= S; when a
/// window holds at least S + F steps the F steps after the context become
/// the prediction target. Returns the mean loss of each epoch.
std::vector<LossReport> pretrain(Model& model, const std::vector<Series>& windows,
                                 const PretrainOptions& opt);

/// Mean losses in evaluation mode with masks drawn from `opt.seed`.
LossReport evaluate_losses(const Model& model, const std::vector<Series>& windows,
                           const PretrainOptions& opt);

/// Builds a batch from windows[idx...]: context, future and no mask.
Batch make_batch(const ModelConfig& cfg, const std::vector<Series>& windows,
                 const std::vector<std::size_t>& idx);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: "TSPL", version, config block, tensor records with
/// little-endian 32-bit floats.
void save_checkpoint(const Model& model, const std::string& path);
/// FormatError on bad magic, version or layout; IoError when truncated or
/// unreadable. Nothing is returned unless the whole file parsed.
Model load_checkpoint(const std::string& path);
/// Rounds every parameter to the nearest 32-bit float.
void quantize_f32(ParamMap& params);

}  // namespace tspulse
