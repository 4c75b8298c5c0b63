#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tspulse/model.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

enum class ScoreHead { time, fft, pred, ensemble };

inline constexpr std::array<ScoreHead, 4> kScoreHeads = {ScoreHead::time, ScoreHead::fft, ScoreHead::pred,
                                                         ScoreHead::ensemble};
inline constexpr std::size_t kDefaultWindow = 96;
inline constexpr std::array<std::size_t, 3> kWindowCandidates = {64, 96, 128};

const char* head_name(ScoreHead h);
ScoreHead parse_score_head(std::string_view name);

/// Reconstructions of a batch of context windows [B, C, S].
struct Reconstruction {
  Tensor y;      // [B, C, S] time head
  Tensor y_alt;  // [B, C, S] time signal rebuilt from the fft head
  Tensor next;   // [B, C] first forecast step
};

/// Anything that reconstructs context windows. Lets the scoring code be
/// tested without a trained model.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t context() const = 0;
  virtual Reconstruction reconstruct(const Tensor& windows) const = 0;
};

/// Scorer backed by a model in evaluation mode, unmasked input.
class ModelScorer : public Scorer {
 public:
  explicit ModelScorer(const Model& m, std::size_t batch_size = 64) : model_(m), batch_(batch_size) {}
  std::size_t context() const override { return model_.cfg.context; }
  Reconstruction reconstruct(const Tensor& windows) const override;

 private:
  const Model& model_;
  std::size_t batch_;
};

struct ScoreSeries {
  ScoreHead head = ScoreHead::time;
  std::size_t window = 0;
  std::vector<double> alpha;
};

/// Scores of all four mechanisms on one series.
struct HeadScores {
  ScoreSeries time, fft, pred, ensemble;
  const ScoreSeries& get(ScoreHead h) const;
};

/// Mean squared error over the last `w` points and all channels of every
/// stride-1 context window, assigned to step s + S - w + w/2 for the window
/// starting at s.
/// `recon[s]` is the reconstruction of the window starting at s.
/// Points outside the covered range take the nearest score.
std::vector<double> window_scores(const Series& x, const std::vector<Tensor>& recon, std::size_t S,
                                  std::size_t w);

/// Time or fft reconstruction score. ArgumentError if w >= S or the series
/// is shorter than S.
ScoreSeries score_reconstruction(const Series& x, const Scorer& scorer, ScoreHead head, std::size_t w);
/// One-step forecast error: alpha_t compares x[t] with the first forecast
/// step of the window ending at t-1. The first S points take alpha_S.
ScoreSeries score_prediction(const Series& x, const Scorer& scorer);
/// Min-max normalise each input over its length, then take the pointwise
/// maximum. A constant input normalises to zeros.
ScoreSeries score_ensemble(const std::vector<ScoreSeries>& scores);
/// All four mechanisms with one pass over the windows.
HeadScores score_all(const Series& x, const Scorer& scorer, std::size_t w);

std::vector<double> minmax_normalize(const std::vector<double>& v);

/// Average precision of the precision-recall step curve, thresholds at every
/// distinct score. ArgumentError without positive labels.
double auc_pr(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

struct LabeledSeries {
  Series x;
  std::vector<std::uint8_t> labels;  // 1 = anomalous step
};

struct HeadChoice {
  ScoreHead selected = ScoreHead::ensemble;
  std::array<double, 4> metric{};  // mean AUC-PR, indexed like kScoreHeads
};

/// Argmax of the mean AUC-PR over series with at least one anomaly. Ties go
/// to the earlier head in time, fft, pred, ensemble order.
HeadChoice triangulate_scores(const std::vector<HeadScores>& scores,
                              const std::vector<std::vector<std::uint8_t>>& labels);
HeadChoice triangulate(const std::vector<LabeledSeries>& tuning, const Scorer& scorer, std::size_t w);

/// Aggregation window with the best mean AUC-PR of the time or fft score.
/// Ties keep the earlier candidate; one candidate is returned as is; an
/// empty tuning set yields kDefaultWindow when it is a candidate.
std::size_t select_window(const std::vector<LabeledSeries>& tuning, const Scorer& scorer,
                          const std::vector<std::size_t>& candidates = {kWindowCandidates.begin(),
                                                                        kWindowCandidates.end()});

}  // namespace tspulse
