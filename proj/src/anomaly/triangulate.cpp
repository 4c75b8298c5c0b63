#include <algorithm>
#include <numeric>

#include "tspulse/anomaly.hpp"
#include "tspulse/error.hpp"

namespace tspulse {

double auc_pr(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw ArgumentError("auc_pr: " + std::to_string(scores.size()) + " scores vs " +
                        std::to_string(labels.size()) + " labels");
  }
  const std::size_t positives = std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; });
  if (positives == 0) throw ArgumentError("auc_pr needs at least one positive label");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    // All points tied at this score cross the threshold together.
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] != 0;
      ++j;
    }
    seen = j;
    const double recall = double(tp) / double(positives);
    ap += (recall - prev_recall) * double(tp) / double(seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

HeadChoice triangulate_scores(const std::vector<HeadScores>& scores,
                              const std::vector<std::vector<std::uint8_t>>& labels) {
  if (scores.size() != labels.size()) throw ArgumentError("one label vector per scored series is required");
  HeadChoice choice;
  std::size_t used = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::none_of(labels[i].begin(), labels[i].end(), [](auto l) { return l != 0; })) continue;
    for (std::size_t h = 0; h < kScoreHeads.size(); ++h)
      choice.metric[h] += auc_pr(scores[i].get(kScoreHeads[h]).alpha, labels[i]);
    ++used;
  }
  if (used == 0) throw ArgumentError("tuning set has no labeled anomalies");
  std::size_t best = 0;
  for (std::size_t h = 0; h < kScoreHeads.size(); ++h) {
    choice.metric[h] /= double(used);
    if (choice.metric[h] > choice.metric[best]) best = h;
  }
  choice.selected = kScoreHeads[best];
  return choice;
}

HeadChoice triangulate(const std::vector<LabeledSeries>& tuning, const Scorer& scorer, std::size_t w) {
  std::vector<HeadScores> scores;
  std::vector<std::vector<std::uint8_t>> labels;
  for (const LabeledSeries& s : tuning) {
    if (s.labels.size() != s.x.length) throw ArgumentError("labels must cover every step of the series");
    scores.push_back(score_all(s.x, scorer, w));
    labels.push_back(s.labels);
  }
  return triangulate_scores(scores, labels);
}

std::size_t select_window(const std::vector<LabeledSeries>& tuning, const Scorer& scorer,
                          const std::vector<std::size_t>& candidates) {
  if (candidates.empty()) throw ArgumentError("select_window needs at least one candidate");
  for (std::size_t w : candidates)
    if (w == 0 || w >= scorer.context()) {
      throw ArgumentError("window candidate " + std::to_string(w) + " must lie in (0, " +
                          std::to_string(scorer.context()) + ")");
    }
  if (candidates.size() == 1) return candidates[0];
  if (tuning.empty()) {
    return std::find(candidates.begin(), candidates.end(), kDefaultWindow) != candidates.end() ? kDefaultWindow
                                                                                              : candidates[0];
  }
  std::size_t best_w = candidates[0];
  double best = -1.0;
  for (std::size_t w : candidates) {
    const HeadChoice c = triangulate(tuning, scorer, w);
    const double m = std::max(c.metric[0], c.metric[1]);
    if (m > best) {
      best = m;
      best_w = w;
    }
  }
  return best_w;
}

}  // namespace tspulse
