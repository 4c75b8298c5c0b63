#include <algorithm>
#include <cmath>

#include "tspulse/anomaly.hpp"
#include "tspulse/error.hpp"

namespace tspulse {

namespace {

constexpr std::size_t kChunk = 256;

// alpha of the window starting at s: mean over its last w steps and all
// channels. y points at the [C, S] reconstruction of that window.
double window_alpha(const Series& x, std::size_t s, const double* y, std::size_t S, std::size_t w) {
  const std::size_t C = x.channels;
  double acc = 0.0;
  for (std::size_t i = S - w; i < S; ++i)
    for (std::size_t c = 0; c < C; ++c) {
      const double d = x.at(s + i, c) - y[c * S + i];
      acc += d * d;
    }
  return acc / double(w * C);
}

// Scores known at [first, first + n) spread to the whole series.
std::vector<double> fill_edges(std::vector<double> alpha, std::size_t first, std::size_t n) {
  for (std::size_t t = 0; t < first; ++t) alpha[t] = alpha[first];
  for (std::size_t t = first + n; t < alpha.size(); ++t) alpha[t] = alpha[first + n - 1];
  return alpha;
}

void check_input(const Series& x, std::size_t S, std::size_t min_len) {
  if (x.channels == 0) throw ArgumentError("series has no channels");
  if (x.length < min_len) {
    throw ArgumentError("series of length " + std::to_string(x.length) + " is shorter than the " +
                        std::to_string(min_len) + " steps needed for context " + std::to_string(S));
  }
  for (double v : x.values)
    if (!std::isfinite(v)) throw ArgumentError("anomaly scoring needs finite values");
}

void check_window(std::size_t w, std::size_t S) {
  if (w == 0 || w >= S) {
    throw ArgumentError("aggregation window " + std::to_string(w) + " must satisfy 0 < w < S = " + std::to_string(S));
  }
}

Tensor gather_windows(const Series& x, std::size_t S, std::size_t start, std::size_t count) {
  const std::size_t C = x.channels;
  Tensor t(Shape{count, C, S});
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < S; ++i) t[(b * C + c) * S + i] = x.at(start + b + i, c);
  return t;
}

}  // namespace

const char* head_name(ScoreHead h) {
  switch (h) {
    case ScoreHead::time: return "time";
    case ScoreHead::fft: return "fft";
    case ScoreHead::pred: return "pred";
    case ScoreHead::ensemble: return "ensemble";
  }
  return "unknown";
}

ScoreHead parse_score_head(std::string_view name) {
  for (ScoreHead h : kScoreHeads)
    if (name == head_name(h)) return h;
  throw ArgumentError("unknown scoring head '" + std::string(name) + "'");
}

const ScoreSeries& HeadScores::get(ScoreHead h) const {
  switch (h) {
    case ScoreHead::time: return time;
    case ScoreHead::fft: return fft;
    case ScoreHead::pred: return pred;
    case ScoreHead::ensemble: return ensemble;
  }
  throw ArgumentError("unknown scoring head");
}

Reconstruction ModelScorer::reconstruct(const Tensor& windows) const {
  const Shape& s = windows.shape();
  const std::size_t B = s.at(0), C = s.at(1), S = s.at(2);
  Reconstruction r;
  r.y = Tensor(s);
  r.y_alt = Tensor(s);
  r.next = Tensor(Shape{B, C});
  const std::size_t F = model_.cfg.pred_len;
  for (std::size_t start = 0; start < B; start += batch_) {
    const std::size_t n = std::min(batch_, B - start);
    Batch b;
    b.x = Tensor(Shape{n, C, S});
    std::copy(windows.ptr() + start * C * S, windows.ptr() + (start + n) * C * S, b.x.ptr());
    Inference out = infer(model_, b);
    std::copy(out.y.data().begin(), out.y.data().end(), r.y.ptr() + start * C * S);
    std::copy(out.y_alt.data().begin(), out.y_alt.data().end(), r.y_alt.ptr() + start * C * S);
    for (std::size_t i = 0; i < n * C; ++i) r.next[start * C + i] = out.pred[i * F];
  }
  return r;
}

std::vector<double> window_scores(const Series& x, const std::vector<Tensor>& recon, std::size_t S,
                                  std::size_t w) {
  check_window(w, S);
  check_input(x, S, S);
  const std::size_t n = x.length - S + 1;
  if (recon.size() != n) {
    throw ArgumentError("expected " + std::to_string(n) + " window reconstructions, got " +
                        std::to_string(recon.size()));
  }
  std::vector<double> alpha(x.length, 0.0);
  const std::size_t offset = S - w + w / 2;
  for (std::size_t s = 0; s < n; ++s) {
    if (recon[s].size() != x.channels * S) throw DimensionError("window reconstruction has the wrong size");
    alpha[s + offset] = window_alpha(x, s, recon[s].ptr(), S, w);
  }
  return fill_edges(std::move(alpha), offset, n);
}

HeadScores score_all(const Series& x, const Scorer& scorer, std::size_t w) {
  const std::size_t S = scorer.context();
  check_window(w, S);
  check_input(x, S, S + 1);
  const std::size_t C = x.channels, n = x.length - S + 1, offset = S - w + w / 2;
  std::vector<double> a_time(x.length), a_fft(x.length), a_pred(x.length);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    Reconstruction r = scorer.reconstruct(gather_windows(x, S, start, count));
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t s = start + b;
      a_time[s + offset] = window_alpha(x, s, r.y.ptr() + b * C * S, S, w);
      a_fft[s + offset] = window_alpha(x, s, r.y_alt.ptr() + b * C * S, S, w);
      if (s + S < x.length) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double d = x.at(s + S, c) - r.next[b * C + c];
          acc += d * d;
        }
        a_pred[s + S] = acc / double(C);
      }
    }
  }
  HeadScores h;
  h.time = {ScoreHead::time, w, fill_edges(std::move(a_time), offset, n)};
  h.fft = {ScoreHead::fft, w, fill_edges(std::move(a_fft), offset, n)};
  h.pred = {ScoreHead::pred, 1, fill_edges(std::move(a_pred), S, x.length - S)};
  h.ensemble = score_ensemble({h.time, h.fft, h.pred});
  return h;
}

ScoreSeries score_reconstruction(const Series& x, const Scorer& scorer, ScoreHead head, std::size_t w) {
  if (head != ScoreHead::time && head != ScoreHead::fft) {
    throw ArgumentError("reconstruction scoring uses the time or fft head");
  }
  const std::size_t S = scorer.context();
  check_window(w, S);
  check_input(x, S, S);
  const std::size_t C = x.channels, n = x.length - S + 1, offset = S - w + w / 2;
  std::vector<double> alpha(x.length);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    Reconstruction r = scorer.reconstruct(gather_windows(x, S, start, count));
    const Tensor& y = head == ScoreHead::time ? r.y : r.y_alt;
    for (std::size_t b = 0; b < count; ++b)
      alpha[start + b + offset] = window_alpha(x, start + b, y.ptr() + b * C * S, S, w);
  }
  return {head, w, fill_edges(std::move(alpha), offset, n)};
}

ScoreSeries score_prediction(const Series& x, const Scorer& scorer) {
  const std::size_t S = scorer.context();
  check_input(x, S, S + 1);
  const std::size_t C = x.channels, n = x.length - S;
  std::vector<double> alpha(x.length);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t count = std::min(kChunk, n - start);
    Reconstruction r = scorer.reconstruct(gather_windows(x, S, start, count));
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t t = start + b + S;
      double acc = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = x.at(t, c) - r.next[b * C + c];
        acc += d * d;
      }
      alpha[t] = acc / double(C);
    }
  }
  return {ScoreHead::pred, 1, fill_edges(std::move(alpha), S, n)};
}

std::vector<double> minmax_normalize(const std::vector<double>& v) {
  if (v.empty()) return v;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo, span = *hi - *lo;
  std::vector<double> out(v.size(), 0.0);
  if (span > 0.0)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - a) / span;
  return out;
}

ScoreSeries score_ensemble(const std::vector<ScoreSeries>& scores) {
  if (scores.empty()) throw ArgumentError("ensemble of zero scores");
  const std::size_t n = scores[0].alpha.size();
  ScoreSeries out{ScoreHead::ensemble, scores[0].window, std::vector<double>(n, 0.0)};
  for (const ScoreSeries& s : scores) {
    if (s.alpha.size() != n) {
      throw ArgumentError("ensemble inputs differ in length: " + std::to_string(n) + " vs " +
                          std::to_string(s.alpha.size()));
    }
    const std::vector<double> z = minmax_normalize(s.alpha);
    for (std::size_t i = 0; i < n; ++i) out.alpha[i] = std::max(out.alpha[i], z[i]);
  }
  return out;
}

}  // namespace tspulse
