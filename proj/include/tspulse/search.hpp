#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tspulse/model.hpp"
#include "tspulse/rng.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

enum class EmbeddingView { time, fft, reg };

const char* view_name(EmbeddingView v);
EmbeddingView parse_view(std::string_view name);

/// Flattened embeddings of one view, averaged over channels. Series must
/// have the model context length; unobserved points are masked.
/// time/fft: N*D values, reg: R*D values.
std::vector<std::vector<double>> embed_view(const Model& m, const std::vector<Series>& xs, EmbeddingView view,
                                            std::size_t batch_size = 64);
std::vector<double> embed_register(const Series& x, const Model& m);

using Embedder = std::function<std::vector<std::vector<double>>(const std::vector<Series>&)>;
Embedder register_embedder(const Model& m);

struct EmbeddingRecord {
  std::string id;
  std::string family;
  std::string fine;
  std::vector<float> vector;
};

struct Hit {
  std::size_t index = 0;
  double distance = 0.0;
};

struct QueryResult {
  std::vector<Hit> hits;
  /// k exceeded the index size; every record was returned.
  bool truncated = false;
};

/// Exact Euclidean search over 32-bit vectors. Equal distances keep
/// insertion order.
class FlatIndex {
 public:
  FlatIndex() = default;
  explicit FlatIndex(std::size_t dim) : dim_(dim) {}

  /// DimensionError on a dimension mismatch, ArgumentError on non-finite values.
  void add(EmbeddingRecord rec);
  void add(std::string id, std::string family, std::string fine, const std::vector<double>& v);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  const EmbeddingRecord& record(std::size_t i) const { return records_.at(i); }

  /// The query is rounded to 32-bit floats first. ArgumentError for k = 0 or
  /// an empty index.
  QueryResult query(const std::vector<double>& q, std::size_t k) const;
  /// Distance from `q` to record i, computed exactly as in query().
  double distance(const std::vector<double>& q, std::size_t i) const;

  /// "TSPI", version, dim, count, then id, family, fine label and the vector
  /// per record; little-endian.
  void save(const std::string& path) const;
  /// FormatError or IoError; no index is returned unless the file parsed.
  static FlatIndex load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<EmbeddingRecord> records_;
};

struct AugmentSpec {
  double shift_pct = 0.2;
  double scale_pct = 0.2;
  double noise_pct = 0.1;

  /// s% shift and scale, min(s, 10)% noise.
  static AugmentSpec strength(int s);
  void validate() const;
};

/// Circular shift by a uniform integer in [-floor(shift*L), floor(shift*L)],
/// scaling by U[1-scale, 1+scale], then Gaussian noise with sigma equal to
/// noise * (per-channel std of the scaled series). Zero fields draw nothing.
Series augment_query(const Series& x, const AugmentSpec& spec, Rng& rng);

struct RetrievalMetrics {
  double prec = 0.0;
  double mrr = 0.0;
  double ap = 0.0;
  double ndcg = 0.0;
};

/// Binary relevance of a ranked list, cut at k. AP sums precision at every
/// relevant rank and divides by k. NDCG normalises by the ideal ordering of
/// the same list. ArgumentError for an empty list or k = 0.
RetrievalMetrics retrieval_metrics(const std::vector<std::uint8_t>& relevant, std::size_t k = 3);

enum class MatchTask { family, fine };
const char* task_name(MatchTask t);

struct BenchmarkItem {
  Series x;
  std::string id;
  std::string family;
  std::string fine;
};

struct BenchmarkRow {
  MatchTask task = MatchTask::family;
  int strength = 0;
  RetrievalMetrics metrics;
  /// Fraction of queries whose own source record is at the smallest
  /// distance. Records with identical embeddings tie with it.
  double self_top1 = 0.0;
};

/// Indexes every item, then for each strength turns every item into a query
/// and scores the top-k against both label sets.
std::vector<BenchmarkRow> run_benchmark(const std::vector<BenchmarkItem>& items, const Embedder& embed,
                                        const std::vector<int>& strengths, std::uint64_t seed,
                                        std::size_t k = 3);

}  // namespace tspulse
