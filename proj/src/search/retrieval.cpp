#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/search.hpp"

namespace tspulse {

AugmentSpec AugmentSpec::strength(int s) {
  if (s < 0) throw ArgumentError("augmentation strength must be non-negative");
  const double p = s / 100.0;
  return {p, p, std::min(s, 10) / 100.0};
}

void AugmentSpec::validate() const {
  if (!(shift_pct >= 0.0 && shift_pct <= 1.0)) throw ArgumentError("shift fraction must lie in [0, 1]");
  if (!(scale_pct >= 0.0 && scale_pct < 1.0)) throw ArgumentError("scale fraction must lie in [0, 1)");
  if (!(noise_pct >= 0.0)) throw ArgumentError("noise fraction must be non-negative");
}

Series augment_query(const Series& x, const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t L = x.length, C = x.channels;
  Series out = x;
  if (spec.shift_pct > 0.0 && L > 0) {
    const auto lim = static_cast<long long>(std::floor(spec.shift_pct * double(L)));
    const long long shift = std::uniform_int_distribution<long long>(-lim, lim)(rng);
    const long long n = static_cast<long long>(L);
    for (std::size_t t = 0; t < L; ++t) {
      const auto src = static_cast<std::size_t>((((static_cast<long long>(t) - shift) % n) + n) % n);
      for (std::size_t c = 0; c < C; ++c) {
        out.at(t, c) = x.at(src, c);
        if (!x.observed.empty()) out.observed[t * C + c] = x.observed[src * C + c];
      }
    }
  }
  if (spec.scale_pct > 0.0) {
    const double a = uniform(rng, 1.0 - spec.scale_pct, 1.0 + spec.scale_pct);
    for (double& v : out.values) v *= a;
  }
  if (spec.noise_pct > 0.0 && L > 1) {
    for (std::size_t c = 0; c < C; ++c) {
      double mean = 0.0, n = 0.0;
      for (std::size_t t = 0; t < L; ++t)
        if (out.is_observed(t, c)) {
          mean += out.at(t, c);
          n += 1.0;
        }
      if (n < 1.0) continue;
      mean /= n;
      double var = 0.0;
      for (std::size_t t = 0; t < L; ++t)
        if (out.is_observed(t, c)) var += (out.at(t, c) - mean) * (out.at(t, c) - mean);
      const double sigma = spec.noise_pct * std::sqrt(var / n);
      for (std::size_t t = 0; t < L; ++t) out.at(t, c) += sigma * normal(rng);
    }
  }
  return out;
}

RetrievalMetrics retrieval_metrics(const std::vector<std::uint8_t>& relevant, std::size_t k) {
  if (k == 0) throw ArgumentError("k must be at least 1");
  if (relevant.empty()) throw ArgumentError("empty ranking");
  const std::size_t n = std::min(k, relevant.size());
  RetrievalMetrics m;
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!relevant[i]) continue;
    ++hits;
    if (hits == 1) m.mrr = 1.0 / double(i + 1);
    m.ap += double(hits) / double(i + 1);
    dcg += 1.0 / std::log2(double(i + 2));
  }
  m.prec = double(hits) / double(k);
  m.ap /= double(k);
  double idcg = 0.0;
  for (std::size_t i = 0; i < hits; ++i) idcg += 1.0 / std::log2(double(i + 2));
  m.ndcg = hits ? dcg / idcg : 0.0;
  return m;
}

const char* task_name(MatchTask t) { return t == MatchTask::family ? "family" : "fine"; }

std::vector<BenchmarkRow> run_benchmark(const std::vector<BenchmarkItem>& items, const Embedder& embed,
                                        const std::vector<int>& strengths, std::uint64_t seed, std::size_t k) {
  if (items.empty()) throw ArgumentError("benchmark needs at least one item");
  std::vector<Series> xs;
  xs.reserve(items.size());
  for (const BenchmarkItem& it : items) xs.push_back(it.x);
  const auto vecs = embed(xs);
  FlatIndex index;
  for (std::size_t i = 0; i < items.size(); ++i) index.add(items[i].id, items[i].family, items[i].fine, vecs[i]);

  std::vector<BenchmarkRow> rows;
  for (int s : strengths) {
    const AugmentSpec spec = AugmentSpec::strength(s);
    std::vector<Series> queries;
    queries.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      Rng rng(derive_seed(derive_seed(seed, "query"), static_cast<std::uint64_t>(s) * 1000003ULL + i));
      queries.push_back(augment_query(items[i].x, spec, rng));
    }
    const auto qv = embed(queries);
    BenchmarkRow fam{MatchTask::family, s, {}, 0.0}, fine{MatchTask::fine, s, {}, 0.0};
    for (std::size_t i = 0; i < items.size(); ++i) {
      const QueryResult r = index.query(qv[i], k);
      std::vector<std::uint8_t> rf, rn;
      for (const Hit& h : r.hits) {
        rf.push_back(index.record(h.index).family == items[i].family);
        rn.push_back(index.record(h.index).fine == items[i].fine);
      }
      const double self = index.distance(qv[i], i) <= r.hits.front().distance ? 1.0 : 0.0;
      for (auto [row, rel] : {std::pair{&fam, &rf}, std::pair{&fine, &rn}}) {
        const RetrievalMetrics m = retrieval_metrics(*rel, k);
        row->metrics.prec += m.prec;
        row->metrics.mrr += m.mrr;
        row->metrics.ap += m.ap;
        row->metrics.ndcg += m.ndcg;
        row->self_top1 += self;
      }
    }
    for (BenchmarkRow* row : {&fam, &fine}) {
      const double n = double(items.size());
      row->metrics.prec /= n;
      row->metrics.mrr /= n;
      row->metrics.ap /= n;
      row->metrics.ndcg /= n;
      row->self_top1 /= n;
      rows.push_back(*row);
    }
  }
  return rows;
}

}  // namespace tspulse
