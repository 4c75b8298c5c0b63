#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "model_fixtures.hpp"
#include "tspulse/error.hpp"
#include "tspulse/search.hpp"

using namespace tspulse;

namespace {

// Exhaustive reference for the metrics, written from the definitions.
RetrievalMetrics metric_oracle(const std::vector<int>& rel, std::size_t k) {
  RetrievalMetrics m;
  double hits = 0;
  for (std::size_t i = 0; i < k && i < rel.size(); ++i) hits += rel[i];
  m.prec = hits / double(k);
  for (std::size_t i = 0; i < k && i < rel.size(); ++i)
    if (rel[i]) {
      m.mrr = 1.0 / double(i + 1);
      break;
    }
  for (std::size_t i = 0; i < k && i < rel.size(); ++i) {
    if (!rel[i]) continue;
    double before = 0;
    for (std::size_t j = 0; j <= i; ++j) before += rel[j];
    m.ap += before / double(i + 1);
  }
  m.ap /= double(k);
  double dcg = 0, idcg = 0;
  for (std::size_t i = 0; i < k && i < rel.size(); ++i) dcg += rel[i] / std::log2(double(i) + 2.0);
  for (std::size_t i = 0; i < std::size_t(hits); ++i) idcg += 1.0 / std::log2(double(i) + 2.0);
  m.ndcg = idcg > 0 ? dcg / idcg : 0.0;
  return m;
}

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

Series sine(std::size_t L, double f, double phase = 0.0) {
  Series s(L, 1);
  for (std::size_t t = 0; t < L; ++t) s.at(t, 0) = std::sin(2.0 * M_PI * f * double(t) / double(L) + phase);
  return s;
}

}  // namespace

TEST(Metrics, HandValues) {
  auto m = retrieval_metrics({1, 1, 1});
  EXPECT_EQ(m.prec, 1.0);
  EXPECT_EQ(m.mrr, 1.0);
  EXPECT_EQ(m.ap, 1.0);
  EXPECT_EQ(m.ndcg, 1.0);
  m = retrieval_metrics({0, 1, 0});
  EXPECT_EQ(m.mrr, 0.5);
  m = retrieval_metrics({0, 1, 1});
  EXPECT_NEAR(m.ap, (0.5 + 2.0 / 3.0) / 3.0, 1e-15);
  EXPECT_NEAR(m.ap, 0.3889, 5e-5);
  EXPECT_NEAR(m.ndcg, (1.0 / std::log2(3.0) + 0.5) / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
  m = retrieval_metrics({0, 0, 0});
  EXPECT_EQ(m.prec + m.mrr + m.ap + m.ndcg, 0.0);
  EXPECT_THROW(retrieval_metrics({}), ArgumentError);
  EXPECT_THROW(retrieval_metrics({1}, 0), ArgumentError);
}

TEST(Metrics, MatchExhaustiveOracleOnAllPatterns) {
  for (std::size_t k : {1u, 3u, 5u})
    for (unsigned bits = 0; bits < (1u << k); ++bits) {
      std::vector<int> rel(k);
      std::vector<std::uint8_t> r8(k);
      for (std::size_t i = 0; i < k; ++i) rel[i] = r8[i] = (bits >> i) & 1u;
      const auto a = retrieval_metrics(r8, k), b = metric_oracle(rel, k);
      EXPECT_NEAR(a.prec, b.prec, 1e-15);
      EXPECT_NEAR(a.mrr, b.mrr, 1e-15);
      EXPECT_NEAR(a.ap, b.ap, 1e-15);
      EXPECT_NEAR(a.ndcg, b.ndcg, 1e-15);
      for (double v : {a.prec, a.mrr, a.ap, a.ndcg}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
}

TEST(Metrics, ShortListCountsMissingAsIrrelevant) {
  const auto m = retrieval_metrics({1}, 3);
  EXPECT_NEAR(m.prec, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.mrr, 1.0);
}

TEST(FlatIndexTest, HandInstance2D) {
  FlatIndex idx;
  idx.add("a", "f", "f", {0.0, 0.0});
  idx.add("b", "f", "f", {3.0, 4.0});
  idx.add("c", "f", "f", {1.0, 1.0});
  const QueryResult r = idx.query({0.9, 1.2}, 3);
  ASSERT_EQ(r.hits.size(), 3u);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.hits[0].index, 2u);
  EXPECT_EQ(r.hits[1].index, 0u);
  EXPECT_EQ(r.hits[2].index, 1u);
  const double dx = double(0.9f) - 1.0, dy = double(1.2f) - 1.0;
  EXPECT_NEAR(r.hits[0].distance, std::sqrt(dx * dx + dy * dy), 1e-15);
}

TEST(FlatIndexTest, EqualsExhaustiveScan) {
  Rng rng(3);
  FlatIndex idx;
  std::vector<std::vector<float>> stored;
  for (int i = 0; i < 300; ++i) {
    std::vector<double> v(16);
    // Coarse grid values so that exact distance ties occur.
    for (double& x : v) x = std::round(uniform(rng, -2.0, 2.0));
    idx.add(std::to_string(i), "", "", v);
    stored.emplace_back(v.begin(), v.end());
  }
  for (int q = 0; q < 60; ++q) {
    std::vector<double> qv(16);
    for (double& x : qv) x = std::round(uniform(rng, -2.0, 2.0));
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < stored.size(); ++i) {
      double d = 0;
      for (std::size_t j = 0; j < 16; ++j) d += (qv[j] - stored[i][j]) * (qv[j] - stored[i][j]);
      all.emplace_back(d, i);
    }
    std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
    const QueryResult r = idx.query(qv, 10);
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_EQ(r.hits[j].index, all[j].second);
      EXPECT_EQ(r.hits[j].distance, std::sqrt(all[j].first));
    }
  }
}

TEST(FlatIndexTest, SelfQueryAndLimits) {
  FlatIndex idx;
  idx.add("only", "x", "y", {1.5, -2.0, 0.25});
  const QueryResult r = idx.query({1.5, -2.0, 0.25}, 1);
  ASSERT_EQ(r.hits.size(), 1u);
  EXPECT_EQ(r.hits[0].distance, 0.0);
  const QueryResult all = idx.query({0, 0, 0}, 5);
  EXPECT_TRUE(all.truncated);
  EXPECT_EQ(all.hits.size(), 1u);
  EXPECT_THROW(idx.query({0, 0, 0}, 0), ArgumentError);
  EXPECT_THROW(idx.query({0, 0}, 1), DimensionError);
  EXPECT_THROW(idx.add("bad", "", "", {1.0, 2.0}), DimensionError);
  EXPECT_THROW(idx.add("nan", "", "", {1.0, std::nan(""), 0.0}), ArgumentError);
  EXPECT_THROW(FlatIndex().query({1.0}, 1), ArgumentError);
}

TEST(FlatIndexTest, SaveLoadIsBitwise) {
  Rng rng(8);
  FlatIndex idx;
  for (int i = 0; i < 25; ++i) {
    std::vector<double> v(7);
    for (double& x : v) x = normal(rng) * 1e3;
    idx.add("id" + std::to_string(i), "fam" + std::to_string(i % 3), "fine" + std::to_string(i % 5), v);
  }
  const std::string p = temp_path("tspulse_index.bin");
  idx.save(p);
  const FlatIndex back = FlatIndex::load(p);
  ASSERT_EQ(back.size(), idx.size());
  EXPECT_EQ(back.dim(), idx.dim());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(back.record(i).id, idx.record(i).id);
    EXPECT_EQ(back.record(i).family, idx.record(i).family);
    EXPECT_EQ(back.record(i).fine, idx.record(i).fine);
    EXPECT_EQ(std::memcmp(back.record(i).vector.data(), idx.record(i).vector.data(), 7 * sizeof(float)), 0);
  }
  const std::string p2 = temp_path("tspulse_index2.bin");
  back.save(p2);
  std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
  std::remove(p2.c_str());
  std::remove(p.c_str());
}

TEST(FlatIndexTest, CorruptFilesRejected) {
  FlatIndex idx;
  idx.add("a", "f", "g", {1.0, 2.0});
  idx.add("b", "f", "g", {3.0, 4.0});
  const std::string p = temp_path("tspulse_index_bad.bin");
  idx.save(p);
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  write(bad);
  EXPECT_THROW(FlatIndex::load(p), FormatError);
  bad = bytes;
  bad[4] = 9;
  write(bad);
  EXPECT_THROW(FlatIndex::load(p), FormatError);
  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(FlatIndex::load(p), IoError);
  write(bytes + "x");
  EXPECT_THROW(FlatIndex::load(p), FormatError);
  std::remove(p.c_str());
  EXPECT_THROW(FlatIndex::load(p), IoError);
}

TEST(Augment, ZeroStrengthIsIdentity) {
  const Series x = sine(512, 3.0);
  Rng rng(1);
  const Series y = augment_query(x, AugmentSpec::strength(0), rng);
  EXPECT_EQ(y.values, x.values);
}

TEST(Augment, ShiftIsCircularAndBounded) {
  Series x(512, 1);
  for (std::size_t t = 0; t < 512; ++t) x.at(t, 0) = double(t);
  Rng rng(2);
  long long max_abs = 0;
  for (int i = 0; i < 2000; ++i) {
    const Series y = augment_query(x, AugmentSpec{0.2, 0.0, 0.0}, rng);
    const long long shift = (512 + 0 - static_cast<long long>(y.at(0, 0))) % 512;
    const long long signed_shift = shift > 256 ? shift - 512 : shift;
    for (std::size_t t = 0; t < 512; ++t)
      ASSERT_EQ(y.at(t, 0), double(((static_cast<long long>(t) - signed_shift) % 512 + 512) % 512));
    max_abs = std::max(max_abs, std::abs(signed_shift));
  }
  EXPECT_LE(max_abs, 102);
  EXPECT_GE(max_abs, 95);
}

TEST(Augment, ScaleStaysInRange) {
  const Series x = sine(64, 2.0);
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const Series y = augment_query(x, AugmentSpec{0.0, 0.2, 0.0}, rng);
    const double a = y.at(5, 0) / x.at(5, 0);
    EXPECT_GE(a, 0.8);
    EXPECT_LE(a, 1.2);
    for (std::size_t t = 0; t < 64; ++t) EXPECT_NEAR(y.at(t, 0), a * x.at(t, 0), 1e-12);
  }
}

TEST(Augment, NoiseSigmaMatchesTarget) {
  const Series x = sine(512, 5.0);
  double var = 0.0;
  for (double v : x.values) var += v * v;
  const double target = 0.1 * std::sqrt(var / 512.0);
  Rng rng(5);
  double acc = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < 10000; ++i) {
    const Series y = augment_query(x, AugmentSpec{0.0, 0.0, 0.1}, rng);
    for (std::size_t t = 0; t < 512; t += 37) {
      const double d = y.at(t, 0) - x.at(t, 0);
      acc += d * d;
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(acc / double(n)) / target, 1.0, 0.05);
}

TEST(Augment, StrengthCapsNoise) {
  const AugmentSpec s = AugmentSpec::strength(50);
  EXPECT_EQ(s.shift_pct, 0.5);
  EXPECT_EQ(s.scale_pct, 0.5);
  EXPECT_EQ(s.noise_pct, 0.1);
  EXPECT_THROW(AugmentSpec::strength(-1), ArgumentError);
}

TEST(Embed, RegisterShapeAndChannelAverage) {
  const Model m = init_model(tsptest::toy_config(), 21);
  Series a = sine(64, 2.0), b = sine(64, 5.0, 1.0);
  const auto va = embed_register(a, m), vb = embed_register(b, m);
  EXPECT_EQ(va.size(), m.cfg.registers * m.cfg.d_model);
  EXPECT_EQ(embed_register(a, m), va);
  Series ab(64, 2);
  for (std::size_t t = 0; t < 64; ++t) {
    ab.at(t, 0) = a.at(t, 0);
    ab.at(t, 1) = b.at(t, 0);
  }
  const auto vab = embed_register(ab, m);
  for (std::size_t j = 0; j < va.size(); ++j) EXPECT_NEAR(vab[j], 0.5 * (va[j] + vb[j]), 1e-12);
  EXPECT_THROW(embed_register(sine(32, 1.0), m), DimensionError);
  const auto vt = embed_view(m, {a}, EmbeddingView::time).front();
  EXPECT_EQ(vt.size(), m.cfg.context / m.cfg.patch_len * m.cfg.d_model);
}

TEST(Benchmark, SelfRetrievalAndDegradation) {
  std::vector<BenchmarkItem> items;
  Rng rng(6);
  for (int f = 1; f <= 6; ++f)
    for (int v = 0; v < 3; ++v) {
      Series x = sine(128, f, 0.0);
      for (double& y : x.values) y = y * (1.0 + 0.01 * normal(rng)) + 0.01 * normal(rng);
      items.push_back({x, "s" + std::to_string(f) + "_" + std::to_string(v), f <= 3 ? "low" : "high",
                       "f" + std::to_string(f)});
    }
  // Raw values as the embedding.
  const Embedder raw = [](const std::vector<Series>& xs) {
    std::vector<std::vector<double>> out;
    for (const Series& x : xs) out.push_back(x.values);
    return out;
  };
  const auto rows = run_benchmark(items, raw, {0, 50}, 9);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].strength, 0);
  EXPECT_EQ(rows[0].self_top1, 1.0);
  EXPECT_EQ(rows[1].task, MatchTask::fine);
  EXPECT_LE(rows[2].metrics.prec, rows[0].metrics.prec);
  EXPECT_LE(rows[3].metrics.prec, rows[1].metrics.prec);
  const auto again = run_benchmark(items, raw, {0, 50}, 9);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(again[i].metrics.ap, rows[i].metrics.ap);
}

TEST(Benchmark, IdenticalEmbeddingsTieWithSelf) {
  // Five identical records: only one can be listed first, all count as self hits.
  std::vector<BenchmarkItem> items;
  for (int i = 0; i < 5; ++i) items.push_back({Series(16, 1), "z" + std::to_string(i), "zero", "zero"});
  items.push_back({sine(16, 1.0), "s", "sine", "sine"});
  const Embedder raw = [](const std::vector<Series>& xs) {
    std::vector<std::vector<double>> out;
    for (const Series& x : xs) out.push_back(x.values);
    return out;
  };
  const auto rows = run_benchmark(items, raw, {0}, 1, 2);
  EXPECT_EQ(rows[0].self_top1, 1.0);

  FlatIndex idx(2);
  idx.add("a", "f", "g", {1.0, 2.0});
  idx.add("b", "f", "g", {1.0, 2.0});
  idx.add("c", "f", "g", {4.0, 6.0});
  const std::vector<double> q = {1.1, 2.2};
  const QueryResult r = idx.query(q, 3);
  for (const Hit& h : r.hits) EXPECT_EQ(idx.distance(q, h.index), h.distance);
  EXPECT_EQ(r.hits[0].index, 0u);
  EXPECT_THROW(idx.distance({1.0}, 0), DimensionError);
}
