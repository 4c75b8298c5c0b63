#include <algorithm>
#include <cmath>
#include <fstream>

#include "../numerics/binio.hpp"
#include "tspulse/error.hpp"
#include "tspulse/search.hpp"

namespace tspulse {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'P', 'I'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void FlatIndex::add(EmbeddingRecord rec) {
  if (records_.empty() && dim_ == 0) dim_ = rec.vector.size();
  if (rec.vector.size() != dim_ || dim_ == 0) {
    throw DimensionError("index holds " + std::to_string(dim_) + "-dimensional vectors, got " +
                         std::to_string(rec.vector.size()));
  }
  for (float v : rec.vector)
    if (!std::isfinite(v)) throw ArgumentError("non-finite value in embedding '" + rec.id + "'");
  records_.push_back(std::move(rec));
}

void FlatIndex::add(std::string id, std::string family, std::string fine, const std::vector<double>& v) {
  EmbeddingRecord r{std::move(id), std::move(family), std::move(fine), {}};
  r.vector.assign(v.begin(), v.end());
  add(std::move(r));
}

namespace {

std::vector<double> as_float(const std::vector<double>& q) {
  std::vector<double> qf(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) qf[j] = static_cast<float>(q[j]);
  return qf;
}

double squared_distance(const std::vector<double>& qf, const std::vector<float>& v) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double d = qf[j] - double(v[j]);
    d2 += d * d;
  }
  return d2;
}

}  // namespace

double FlatIndex::distance(const std::vector<double>& q, std::size_t i) const {
  if (q.size() != dim_) {
    throw DimensionError("query has " + std::to_string(q.size()) + " values, index dimension is " +
                         std::to_string(dim_));
  }
  return std::sqrt(squared_distance(as_float(q), records_.at(i).vector));
}

QueryResult FlatIndex::query(const std::vector<double>& q, std::size_t k) const {
  if (k == 0) throw ArgumentError("k must be at least 1");
  if (records_.empty()) throw ArgumentError("query on an empty index");
  if (q.size() != dim_) {
    throw DimensionError("query has " + std::to_string(q.size()) + " values, index dimension is " +
                         std::to_string(dim_));
  }
  const std::vector<double> qf = as_float(q);
  std::vector<Hit> all(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) all[i] = {i, squared_distance(qf, records_[i].vector)};
  QueryResult r;
  r.truncated = k > all.size();
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(n), all.end(), [](const Hit& a, const Hit& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  });
  all.resize(n);
  for (Hit& h : all) h.distance = std::sqrt(h.distance);
  r.hits = std::move(all);
  return r;
}

void FlatIndex::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  binio::put_bytes(os, kMagic, 4);
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(dim_));
  binio::put_u64(os, records_.size());
  for (const EmbeddingRecord& r : records_) {
    binio::put_string(os, r.id);
    binio::put_string(os, r.family);
    binio::put_string(os, r.fine);
    for (float v : r.vector) binio::put_f32(os, v);
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

FlatIndex FlatIndex::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open index '" + path + "'");
  binio::Reader in(is, "index '" + path + "'");
  char magic[4];
  in.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("'" + path + "' is not an index file");
  const std::uint32_t version = in.u32();
  if (version != kVersion) throw FormatError("unsupported index version " + std::to_string(version));
  const std::uint32_t dim = in.u32();
  const std::uint64_t count = in.u64();
  if (dim == 0 && count > 0) throw FormatError("index declares zero-dimensional vectors");
  FlatIndex idx(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    r.id = in.string();
    r.family = in.string();
    r.fine = in.string();
    r.vector.resize(dim);
    for (float& v : r.vector) v = in.f32();
    try {
      idx.add(std::move(r));
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("index record ") + std::to_string(i) + ": " + e.what());
    }
  }
  if (!in.at_end()) throw FormatError("trailing bytes after the last index record");
  return idx;
}

}  // namespace tspulse
