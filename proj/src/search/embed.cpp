#include "tspulse/error.hpp"
#include "tspulse/search.hpp"

namespace tspulse {

const char* view_name(EmbeddingView v) {
  switch (v) {
    case EmbeddingView::time: return "time";
    case EmbeddingView::fft: return "fft";
    case EmbeddingView::reg: return "register";
  }
  return "unknown";
}

EmbeddingView parse_view(std::string_view name) {
  if (name == "time") return EmbeddingView::time;
  if (name == "fft") return EmbeddingView::fft;
  if (name == "register" || name == "reg") return EmbeddingView::reg;
  throw ArgumentError("unknown embedding view '" + std::string(name) + "'");
}

std::vector<std::vector<double>> embed_view(const Model& m, const std::vector<Series>& xs, EmbeddingView view,
                                            std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("embedding batch size must be positive");
  const std::size_t S = m.cfg.context;
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (std::size_t b0 = 0; b0 < xs.size(); b0 += batch_size) {
    const std::size_t B = std::min(batch_size, xs.size() - b0);
    const std::size_t C = xs[b0].channels;
    Batch batch;
    batch.x = Tensor(Shape{B, C, S}, 0.0);
    batch.mask = Tensor(Shape{B, C, S}, 0.0);
    bool any_missing = false;
    for (std::size_t b = 0; b < B; ++b) {
      const Series& x = xs[b0 + b];
      if (x.length != S || x.channels != C) {
        throw DimensionError("embedding input " + std::to_string(b0 + b) + " has shape " + std::to_string(x.length) +
                             "x" + std::to_string(x.channels) + ", expected " + std::to_string(S) + "x" +
                             std::to_string(C));
      }
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t < S; ++t) {
          const std::size_t i = (b * C + c) * S + t;
          if (x.is_observed(t, c)) {
            batch.x[i] = x.at(t, c);
          } else {
            batch.mask[i] = 1.0;
            any_missing = true;
          }
        }
    }
    if (!any_missing) batch.mask = Tensor();
    const Inference inf = infer(m, batch);
    const Tensor& e = view == EmbeddingView::time ? inf.time_e : view == EmbeddingView::fft ? inf.fft_e : inf.reg_e;
    const std::size_t per = e.size() / (B * C);
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<double> v(per, 0.0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t j = 0; j < per; ++j) v[j] += e[(b * C + c) * per + j];
      for (double& x : v) x /= double(C);
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<double> embed_register(const Series& x, const Model& m) {
  return embed_view(m, {x}, EmbeddingView::reg).front();
}

Embedder register_embedder(const Model& m) {
  return [&m](const std::vector<Series>& xs) { return embed_view(m, xs, EmbeddingView::reg); };
}

}  // namespace tspulse
