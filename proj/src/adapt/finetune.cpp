#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tspulse/adapt.hpp"
#include "tspulse/error.hpp"
#include "tspulse/rng.hpp"

namespace tspulse {

namespace {

bool is_trainable(const std::string& name) { return name.rfind("decoder.", 0) == 0; }

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  Tensor t(Shape{labels.size(), classes}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) t[i * classes + labels[i]] = 1.0;
  return t;
}

// Mean over samples and classes of softplus(z) - y z.
Var binary_cross_entropy_logits(Var target, Var logits) {
  Var softplus = ad::log(ad::add_scalar(ad::exp(logits), 1.0));
  return ad::mean(ad::sub(softplus, ad::mul(target, logits)));
}

Var classification_loss(HeadActivation act, Var target, Var logits) {
  return act == HeadActivation::softmax ? ad::cross_entropy_logits(target, logits)
                                        : binary_cross_entropy_logits(target, logits);
}

// Missing points are always hidden; training adds block masking on top.
Tensor batch_mask(const std::vector<Series>& xs, const ModelConfig& cfg, std::optional<double> ratio,
                  Rng* rng) {
  const std::size_t B = xs.size(), C = xs[0].channels, S = cfg.context;
  Tensor m(Shape{B, C, S}, 0.0);
  bool any = false;
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<std::uint8_t> block;
    if (ratio && rng) block = block_mask_plan(S, C, cfg.patch_len, *ratio, *rng).point_mask;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < S; ++t) {
        const bool hide = !xs[b].is_observed(t, c) || (!block.empty() && block[t * C + c]);
        if (hide) {
          m[(b * C + c) * S + t] = 1.0;
          any = true;
        }
      }
  }
  return any ? m : Tensor();
}

Batch make_inputs(const std::vector<Series>& xs, const ModelConfig& cfg, std::optional<double> ratio, Rng* rng) {
  Batch b;
  b.x = stack_series(xs);
  // Missing entries may hold NaN; they are replaced by the mask token anyway.
  for (auto& v : b.x.data())
    if (!std::isfinite(v)) v = 0.0;
  b.mask = batch_mask(xs, cfg, ratio, rng);
  return b;
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

Tensor logits_eval(const Classifier& clf, const std::vector<Series>& prepared) {
  const std::size_t bs = std::max<std::size_t>(clf.cfg.batch_size, 1);
  const std::size_t K = clf.head.classes;
  Tensor out(Shape{prepared.size(), K});
  for (std::size_t start = 0; start < prepared.size(); start += bs) {
    const std::size_t end = std::min(prepared.size(), start + bs);
    std::vector<Series> xs(prepared.begin() + start, prepared.begin() + end);
    Batch b = make_inputs(xs, clf.model.cfg, std::nullopt, nullptr);
    Tape t(false, 0, false);
    auto frozen = [](const std::string&) { return false; };
    Bound p(t, clf.model.params, frozen);
    Bound hp(t, clf.head.params, frozen);
    Var z = head_logits(hp, clf.model.cfg, clf.head, decoder_embedding(p, clf.model.cfg, b));
    std::copy(z.value().data().begin(), z.value().data().end(), out.ptr() + start * K);
  }
  return out;
}

EvalResult evaluate(const Classifier& clf, const std::vector<Series>& prepared,
                    const std::vector<std::size_t>& labels) {
  EvalResult r;
  if (prepared.empty()) return r;
  Tensor z = logits_eval(clf, prepared);
  Tape t(false, 0, false);
  Var loss = classification_loss(clf.cfg.activation, t.constant(one_hot(labels, clf.head.classes)), t.constant(z));
  r.loss = loss.value().item();
  const std::size_t K = clf.head.classes;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* row = z.ptr() + i * K;
    hits += std::size_t(std::max_element(row, row + K) - row) == labels[i];
  }
  r.accuracy = double(hits) / double(labels.size());
  return r;
}

std::vector<Series> prepare_all(const std::vector<Series>& xs, const Classifier& clf) {
  std::vector<Series> out;
  out.reserve(xs.size());
  for (const Series& x : xs) {
    if (x.channels != clf.input_channels) {
      throw DimensionError("classifier was trained on " + std::to_string(clf.input_channels) +
                           " channels, sample has " + std::to_string(x.channels));
    }
    out.push_back(prepare_input(x, clf.model.cfg, clf.cfg.channel_expansion));
  }
  return out;
}

}  // namespace

std::size_t LabeledSet::num_classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::pair<LabeledSet, LabeledSet> stratified_split(const LabeledSet& data, double fraction, std::uint64_t seed) {
  if (data.series.size() != data.labels.size()) throw ArgumentError("series and label counts differ");
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ArgumentError("split fraction must lie in [0, 1)");
  Rng rng(derive_seed(seed, "split"));
  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.labels.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<bool> held(data.size(), false);
  for (auto& idx : by_class) {
    if (idx.size() < 2 || fraction == 0.0) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n = static_cast<std::size_t>(std::lround(fraction * double(idx.size())));
    n = std::clamp<std::size_t>(n, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n; ++k) held[idx[k]] = true;
  }
  std::pair<LabeledSet, LabeledSet> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    LabeledSet& dst = held[i] ? out.second : out.first;
    dst.series.push_back(data.series[i]);
    dst.labels.push_back(data.labels[i]);
  }
  return out;
}

void FinetuneConfig::validate() const {
  if (mask_ratio && !(*mask_ratio > 0.0 && *mask_ratio < 1.0)) throw ArgumentError("mask_ratio must lie in (0, 1)");
  if (channel_expansion != 1 && channel_expansion != 2) throw ArgumentError("channel_expansion must be 1 or 2");
  if (d_proj != 1 && d_proj != 2) throw ArgumentError("d_proj must be 1 or 2");
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (!(lr > 0.0)) throw ArgumentError("lr must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ArgumentError("val_fraction must lie in [0, 1)");
}

Series prepare_input(const Series& x, const ModelConfig& cfg, std::size_t expansion) {
  return expand_channels(interpolate_length(x, cfg.context), expansion);
}

FinetuneResult finetune_classifier(const LabeledSet& data, const Model& pretrained, const FinetuneConfig& cfg) {
  cfg.validate();
  if (data.series.size() != data.labels.size()) throw ArgumentError("series and label counts differ");
  if (data.series.empty()) throw ArgumentError("classification training set is empty");
  const std::size_t classes = data.num_classes();
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t l : data.labels) ++counts[l];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t n) { return n > 0; }) < 2) {
    throw ArgumentError("classification needs at least two classes with samples");
  }
  const std::size_t C = data.series[0].channels;

  FinetuneResult res;
  Classifier& clf = res.classifier;
  clf.model = pretrained;
  clf.cfg = cfg;
  clf.input_channels = C;
  const std::size_t C2 = C * cfg.channel_expansion;
  if (clf.model.mixer_channels == 0) insert_channel_mixers(clf.model, C2);
  clf.head = init_head(clf.model.cfg, cfg.head, C2, cfg.d_proj, classes, derive_seed(cfg.seed, "init"));

  auto [train, val] = stratified_split(data, cfg.val_fraction, cfg.seed);
  const std::vector<Series> train_x = prepare_all(train.series, clf);
  const std::vector<Series> val_x = prepare_all(val.series, clf);

  AdamState model_opt, head_opt;
  model_opt.lr = head_opt.lr = cfg.lr;
  Rng order_rng(derive_seed(cfg.seed, "order"));
  Rng mask_rng(derive_seed(cfg.seed, "mask"));
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  Classifier best_clf = clf;
  std::size_t since_best = 0;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Series> xs;
      std::vector<std::size_t> ys;
      for (std::size_t i = start; i < end; ++i) {
        xs.push_back(train_x[order[i]]);
        ys.push_back(train.labels[order[i]]);
      }
      Batch b = make_inputs(xs, clf.model.cfg, cfg.mask_ratio, &mask_rng);
      Tape t(true, derive_seed(cfg.seed, ++step));
      Bound p(t, clf.model.params, is_trainable);
      Bound hp(t, clf.head.params);
      Var z = head_logits(hp, clf.model.cfg, clf.head, decoder_embedding(p, clf.model.cfg, b));
      Var loss = classification_loss(cfg.activation, t.constant(one_hot(ys, classes)), z);
      if (!std::isfinite(loss.value().item())) throw NumericalError("non-finite classification loss");
      t.backward(loss);
      adam_step(clf.model.params, p.grads(), model_opt);
      adam_step(clf.head.params, hp.grads(), head_opt);
      train_loss += loss.value().item() * double(xs.size()) / double(order.size());
    }
    EpochLog log;
    log.train_loss = train_loss;
    const EvalResult v = evaluate(clf, val_x, val.labels);
    log.val_loss = v.loss;
    log.val_accuracy = v.accuracy;
    res.history.push_back(log);
    const double score = val_x.empty() ? train_loss : v.loss;
    if (score < best) {
      best = score;
      best_clf = clf;
      res.best_epoch = epoch;
      res.val_accuracy = v.accuracy;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  clf = std::move(best_clf);
  return res;
}

Tensor predict_proba(const Classifier& clf, const std::vector<Series>& xs) {
  Tensor z = logits_eval(clf, prepare_all(xs, clf));
  Tape t(false, 0, false);
  Var p = clf.cfg.activation == HeadActivation::softmax ? ad::softmax(t.constant(z), -1)
                                                        : ad::sigmoid(t.constant(z));
  return p.value();
}

std::vector<std::size_t> predict(const Classifier& clf, const std::vector<Series>& xs) {
  Tensor p = predict_proba(clf, xs);
  const std::size_t K = clf.head.classes;
  std::vector<std::size_t> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double* row = p.ptr() + i * K;
    out[i] = std::size_t(std::max_element(row, row + K) - row);
  }
  return out;
}

double accuracy(const Classifier& clf, const LabeledSet& data) {
  if (data.size() == 0) throw ArgumentError("accuracy of an empty set");
  const auto pred = predict(clf, data.series);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == data.labels[i];
  return double(hits) / double(pred.size());
}

}  // namespace tspulse
