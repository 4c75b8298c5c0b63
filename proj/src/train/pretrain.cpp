#include <algorithm>
#include <cmath>
#include <numeric>

#include "tspulse/error.hpp"
#include "tspulse/rng.hpp"
#include "tspulse/train.hpp"

namespace tspulse {

namespace {

void check_windows(const ModelConfig& cfg, const std::vector<Series>& windows) {
  if (windows.empty()) throw ArgumentError("training corpus is empty");
  const std::size_t C = windows[0].channels;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].length < cfg.context || windows[i].channels != C) {
      throw DimensionError("window " + std::to_string(i) + " is " + std::to_string(windows[i].length) +
                           "x" + std::to_string(windows[i].channels) + ", need at least " +
                           std::to_string(cfg.context) + "x" + std::to_string(C));
    }
  }
}

void add_report(LossReport& acc, const LossReport& r, double weight) {
  acc.time1 += weight * r.time1;
  acc.time2 += weight * r.time2;
  acc.fft += weight * r.fft;
  acc.sign += weight * r.sign;
  acc.pred += weight * r.pred;
  acc.total += weight * r.total;
}

void check_finite(const LossReport& r) {
  const std::pair<const char*, double> heads[] = {
      {"time", r.time1}, {"time-from-fft", r.time2}, {"fft", r.fft}, {"signature", r.sign}, {"prediction", r.pred}};
  for (const auto& [name, v] : heads)
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite loss from the ") + name + " head");
  if (!std::isfinite(r.total)) throw NumericalError("non-finite total loss");
}

Tensor batch_mask(const ModelConfig& cfg, const Batch& b, const PretrainOptions& opt, Rng& rng) {
  const std::size_t B = b.x.shape()[0], C = b.x.shape()[1];
  std::vector<MaskPlan> plans;
  for (std::size_t i = 0; i < B; ++i) {
    const double ratio = uniform(rng, opt.ratio_lo, opt.ratio_hi);
    plans.push_back(make_mask_plan(opt.mask, cfg.context, C, cfg.patch_len, ratio, rng));
  }
  return mask_tensor(plans);
}

}  // namespace

Batch make_batch(const ModelConfig& cfg, const std::vector<Series>& windows,
                 const std::vector<std::size_t>& idx) {
  const std::size_t S = cfg.context, F = cfg.pred_len, C = windows[idx.at(0)].channels;
  bool future = true;
  for (std::size_t i : idx) future = future && windows[i].length >= S + F;
  Batch b;
  b.x = Tensor(Shape{idx.size(), C, S});
  if (future) b.future = Tensor(Shape{idx.size(), C, F});
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Series& w = windows[idx[k]];
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < S; ++t) b.x[(k * C + c) * S + t] = w.at(t, c);
      if (future)
        for (std::size_t t = 0; t < F; ++t) b.future[(k * C + c) * F + t] = w.at(S + t, c);
    }
  }
  return b;
}

std::vector<LossReport> pretrain(Model& model, const std::vector<Series>& windows,
                                 const PretrainOptions& opt) {
  opt.weights.validate();
  if (opt.batch_size == 0) throw ArgumentError("batch size must be positive");
  if (!(opt.ratio_lo >= 0.0 && opt.ratio_lo <= opt.ratio_hi && opt.ratio_hi <= 1.0)) {
    throw ArgumentError("mask ratio range must satisfy 0 <= lo <= hi <= 1");
  }
  std::vector<LossReport> trace;
  if (opt.epochs == 0) return trace;
  check_windows(model.cfg, windows);
  check_params(model);

  Rng order_rng(derive_seed(opt.seed, "order"));
  Rng mask_rng(derive_seed(opt.seed, "mask"));
  AdamState adam;
  adam.lr = opt.lr;
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    LossReport acc;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
      Batch b = make_batch(model.cfg, windows, idx);
      b.mask = batch_mask(model.cfg, b, opt, mask_rng);

      Tape t(true, derive_seed(opt.seed, ++step));
      Bound p(t, model.params);
      ForwardResult r = forward(p, model.cfg, b);
      LossTerms l = compute_losses(r, b, opt.weights);
      const LossReport rep = l.report();
      check_finite(rep);
      t.backward(l.total);
      adam_step(model.params, p.grads(), adam);
      add_report(acc, rep, double(idx.size()) / double(order.size()));
    }
    trace.push_back(acc);
    if (opt.on_epoch) opt.on_epoch(epoch, acc);
  }
  return trace;
}

LossReport evaluate_losses(const Model& model, const std::vector<Series>& windows,
                           const PretrainOptions& opt) {
  check_windows(model.cfg, windows);
  Rng mask_rng(derive_seed(opt.seed, "eval-mask"));
  LossReport acc;
  const std::size_t bs = std::max<std::size_t>(opt.batch_size, 1);
  for (std::size_t start = 0; start < windows.size(); start += bs) {
    const std::size_t end = std::min(windows.size(), start + bs);
    std::vector<std::size_t> idx(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(model.cfg, windows, idx);
    b.mask = batch_mask(model.cfg, b, opt, mask_rng);
    Tape t(false, 0, false);
    Bound p(t, model.params, [](const std::string&) { return false; });
    ForwardResult r = forward(p, model.cfg, b);
    add_report(acc, compute_losses(r, b, opt.weights).report(), double(idx.size()) / double(windows.size()));
  }
  return acc;
}

}  // namespace tspulse
