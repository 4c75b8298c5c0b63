#include <cmath>

#include "tspulse/error.hpp"
#include "tspulse/train.hpp"

namespace tspulse {

void LossWeights::validate() const {
  for (double w : {time1, time2, fft, sign, pred})
    if (!(w >= 0.0)) throw ArgumentError("loss weights must be non-negative");
  if (time1 + time2 + fft + sign + pred <= 0.0) throw ArgumentError("at least one loss weight must be positive");
}

Task parse_task(std::string_view name) {
  if (name == "anomaly") return Task::anomaly;
  if (name == "imputation") return Task::imputation;
  if (name == "classification") return Task::classification;
  if (name == "search") return Task::search;
  if (name == "unified") return Task::unified;
  throw ArgumentError("unknown task '" + std::string(name) + "'");
}

const char* task_name(Task t) {
  switch (t) {
    case Task::anomaly: return "anomaly";
    case Task::imputation: return "imputation";
    case Task::classification: return "classification";
    case Task::search: return "search";
    case Task::unified: return "unified";
  }
  return "unknown";
}

TaskPreset task_preset(Task t) {
  TaskPreset p;
  switch (t) {
    case Task::anomaly:
    case Task::unified:
      break;
    case Task::imputation:
    case Task::search:
      p.weights = {1.0, 0.5, 0.5, 1.0, 0.0};
      break;
    case Task::classification:
      p.weights = {1.0, 0.5, 0.5, 1.0, 0.0};
      p.mask = MaskKind::block;
      p.patch_len = 16;
      break;
  }
  return p;
}

LossReport LossTerms::report() const {
  LossReport r;
  r.time1 = time1.value().item();
  r.time2 = time2.value().item();
  r.fft = fft.value().item();
  r.sign = sign.value().item();
  r.pred = pred.value().item();
  r.total = total.value().item();
  r.empty_mask = empty_mask;
  return r;
}

LossTerms compute_losses(const ForwardResult& r, const Batch& batch, const LossWeights& w) {
  w.validate();
  Tape& t = *r.out.y.tape;
  Var x = t.constant(batch.x);
  const Tensor mask = batch.mask.empty() ? Tensor(batch.x.shape(), 0.0) : batch.mask;
  LossTerms l;
  l.empty_mask = true;
  for (double m : mask.data())
    if (m != 0.0) {
      l.empty_mask = false;
      break;
    }
  l.time1 = ad::masked_mse(r.out.y, x, mask);
  l.time2 = ad::masked_mse(r.out.y_alt, x, mask);
  l.fft = ad::mse(r.out.y_fft, r.targets.packed);
  l.sign = ad::cross_entropy_logits(r.targets.signature, r.out.sign_logits);
  if (batch.future.empty()) {
    l.pred = t.constant(Tensor::scalar(0.0));
  } else {
    if (batch.future.shape() != r.out.pred.shape()) {
      throw DimensionError("prediction target " + shape_str(batch.future.shape()) +
                           " does not match head output " + shape_str(r.out.pred.shape()));
    }
    l.pred = ad::mse(r.out.pred, t.constant(batch.future));
  }
  Var total = t.constant(Tensor::scalar(0.0));
  const std::pair<double, Var> terms[] = {
      {w.time1, l.time1}, {w.time2, l.time2}, {w.fft, l.fft}, {w.sign, l.sign}, {w.pred, l.pred}};
  for (const auto& [wi, li] : terms)
    if (wi > 0.0) total = ad::add(total, ad::scale(li, wi));
  l.total = total;
  return l;
}

}  // namespace tspulse
