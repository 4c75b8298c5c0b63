#include "tspulse/autodiff.hpp"
#include "tspulse/error.hpp"

namespace tspulse {

const Tensor& Var::value() const { return tape->value(id); }
const Shape& Var::shape() const { return tape->value(id).shape(); }

Tape::Tape(bool training, std::uint64_t dropout_seed, bool grad_enabled)
    : training_(training), grad_enabled_(grad_enabled), dropout_seed_(dropout_seed) {}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.tape != this) throw UsageError("op mixes variables from different tapes");
      needs = needs || nodes_[v.id].requires_grad;
    }
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Tensor& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape(), 0.0);
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw UsageError("backward() on a variable from another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ArgumentError("backward() requires a scalar loss, got shape " +
                        shape_str(nodes_[loss.id].value.shape()));
  }
  visits_ = 0;
  if (!nodes_[loss.id].requires_grad) return;
  grad_buffer(loss.id)[0] += 1.0;
  for (std::int64_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, static_cast<std::uint32_t>(i));
    ++visits_;
  }
}

}  // namespace tspulse
