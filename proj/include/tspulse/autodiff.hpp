#pragma once

// Tape-based reverse-mode differentiation over dense 64-bit tensors.
//
// A Tape records every operation applied to the variables it owns. Values
// are immutable once recorded. backward() walks the tape from the loss node
// to the front exactly once and accumulates gradients into every node that
// requires them.

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "tspulse/tensor.hpp"

namespace tspulse {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const;
  bool valid() const { return tape != nullptr; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t)>;

  /// `training` enables dropout; `dropout_seed` feeds the counter-based
  /// dropout generator. `grad_enabled=false` records values only.
  explicit Tape(bool training = false, std::uint64_t dropout_seed = 0, bool grad_enabled = true);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records an op result. `fn` is dropped when no input requires a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }

  /// Gradient buffer of node `id`, zero-initialised on first access.
  Tensor& grad_buffer(std::uint32_t id);
  /// Gradient after backward(); zeros for nodes that received none.
  Tensor grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. The loss must be a scalar.
  void backward(Var loss);

  bool training() const { return training_; }
  bool grad_enabled() const { return grad_enabled_; }
  std::uint64_t dropout_seed() const { return dropout_seed_; }
  /// Fresh stream id for the next dropout op.
  std::uint64_t next_stream() { return stream_counter_++; }

  std::size_t size() const { return nodes_.size(); }
  /// Number of backward callbacks executed by the last backward().
  std::size_t backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  bool training_;
  bool grad_enabled_;
  std::uint64_t dropout_seed_;
  std::uint64_t stream_counter_ = 0;
  std::size_t visits_ = 0;
};

/// Differentiable operations. All functions require inputs from the same tape.
namespace ad {

// Elementwise binary ops with numpy-style broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var square(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// Exact GELU, x * Phi(x).
Var gelu(Var a);

Var sum(Var a);
Var mean(Var a);
Var sum_axis(Var a, int axis, bool keepdim = true);
Var mean_axis(Var a, int axis, bool keepdim = true);
/// max(max_i |a_i|, floor) along the last axis, keepdim. The gradient flows
/// to the first arg-max element unless the floor is active.
Var max_abs_last(Var a, double floor);

Var reshape(Var a, Shape shape);
Var permute(Var a, const std::vector<std::size_t>& perm);
/// Swaps the last two axes.
Var transpose(Var a);
Var broadcast_to(Var a, const Shape& shape);
/// Repeats the last axis `reps` times: [..., n] -> [..., n*reps].
Var tile_last(Var a, std::size_t reps);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(Var a, int axis, std::size_t start, std::size_t length);
std::vector<Var> split(Var a, int axis, const std::vector<std::size_t>& sizes);

/// 2-D matrix product [m,k] x [k,n].
Var matmul(Var a, Var b);
/// x[..., in] * w[in, out] (+ bias[out]).
Var linear(Var x, Var w, Var bias);
Var linear(Var x, Var w);
/// Contraction along `axis`: out[.., o, ..] = sum_i w[o, i] x[.., i, ..] + bias[o].
Var mix_axis(Var x, Var w, Var bias, int axis);

/// Layer normalisation over the last axis with affine gamma/beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var softmax(Var a, int axis = -1);
Var log_softmax(Var a, int axis = -1);
/// Inverted dropout; identity when p == 0 or the tape is not training.
Var dropout(Var a, double p);

/// Mean squared error over all elements.
Var mse(Var a, Var b);
/// Sum(mask * (a-b)^2) / Sum(mask); 0 when the mask is empty. `mask` is a
/// constant 0/1 tensor of the same shape.
Var masked_mse(Var a, Var b, const Tensor& mask);
/// Mean over rows (all axes but the last) of -sum target * log(probs).
Var cross_entropy(Var target, Var probs);
/// Same as cross_entropy(target, softmax(logits)) computed stably.
Var cross_entropy_logits(Var target, Var logits);

/// Real FFT along the last axis (length S even): returns (re, im), each [..., S/2+1].
std::pair<Var, Var> rfft(Var x);
/// Inverse of rfft producing length n; imaginary parts of DC and Nyquist are ignored.
Var irfft(Var re, Var im, std::size_t n);
/// log(sqrt(re^2 + im^2) + eps), with zero gradient at zero magnitude.
Var log_magnitude(Var re, Var im, double eps);

}  // namespace ad

}  // namespace tspulse
