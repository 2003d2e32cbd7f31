#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hwstyle/nn/tensor.hpp"
#include "hwstyle/rng.hpp"

namespace hwstyle::nn {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = static_cast<std::size_t>(-1);
};

/// Records a forward computation over matrices and replays it in reverse.
///
/// Values are batch-major: a (B x n) node holds one n-vector per sequence.
/// `backward` does not mutate the tape, so it can be called repeatedly and
/// always returns the same gradients.
class Tape {
 public:
  explicit Tape(const ParameterStore& params);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(ParamId id);
  Var constant(Tensor2 value);

  const Tensor2& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_row(Var a, Var row);  // row (1 x n) broadcast over every row of a
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  Var concat_cols(Var a, Var b);
  /// Row i from `when_true` if keep[i], else from `when_false`.
  Var select_rows(const std::vector<bool>& keep, Var when_true, Var when_false);
  /// Inverted dropout; identity when !training or p == 0.
  Var dropout(Var a, double p, Rng& rng, bool training);
  Var sum(Var a);
  /// sum_i weights[i] * -log softmax(logits_i)[targets[i]]; rows with a
  /// negative target are skipped. Returns a 1x1 node.
  Var softmax_nll(Var logits, std::span<const int> targets, std::span<const double> weights);

  /// Gradients of the 1x1 node `loss` with respect to every parameter in
  /// the bound store. Throws InvalidArgument if `loss` is not a scalar of
  /// this tape.
  Gradients backward(Var loss) const;

 private:
  using Grads = std::vector<Tensor2>;
  struct Node {
    Tensor2 owned;
    const Tensor2* ref = nullptr;
    long param = -1;
    std::function<void(Grads&)> back;
    const Tensor2& value() const { return ref ? *ref : owned; }
  };

  Var push(Tensor2 value, std::function<void(Grads&)> back);
  const Tensor2& val(std::size_t id) const { return nodes_[id].value(); }
  void check(Var v) const;

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::vector<long> param_nodes_;
};

// Free-standing numeric softmax cross-entropy for a single logit vector.
struct NllResult {
  double loss = 0.0;
  Eigen::VectorXd grad;  // softmax(logits) - onehot(target)
};
NllResult softmax_nll(const Eigen::VectorXd& logits, int target);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature = 1.0);

}  // namespace hwstyle::nn
