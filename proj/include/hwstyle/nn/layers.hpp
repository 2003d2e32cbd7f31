#pragma once

#include <string>
#include <vector>

#include "hwstyle/nn/tape.hpp"

namespace hwstyle::nn {

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor2 init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

/// y = x W + b with W (in x out), b (1 x out).
class Dense {
 public:
  Dense() = default;
  Dense(ParameterStore& store, const std::string& name, int in, int out, Rng& rng);

  Var forward(Tape& tape, Var x) const;
  int in() const { return in_; }
  int out() const { return out_; }
  ParamId weight() const { return w_; }
  ParamId bias() const { return b_; }

 private:
  ParamId w_ = 0, b_ = 0;
  int in_ = 0, out_ = 0;
};

/// Gated recurrent unit with the reset gate applied to the hidden state
/// before the candidate's recurrent matmul:
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * h~
/// Gate weights are stored fused, columns ordered [z | r | h~].
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng);

  Var step(Tape& tape, Var x, Var h) const;
  int input_size() const { return in_; }
  int hidden_size() const { return hidden_; }

 private:
  ParamId wx_ = 0, uzr_ = 0, uh_ = 0, b_ = 0;
  int in_ = 0, hidden_ = 0;
};

/// Evaluates one GRU update without keeping a tape around.
Tensor2 gru_step(const ParameterStore& store, const GruCell& cell, const Tensor2& x, const Tensor2& h);

/// Stacked GRU layers; layer k's output feeds layer k+1, with dropout
/// applied between layers (never after the top layer).
class GruStack {
 public:
  GruStack() = default;
  GruStack(ParameterStore& store, const std::string& name, int input_size, int hidden_size,
           int layers, double dropout, Rng& rng);

  struct State {
    std::vector<Var> h;  // one (B x hidden) node per layer
  };

  State initial_state(Tape& tape, Eigen::Index batch) const;
  /// Advances every layer one step and returns the top layer's output. When
  /// `keep` is non-empty, rows with keep[i] == false retain their previous
  /// state (used to freeze finished sequences in a padded batch).
  Var step(Tape& tape, Var x, State& state, bool training, Rng& rng,
           const std::vector<bool>& keep = {}) const;

  int layers() const { return static_cast<int>(cells_.size()); }
  int hidden_size() const { return hidden_; }
  const GruCell& cell(int k) const { return cells_[static_cast<std::size_t>(k)]; }

 private:
  std::vector<GruCell> cells_;
  int hidden_ = 0;
  double dropout_ = 0.0;
};

}  // namespace hwstyle::nn
