#include "hwstyle/nn/layers.hpp"

#include <cmath>

#include "hwstyle/error.hpp"

namespace hwstyle::nn {

Tensor2 init_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng, -bound, bound);
  return t;
}

Dense::Dense(ParameterStore& store, const std::string& name, int in, int out, Rng& rng)
    : in_(in), out_(out) {
  if (in <= 0 || out <= 0) throw InvalidArgument("Dense " + name + ": sizes must be positive");
  w_ = store.add(name + ".weight", init_uniform(in, out, in, rng));
  b_ = store.add(name + ".bias", Tensor2::Zero(1, out));
}

Var Dense::forward(Tape& tape, Var x) const {
  if (tape.value(x).cols() != in_) throw InvalidArgument("Dense: input width mismatch");
  return tape.add_row(tape.matmul(x, tape.param(w_)), tape.param(b_));
}

GruCell::GruCell(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng)
    : in_(input_size), hidden_(hidden_size) {
  if (input_size <= 0 || hidden_size <= 0) throw InvalidArgument("GruCell " + name + ": sizes must be positive");
  wx_ = store.add(name + ".w_input", init_uniform(input_size, 3 * hidden_size, input_size, rng));
  uzr_ = store.add(name + ".u_gates", init_uniform(hidden_size, 2 * hidden_size, hidden_size, rng));
  uh_ = store.add(name + ".u_candidate", init_uniform(hidden_size, hidden_size, hidden_size, rng));
  b_ = store.add(name + ".bias", Tensor2::Zero(1, 3 * hidden_size));
}

Var GruCell::step(Tape& tape, Var x, Var h) const {
  if (tape.value(x).cols() != in_ || tape.value(h).cols() != hidden_ ||
      tape.value(x).rows() != tape.value(h).rows()) {
    throw InvalidArgument("GruCell: dimension mismatch");
  }
  const Eigen::Index H = hidden_;
  Var xw = tape.add_row(tape.matmul(x, tape.param(wx_)), tape.param(b_));
  Var gates = tape.sigmoid(tape.add(tape.slice_cols(xw, 0, 2 * H), tape.matmul(h, tape.param(uzr_))));
  Var z = tape.slice_cols(gates, 0, H);
  Var r = tape.slice_cols(gates, H, H);
  Var cand = tape.tanh(tape.add(tape.slice_cols(xw, 2 * H, H), tape.matmul(tape.mul(r, h), tape.param(uh_))));
  // h + z * (h~ - h)
  return tape.add(h, tape.mul(z, tape.sub(cand, h)));
}

Tensor2 gru_step(const ParameterStore& store, const GruCell& cell, const Tensor2& x, const Tensor2& h) {
  Tape tape(store);
  return tape.value(cell.step(tape, tape.constant(x), tape.constant(h)));
}

GruStack::GruStack(ParameterStore& store, const std::string& name, int input_size, int hidden_size,
                   int layers, double dropout, Rng& rng)
    : hidden_(hidden_size), dropout_(dropout) {
  if (layers <= 0) throw InvalidArgument("GruStack " + name + ": needs at least one layer");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidArgument("GruStack " + name + ": dropout must be in [0, 1)");
  for (int k = 0; k < layers; ++k) {
    cells_.emplace_back(store, name + ".l" + std::to_string(k), k == 0 ? input_size : hidden_size,
                        hidden_size, rng);
  }
}

GruStack::State GruStack::initial_state(Tape& tape, Eigen::Index batch) const {
  State s;
  for (std::size_t k = 0; k < cells_.size(); ++k) s.h.push_back(tape.constant(Tensor2::Zero(batch, hidden_)));
  return s;
}

Var GruStack::step(Tape& tape, Var x, State& state, bool training, Rng& rng,
                   const std::vector<bool>& keep) const {
  Var input = x;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    Var next = cells_[k].step(tape, input, state.h[k]);
    if (!keep.empty()) next = tape.select_rows(keep, next, state.h[k]);
    state.h[k] = next;
    input = (k + 1 < cells_.size()) ? tape.dropout(next, dropout_, rng, training) : next;
  }
  return input;
}

}  // namespace hwstyle::nn
