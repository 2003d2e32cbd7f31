#include "hwstyle/nn/tape.hpp"

#include <cmath>

#include "hwstyle/error.hpp"

namespace hwstyle::nn {
namespace {

template <class Expr>
void acc(std::vector<Tensor2>& g, std::size_t id, const Expr& e) {
  if (g[id].size() == 0) {
    g[id] = e;
  } else {
    g[id] += e;
  }
}

}  // namespace

ParamId ParameterStore::add(std::string name, Tensor2 init) {
  for (const auto& p : params_) {
    if (p.name == name) throw InvalidArgument("duplicate parameter name: " + name);
  }
  params_.push_back({std::move(name), std::move(init)});
  return params_.size() - 1;
}

ParamId ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw InvalidArgument("no parameter named " + name);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool ParameterStore::all_finite() const {
  for (const auto& p : params_) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

void ParameterStore::assign_values(const ParameterStore& other) {
  if (other.size() != size()) throw InvalidArgument("parameter count mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    const auto& src = other.params_[i];
    auto& dst = params_[i];
    if (src.name != dst.name || src.value.rows() != dst.value.rows() ||
        src.value.cols() != dst.value.cols()) {
      throw InvalidArgument("parameter mismatch at " + dst.name);
    }
    dst.value = src.value;
  }
}

Gradients zeros_like(const ParameterStore& store) {
  Gradients g;
  g.reserve(store.size());
  for (const auto& p : store) g.push_back(Tensor2::Zero(p.value.rows(), p.value.cols()));
  return g;
}

Tape::Tape(const ParameterStore& params) : params_(&params), param_nodes_(params.size(), -1) {}

Var Tape::push(Tensor2 value, std::function<void(Grads&)> back) {
  Node n;
  n.owned = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

void Tape::check(Var v) const {
  if (v.id_ >= nodes_.size()) throw InvalidArgument("variable does not belong to this tape");
}

const Tensor2& Tape::value(Var v) const {
  check(v);
  return val(v.id_);
}

Var Tape::param(ParamId id) {
  if (id >= params_->size()) throw InvalidArgument("parameter id out of range");
  if (param_nodes_[id] >= 0) return Var(static_cast<std::size_t>(param_nodes_[id]));
  Node n;
  n.ref = &(*params_)[id].value;
  n.param = static_cast<long>(id);
  nodes_.push_back(std::move(n));
  param_nodes_[id] = static_cast<long>(nodes_.size() - 1);
  return Var(nodes_.size() - 1);
}

Var Tape::constant(Tensor2 value) { return push(std::move(value), nullptr); }

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const auto& A = val(a.id_);
  const auto& B = val(b.id_);
  if (A.cols() != B.rows()) throw InvalidArgument("matmul: inner dimensions differ");
  const std::size_t ia = a.id_, ib = b.id_;
  Var out = push(A * B, nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, ib, io](Grads& g) {
    acc(g, ia, g[io] * val(ib).transpose());
    acc(g, ib, val(ia).transpose() * g[io]);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const auto& A = val(a.id_);
  const auto& B = val(b.id_);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument("add: shape mismatch");
  const std::size_t ia = a.id_, ib = b.id_;
  Var out = push(A + B, nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [ia, ib, io](Grads& g) {
    acc(g, ia, g[io]);
    acc(g, ib, g[io]);
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const auto& A = val(a.id_);
  const auto& B = val(b.id_);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument("sub: shape mismatch");
  const std::size_t ia = a.id_, ib = b.id_;
  Var out = push(A - B, nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [ia, ib, io](Grads& g) {
    acc(g, ia, g[io]);
    acc(g, ib, -g[io]);
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const auto& A = val(a.id_);
  const auto& B = val(b.id_);
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument("mul: shape mismatch");
  const std::size_t ia = a.id_, ib = b.id_;
  Var out = push(A.cwiseProduct(B), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, ib, io](Grads& g) {
    acc(g, ia, g[io].cwiseProduct(val(ib)));
    acc(g, ib, g[io].cwiseProduct(val(ia)));
  };
  return out;
}

Var Tape::add_row(Var a, Var row) {
  check(a);
  check(row);
  const auto& A = val(a.id_);
  const auto& R = val(row.id_);
  if (R.rows() != 1 || R.cols() != A.cols()) throw InvalidArgument("add_row: shape mismatch");
  const std::size_t ia = a.id_, ir = row.id_;
  Tensor2 out_value = A.rowwise() + R.row(0);
  Var out = push(std::move(out_value), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [ia, ir, io](Grads& g) {
    acc(g, ia, g[io]);
    acc(g, ir, g[io].colwise().sum());
  };
  return out;
}

Var Tape::scale(Var a, double s) {
  check(a);
  const std::size_t ia = a.id_;
  Var out = push(s * val(ia), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [ia, io, s](Grads& g) { acc(g, ia, s * g[io]); };
  return out;
}

Var Tape::sigmoid(Var a) {
  check(a);
  const std::size_t ia = a.id_;
  Tensor2 y = val(ia).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  Var out = push(std::move(y), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, io](Grads& g) {
    const auto& y = val(io);
    acc(g, ia, g[io].cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  };
  return out;
}

Var Tape::tanh(Var a) {
  check(a);
  const std::size_t ia = a.id_;
  Tensor2 y = val(ia).array().tanh().matrix();
  Var out = push(std::move(y), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, io](Grads& g) {
    const auto& y = val(io);
    acc(g, ia, g[io].cwiseProduct((1.0 - y.array().square()).matrix()));
  };
  return out;
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  check(a);
  const auto& A = val(a.id_);
  if (start < 0 || count < 0 || start + count > A.cols()) throw InvalidArgument("slice_cols: out of range");
  const std::size_t ia = a.id_;
  Var out = push(A.middleCols(start, count), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, io, start, count](Grads& g) {
    if (g[ia].size() == 0) g[ia] = Tensor2::Zero(val(ia).rows(), val(ia).cols());
    g[ia].middleCols(start, count) += g[io];
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  const auto& A = val(a.id_);
  const auto& B = val(b.id_);
  if (A.rows() != B.rows()) throw InvalidArgument("concat_cols: row mismatch");
  Tensor2 out_value(A.rows(), A.cols() + B.cols());
  out_value << A, B;
  const std::size_t ia = a.id_, ib = b.id_;
  const Eigen::Index ca = A.cols(), cb = B.cols();
  Var out = push(std::move(out_value), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [ia, ib, io, ca, cb](Grads& g) {
    acc(g, ia, g[io].leftCols(ca));
    acc(g, ib, g[io].rightCols(cb));
  };
  return out;
}

Var Tape::select_rows(const std::vector<bool>& keep, Var when_true, Var when_false) {
  check(when_true);
  check(when_false);
  const auto& T = val(when_true.id_);
  const auto& F = val(when_false.id_);
  if (T.rows() != F.rows() || T.cols() != F.cols() || static_cast<Eigen::Index>(keep.size()) != T.rows()) {
    throw InvalidArgument("select_rows: shape mismatch");
  }
  Tensor2 out_value = F;
  for (Eigen::Index r = 0; r < T.rows(); ++r) {
    if (keep[static_cast<std::size_t>(r)]) out_value.row(r) = T.row(r);
  }
  const std::size_t it = when_true.id_, iff = when_false.id_;
  Var out = push(std::move(out_value), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [keep, it, iff, io](Grads& g) {
    Tensor2 gt = g[io], gf = g[io];
    for (Eigen::Index r = 0; r < gt.rows(); ++r) {
      (keep[static_cast<std::size_t>(r)] ? gf : gt).row(r).setZero();
    }
    acc(g, it, gt);
    acc(g, iff, gf);
  };
  return out;
}

Var Tape::dropout(Var a, double p, Rng& rng, bool training) {
  check(a);
  if (p < 0.0 || p >= 1.0) throw InvalidArgument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return a;
  const auto& A = val(a.id_);
  Tensor2 mask(A.rows(), A.cols());
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform01(rng) < p ? 0.0 : keep_scale;
  }
  return mul(a, constant(std::move(mask)));
}

Var Tape::sum(Var a) {
  check(a);
  const std::size_t ia = a.id_;
  Tensor2 s(1, 1);
  s(0, 0) = val(ia).sum();
  Var out = push(std::move(s), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [this, ia, io](Grads& g) {
    acc(g, ia, Tensor2::Constant(val(ia).rows(), val(ia).cols(), g[io](0, 0)));
  };
  return out;
}

Var Tape::softmax_nll(Var logits, std::span<const int> targets, std::span<const double> weights) {
  check(logits);
  const auto& L = val(logits.id_);
  if (static_cast<Eigen::Index>(targets.size()) != L.rows() || weights.size() != targets.size()) {
    throw InvalidArgument("softmax_nll: targets/weights must have one entry per row");
  }
  Tensor2 probs(L.rows(), L.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < L.rows(); ++r) {
    const double m = L.row(r).maxCoeff();
    probs.row(r) = (L.row(r).array() - m).exp().matrix();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= L.cols()) throw InvalidArgument("softmax_nll: target out of range");
    loss += weights[static_cast<std::size_t>(r)] * -(L(r, t) - m - std::log(z));
  }
  Tensor2 s(1, 1);
  s(0, 0) = loss;
  const std::size_t il = logits.id_;
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  Var out = push(std::move(s), nullptr);
  const std::size_t io = out.id_;
  nodes_[io].back = [il, io, probs = std::move(probs), tg = std::move(tg), w = std::move(w)](Grads& g) {
    Tensor2 gl = Tensor2::Zero(probs.rows(), probs.cols());
    const double up = g[io](0, 0);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      const int t = tg[static_cast<std::size_t>(r)];
      if (t < 0) continue;
      gl.row(r) = probs.row(r);
      gl(r, t) -= 1.0;
      gl.row(r) *= up * w[static_cast<std::size_t>(r)];
    }
    acc(g, il, gl);
  };
  return out;
}

Gradients Tape::backward(Var loss) const {
  if (nodes_.empty()) throw InvalidArgument("backward called before any forward computation");
  check(loss);
  const auto& L = val(loss.id_);
  if (L.rows() != 1 || L.cols() != 1) throw InvalidArgument("backward needs a scalar (1x1) loss");

  Grads g(nodes_.size());
  g[loss.id_] = Tensor2::Ones(1, 1);
  Gradients out = zeros_like(*params_);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    if (g[i].size() == 0) continue;
    const Node& n = nodes_[i];
    if (n.param >= 0) {
      out[static_cast<std::size_t>(n.param)] += g[i];
    } else if (n.back) {
      n.back(g);
    }
    g[i] = Tensor2();  // free as we go
  }
  return out;
}

NllResult softmax_nll(const Eigen::VectorXd& logits, int target) {
  if (target < 0 || target >= logits.size()) throw InvalidArgument("softmax_nll: target out of range");
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  const double z = e.sum();
  NllResult r;
  r.loss = -(logits(target) - m - std::log(z));
  r.grad = e / z;
  r.grad(target) -= 1.0;
  return r;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  Eigen::VectorXd scaled = logits / temperature;
  const double m = scaled.maxCoeff();
  Eigen::VectorXd e = (scaled.array() - m).exp().matrix();
  return e / e.sum();
}

}  // namespace hwstyle::nn
