#include "hwstyle/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hwstyle/error.hpp"
#include "hwstyle/nn/adam.hpp"

namespace hwstyle {

using nn::Tensor2;

namespace {

double mean_nll(const Tensor2& logits, std::span<const int> targets) {
  double sum = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Eigen::VectorXd row = logits.row(static_cast<Eigen::Index>(t)).transpose();
    sum += nn::softmax_nll(row, targets[t]).loss;
  }
  return sum / static_cast<double>(targets.size());
}

}  // namespace

double sequence_loss(const Tensor2& dir_logits, const Tensor2& speed_logits, const FrameSequence& fs) {
  const auto T = static_cast<Eigen::Index>(fs.frames.size());
  if (T == 0) throw InvalidArgument("sequence_loss: empty frame sequence");
  if (speed_logits.rows() != T || (dir_logits.rows() != T && dir_logits.rows() != T + 1)) {
    throw InvalidArgument("sequence_loss: logits do not cover the target steps");
  }
  std::vector<int> dir = fs.dir_codes();
  if (dir_logits.rows() == T + 1) dir.push_back(static_cast<int>(dir_logits.cols()) - 1);
  const std::vector<int> speed = fs.speed_codes();
  return 0.5 * (mean_nll(dir_logits, dir) + mean_nll(speed_logits, speed));
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}};
}

EarlyStopping::EarlyStopping(int patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience <= 0) throw InvalidArgument("patience must be positive");
}

bool EarlyStopping::update(double metric) {
  if (metric < best_) {
    best_ = metric;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

template <class Model>
double mean_loss(const Model& model, std::span<const FrameSequence> data, int batch_size) {
  Rng unused;
  double sum = 0.0;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const FrameSequence*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&data[i]);
    nn::Tape tape(model.params());
    sum += tape.value(model.batch_loss(tape, batch, false, unused))(0, 0) * static_cast<double>(batch.size());
  }
  return sum / static_cast<double>(data.size());
}

void clip_gradients(nn::Gradients& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  for (auto& g : grads) g *= max_norm / norm;
}

void check_sequences(std::span<const FrameSequence> data, const char* what, int n_levels) {
  if (data.empty()) throw InvalidArgument(std::string(what) + " split is empty");
  for (const auto& fs : data) fs.validate(n_levels);
}

template <class Model>
TrainResult run_training(Model model, std::span<const FrameSequence> train, std::span<const FrameSequence> val,
                         const QuantizerConfig& quantizer, const TrainConfig& cfg, const TrainHooks& hooks) {
  check_sequences(train, "train", quantizer.n_levels);
  check_sequences(val, "validation", quantizer.n_levels);

  Rng rng(mix_seed(cfg.seed, 0x7a));
  nn::Adam adam(model.params(), {.lr = cfg.lr});
  nn::ParameterStore best = model.params();
  EarlyStopping stopper(cfg.patience);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{Checkpoint{model, quantizer, cfg, 0, std::numeric_limits<double>::infinity(), {}}, {}, false, 0};
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const FrameSequence*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);

      nn::Tape tape(model.params());
      const nn::Var loss = model.batch_loss(tape, batch, true, rng);
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch starting at " << start;
        throw NumericError(msg.str());
      }
      auto grads = tape.backward(loss);
      clip_gradients(grads, cfg.clip_norm);
      adam.step(model.params(), grads);
      train_sum += value * static_cast<double>(batch.size());
    }

    EpochRecord rec{epoch, train_sum / static_cast<double>(train.size()),
                    mean_loss(model, val, std::max(cfg.batch_size, 64))};
    if (!std::isfinite(rec.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    const double metric = hooks.val_metric ? hooks.val_metric(epoch, rec.val_loss) : rec.val_loss;
    if (stopper.update(metric)) {
      best = model.params();
      best_epoch = epoch;
      best_val = metric;
    }
    if (stopper.should_stop()) {
      result.early_stopped = true;
      break;
    }
  }

  model.params().assign_values(best);
  result.checkpoint = Checkpoint{std::move(model), quantizer, cfg, best_epoch, best_val, rng_state(rng)};
  return result;
}

struct Prepared {
  std::vector<FrameSequence> train, val;
  QuantizerConfig quantizer;
  std::size_t skipped = 0;
};

Prepared prepare(const Corpus& corpus, const TrainConfig& cfg) {
  const auto train_traces = corpus.select(Split::train);
  const auto val_traces = corpus.select(Split::val);
  if (train_traces.empty()) throw InvalidArgument("train split is empty");
  if (val_traces.empty()) throw InvalidArgument("validation split is empty");

  Prepared p;
  if (cfg.v_max > 0.0) {
    p.quantizer = {cfg.model.n_levels, cfg.v_max};
  } else {
    p.quantizer = calibrate_quantizer(train_traces, cfg.model.n_levels);
  }
  auto encode_all = [&](const std::vector<Trace>& traces, std::vector<FrameSequence>& out) {
    for (const auto& t : traces) {
      try {
        auto fs = encode(t, p.quantizer);
        fs.validate(p.quantizer.n_levels);
        out.push_back(std::move(fs));
      } catch (const InvalidArgument&) {
        ++p.skipped;
      }
    }
  };
  encode_all(train_traces, p.train);
  encode_all(val_traces, p.val);
  return p;
}

std::vector<std::string> writers_of(std::span<const FrameSequence> data) {
  std::vector<std::string> w;
  for (const auto& fs : data) w.push_back(fs.writer_id);
  return w;
}

}  // namespace

TrainResult train_sequences(std::span<const FrameSequence> train, std::span<const FrameSequence> val,
                            const QuantizerConfig& quantizer, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  return run_training(StyleAutoencoder(cfg.model, cfg.seed), train, val, quantizer, cfg, hooks);
}

TrainResult train_baseline_sequences(std::span<const FrameSequence> train, std::span<const FrameSequence> val,
                                     const QuantizerConfig& quantizer, const TrainConfig& cfg,
                                     const TrainHooks& hooks) {
  cfg.validate();
  check_sequences(train, "train", quantizer.n_levels);
  return run_training(LetterWriterBaseline(cfg.model, writers_of(train), cfg.seed), train, val, quantizer, cfg,
                      hooks);
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  auto p = prepare(corpus, cfg);
  auto r = train_sequences(p.train, p.val, p.quantizer, cfg, hooks);
  r.skipped_traces = p.skipped;
  return r;
}

TrainResult train_baseline(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  auto p = prepare(corpus, cfg);
  auto r = train_baseline_sequences(p.train, p.val, p.quantizer, cfg, hooks);
  r.skipped_traces = p.skipped;
  return r;
}

double evaluate_loss(const Checkpoint& ckpt, std::span<const FrameSequence> data) {
  if (data.empty()) throw InvalidArgument("evaluate_loss: no sequences");
  return std::visit([&](const auto& m) { return mean_loss(m, data, 64); }, ckpt.model);
}

}  // namespace hwstyle
