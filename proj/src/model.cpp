#include "hwstyle/model.hpp"

#include <algorithm>

#include "hwstyle/error.hpp"

namespace hwstyle {

using nn::Tape;
using nn::Tensor2;
using nn::Var;

void ModelConfig::validate() const {
  if (hidden <= 0 || encoder_layers <= 0 || decoder_layers <= 0 || bias_dim <= 0) {
    throw InvalidArgument("model sizes must be positive");
  }
  if (bias_dim >= hidden) throw InvalidArgument("bias_dim must be smaller than hidden");
  if (encoder_dropout < 0.0 || encoder_dropout >= 1.0 || decoder_dropout < 0.0 || decoder_dropout >= 1.0) {
    throw InvalidArgument("dropout must be in [0, 1)");
  }
  if (n_levels < 2) throw InvalidArgument("n_levels must be >= 2");
  if (writer_dim <= 0 || letter_dim <= 0) throw InvalidArgument("embedding sizes must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"hidden", hidden},
          {"encoder_layers", encoder_layers},
          {"decoder_layers", decoder_layers},
          {"bias_dim", bias_dim},
          {"encoder_dropout", encoder_dropout},
          {"decoder_dropout", decoder_dropout},
          {"n_levels", n_levels},
          {"writer_dim", writer_dim},
          {"letter_dim", letter_dim}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.bias_dim = j.value("bias_dim", c.bias_dim);
  c.encoder_dropout = j.value("encoder_dropout", c.encoder_dropout);
  c.decoder_dropout = j.value("decoder_dropout", c.decoder_dropout);
  c.n_levels = j.value("n_levels", c.n_levels);
  c.writer_dim = j.value("writer_dim", c.writer_dim);
  c.letter_dim = j.value("letter_dim", c.letter_dim);
  c.validate();
  return c;
}

namespace {

std::size_t max_length(std::span<const FrameSequence* const> batch) {
  std::size_t t = 0;
  for (const auto* fs : batch) {
    if (fs->frames.empty()) throw InvalidArgument("empty frame sequence in batch");
    t = std::max(t, fs->frames.size());
  }
  return t;
}

Tensor2 frames_one_hot(std::span<const FrameSequence* const> batch, std::size_t step, int n) {
  Tensor2 x = Tensor2::Zero(static_cast<Eigen::Index>(batch.size()), 2 * n);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (step >= batch[b]->frames.size()) continue;
    const Frame& f = batch[b]->frames[step];
    x(static_cast<Eigen::Index>(b), f.dir) = 1.0;
    x(static_cast<Eigen::Index>(b), n + f.speed) = 1.0;
  }
  return x;
}

DecoderLogits collect(const Tape& tape, const FrameDecoder::BatchLogits& out, std::size_t T) {
  DecoderLogits logits;
  const auto dir_w = tape.value(out.dir[0]).cols();
  const auto speed_w = tape.value(out.speed[0]).cols();
  logits.dir.resize(static_cast<Eigen::Index>(T + 1), dir_w);
  logits.speed.resize(static_cast<Eigen::Index>(T), speed_w);
  for (std::size_t t = 0; t <= T; ++t) {
    logits.dir.row(static_cast<Eigen::Index>(t)) = tape.value(out.dir[t]).row(0);
    if (t < T) logits.speed.row(static_cast<Eigen::Index>(t)) = tape.value(out.speed[t]).row(0);
  }
  return logits;
}

}  // namespace

Tensor2 letter_one_hot(std::span<const FrameSequence* const> batch) {
  Tensor2 x = Tensor2::Zero(static_cast<Eigen::Index>(batch.size()), kNumLetters);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    x(static_cast<Eigen::Index>(b), letter_index(batch[b]->letter)) = 1.0;
  }
  return x;
}

// ---------------------------------------------------------------- decoder

FrameDecoder::FrameDecoder(nn::ParameterStore& store, const ModelConfig& cfg, Rng& rng)
    : cfg_(cfg),
      embed_(store, "decoder.embed", 2 * cfg.n_levels, cfg.bias_dim, rng),
      stack_(store, "decoder.gru", cfg.bias_dim, cfg.hidden, cfg.decoder_layers, cfg.decoder_dropout, rng),
      head_dir_(store, "decoder.head_dir", cfg.hidden, cfg.n_levels + 1, rng),
      head_speed_(store, "decoder.head_speed", cfg.hidden, cfg.n_levels, rng) {}

Var FrameDecoder::embed_frames(Tape& tape, const std::vector<Frame>& frames) const {
  Tensor2 x = Tensor2::Zero(static_cast<Eigen::Index>(frames.size()), 2 * cfg_.n_levels);
  for (std::size_t b = 0; b < frames.size(); ++b) {
    x(static_cast<Eigen::Index>(b), frames[b].dir) = 1.0;
    x(static_cast<Eigen::Index>(b), cfg_.n_levels + frames[b].speed) = 1.0;
  }
  return embed_.forward(tape, tape.constant(std::move(x)));
}

FrameDecoder::BatchLogits FrameDecoder::forward(Tape& tape, Var bias, std::span<const FrameSequence* const> batch,
                                                bool training, Rng& rng) const {
  const std::size_t T = max_length(batch);
  const auto B = static_cast<Eigen::Index>(batch.size());
  if (tape.value(bias).rows() != B || tape.value(bias).cols() != cfg_.bias_dim) {
    throw InvalidArgument("decoder: bias frame has the wrong shape");
  }
  BatchLogits out;
  auto state = stack_.initial_state(tape, B);
  Var input = bias;
  for (std::size_t t = 0; t <= T; ++t) {
    Var top = stack_.step(tape, input, state, training, rng);
    out.dir.push_back(head_dir_.forward(tape, top));
    out.speed.push_back(head_speed_.forward(tape, top));
    if (t < T) {
      input = embed_.forward(tape, tape.constant(frames_one_hot(batch, t, cfg_.n_levels)));
    }
  }
  return out;
}

Var FrameDecoder::loss(Tape& tape, const BatchLogits& logits, std::span<const FrameSequence* const> batch) const {
  const std::size_t B = batch.size();
  const double inv_b = 1.0 / static_cast<double>(B);
  Var total;
  bool first = true;
  for (std::size_t t = 0; t < logits.dir.size(); ++t) {
    std::vector<int> dir_t(B, -1), speed_t(B, -1);
    std::vector<double> dir_w(B, 0.0), speed_w(B, 0.0);
    bool any_speed = false;
    for (std::size_t b = 0; b < B; ++b) {
      const auto& frames = batch[b]->frames;
      const double len = static_cast<double>(frames.size());
      if (t < frames.size()) {
        dir_t[b] = frames[t].dir;
        speed_t[b] = frames[t].speed;
        dir_w[b] = 0.5 * inv_b / (len + 1.0);
        speed_w[b] = 0.5 * inv_b / len;
        any_speed = true;
      } else if (t == frames.size()) {
        dir_t[b] = cfg_.stop_class();
        dir_w[b] = 0.5 * inv_b / (len + 1.0);
      }
    }
    Var step_loss = tape.softmax_nll(logits.dir[t], dir_t, dir_w);
    if (any_speed) step_loss = tape.add(step_loss, tape.softmax_nll(logits.speed[t], speed_t, speed_w));
    total = first ? step_loss : tape.add(total, step_loss);
    first = false;
  }
  return total;
}

// ---------------------------------------------------------------- session

DecoderSession::DecoderSession(const nn::ParameterStore& store, const FrameDecoder& decoder,
                               const Eigen::VectorXd& bias)
    : decoder_(&decoder), tape_(store) {
  if (bias.size() != decoder.config().bias_dim) throw InvalidArgument("bias frame dimension mismatch");
  state_ = decoder.stack().initial_state(tape_, 1);
  Tensor2 b(1, bias.size());
  b.row(0) = bias.transpose();
  advance(tape_.constant(std::move(b)));
}

void DecoderSession::advance(Var input) {
  Var top = decoder_->stack().step(tape_, input, state_, false, unused_rng_);
  dir_ = tape_.value(decoder_->head_dir().forward(tape_, top)).row(0).transpose();
  speed_ = tape_.value(decoder_->head_speed().forward(tape_, top)).row(0).transpose();
}

void DecoderSession::feed(const Frame& f) {
  const int n = decoder_->config().n_levels;
  if (f.dir < 0 || f.dir >= n || f.speed < 0 || f.speed >= n) throw InvalidArgument("frame code out of range");
  advance(decoder_->embed_frames(tape_, {f}));
}

// ---------------------------------------------------------------- autoencoder

StyleAutoencoder::StyleAutoencoder(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(mix_seed(seed, 0xae));
  encoder_ = nn::GruStack(store_, "encoder.gru", 2 * cfg_.n_levels, cfg_.hidden, cfg_.encoder_layers,
                          cfg_.encoder_dropout, rng);
  projection_ = nn::Dense(store_, "encoder.projection", cfg_.hidden + kNumLetters, cfg_.bias_dim, rng);
  decoder_ = FrameDecoder(store_, cfg_, rng);
}

Var StyleAutoencoder::encode_batch(Tape& tape, std::span<const FrameSequence* const> batch) const {
  const std::size_t T = max_length(batch);
  const auto B = static_cast<Eigen::Index>(batch.size());
  auto state = encoder_.initial_state(tape, B);
  Rng no_dropout;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<bool> keep(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) keep[b] = t < batch[b]->frames.size();
    Var x = tape.constant(frames_one_hot(batch, t, cfg_.n_levels));
    encoder_.step(tape, x, state, false, no_dropout, keep);
  }
  Var summary = tape.concat_cols(state.h.back(), tape.constant(letter_one_hot(batch)));
  return projection_.forward(tape, summary);
}

StyleVector StyleAutoencoder::encode_style(const FrameSequence& fs) const {
  fs.validate(cfg_.n_levels, static_cast<std::size_t>(-1));
  Tape tape(store_);
  const FrameSequence* one[] = {&fs};
  Var s = encode_batch(tape, one);
  return {tape.value(s).row(0).transpose()};
}

DecoderLogits StyleAutoencoder::decoder_forward(const StyleVector& style, const FrameSequence& fs, bool training,
                                                Rng& rng) const {
  if (fs.frames.empty()) throw InvalidArgument("decoder_forward: empty frame sequence");
  if (style.values.size() != cfg_.bias_dim) throw InvalidArgument("style vector dimension mismatch");
  Tape tape(store_);
  Tensor2 bias(1, cfg_.bias_dim);
  bias.row(0) = style.values.transpose();
  const FrameSequence* one[] = {&fs};
  auto out = decoder_.forward(tape, tape.constant(std::move(bias)), one, training, rng);
  return collect(tape, out, fs.frames.size());
}

Var StyleAutoencoder::batch_loss(Tape& tape, std::span<const FrameSequence* const> batch, bool training,
                                 Rng& rng) const {
  Var bias = encode_batch(tape, batch);
  return decoder_.loss(tape, decoder_.forward(tape, bias, batch, training, rng), batch);
}

// ---------------------------------------------------------------- baseline

LetterWriterBaseline::LetterWriterBaseline(const ModelConfig& cfg, std::vector<std::string> writers,
                                           std::uint64_t seed)
    : cfg_(cfg), writers_(std::move(writers)) {
  cfg_.validate();
  std::sort(writers_.begin(), writers_.end());
  writers_.erase(std::unique(writers_.begin(), writers_.end()), writers_.end());
  if (writers_.empty()) throw InvalidArgument("baseline needs at least one known writer");
  Rng rng(mix_seed(seed, 0xba));
  const auto W = static_cast<Eigen::Index>(writers_.size());
  writer_table_ = store_.add("baseline.writer_embedding", nn::init_uniform(W, cfg_.writer_dim, W, rng));
  letter_table_ = store_.add("baseline.letter_embedding", nn::init_uniform(kNumLetters, cfg_.letter_dim, kNumLetters, rng));
  projection_ = nn::Dense(store_, "baseline.projection", cfg_.writer_dim + cfg_.letter_dim, cfg_.bias_dim, rng);
  decoder_ = FrameDecoder(store_, cfg_, rng);
}

std::optional<std::size_t> LetterWriterBaseline::writer_index(const std::string& writer_id) const {
  const auto it = std::lower_bound(writers_.begin(), writers_.end(), writer_id);
  if (it == writers_.end() || *it != writer_id) return std::nullopt;
  return static_cast<std::size_t>(it - writers_.begin());
}

bool LetterWriterBaseline::knows_writer(const std::string& writer_id) const {
  return writer_index(writer_id).has_value();
}

Var LetterWriterBaseline::bias_batch(Tape& tape, std::span<const FrameSequence* const> batch) const {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto W = static_cast<Eigen::Index>(writers_.size());
  Tensor2 select = Tensor2::Zero(B, W);
  for (Eigen::Index b = 0; b < B; ++b) {
    if (auto idx = writer_index(batch[static_cast<std::size_t>(b)]->writer_id)) {
      select(b, static_cast<Eigen::Index>(*idx)) = 1.0;
    } else {
      select.row(b).setConstant(1.0 / static_cast<double>(W));
    }
  }
  Var w = tape.matmul(tape.constant(std::move(select)), tape.param(writer_table_));
  Var l = tape.matmul(tape.constant(letter_one_hot(batch)), tape.param(letter_table_));
  return projection_.forward(tape, tape.concat_cols(w, l));
}

LetterWriterBaseline::BiasFrame LetterWriterBaseline::bias_frame(const std::string& writer_id, char letter) const {
  FrameSequence probe;
  probe.writer_id = writer_id;
  probe.letter = letter;
  letter_index(letter);
  Tape tape(store_);
  const FrameSequence* one[] = {&probe};
  Var b = bias_batch(tape, one);
  return {tape.value(b).row(0).transpose(), !knows_writer(writer_id)};
}

LetterWriterBaseline::Output LetterWriterBaseline::forward(const std::string& writer_id, const FrameSequence& fs,
                                                           bool training, Rng& rng) const {
  if (fs.frames.empty()) throw InvalidArgument("baseline forward: empty frame sequence");
  FrameSequence keyed = fs;
  keyed.writer_id = writer_id;
  Tape tape(store_);
  const FrameSequence* one[] = {&keyed};
  Var bias = bias_batch(tape, one);
  auto out = decoder_.forward(tape, bias, one, training, rng);
  return {collect(tape, out, fs.frames.size()), !knows_writer(writer_id)};
}

Var LetterWriterBaseline::batch_loss(Tape& tape, std::span<const FrameSequence* const> batch, bool training,
                                     Rng& rng) const {
  Var bias = bias_batch(tape, batch);
  return decoder_.loss(tape, decoder_.forward(tape, bias, batch, training, rng), batch);
}

}  // namespace hwstyle
