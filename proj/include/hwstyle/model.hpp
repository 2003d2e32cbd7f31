#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hwstyle/codec.hpp"
#include "hwstyle/nn/layers.hpp"

namespace hwstyle {

struct ModelConfig {
  int hidden = 128;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int bias_dim = 32;  // style vector / decoder input width
  double encoder_dropout = 0.0;
  double decoder_dropout = 0.2;
  int n_levels = 16;
  int writer_dim = 32;  // baseline only
  int letter_dim = 16;  // baseline only

  void validate() const;
  int stop_class() const { return n_levels; }  // extra class on the direction head
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

struct StyleVector {
  Eigen::VectorXd values;
};

/// Teacher-forced decoder output for a sequence of T frames.
/// `dir` is (T + 1) x (n_levels + 1): rows 0..T-1 predict frames 1..T and
/// row T predicts the stop class. `speed` is T x n_levels.
struct DecoderLogits {
  nn::Tensor2 dir;
  nn::Tensor2 speed;
};

/// Embedding, recurrent stack and the two output heads shared by both
/// model variants. The decoder's input space is the embedding space, so a
/// bias frame of width `bias_dim` can be fed as step 0.
class FrameDecoder {
 public:
  FrameDecoder() = default;
  FrameDecoder(nn::ParameterStore& store, const ModelConfig& cfg, Rng& rng);

  /// Per-step logits for a padded batch, teacher forced. `bias` is B x d.
  struct BatchLogits {
    std::vector<nn::Var> dir;    // step t -> B x (n + 1)
    std::vector<nn::Var> speed;  // step t -> B x n
  };
  BatchLogits forward(nn::Tape& tape, nn::Var bias, std::span<const FrameSequence* const> batch,
                      bool training, Rng& rng) const;

  /// Mean-over-steps, mean-over-batch loss averaged over the two heads.
  nn::Var loss(nn::Tape& tape, const BatchLogits& logits, std::span<const FrameSequence* const> batch) const;

  nn::Var embed_frames(nn::Tape& tape, const std::vector<Frame>& frames) const;

  const ModelConfig& config() const { return cfg_; }
  const nn::GruStack& stack() const { return stack_; }
  const nn::Dense& head_dir() const { return head_dir_; }
  const nn::Dense& head_speed() const { return head_speed_; }

 private:
  ModelConfig cfg_;
  nn::Dense embed_;
  nn::GruStack stack_;
  nn::Dense head_dir_;
  nn::Dense head_speed_;
};

/// Incremental single-sequence decoding, used by the sampler.
class DecoderSession {
 public:
  DecoderSession(const nn::ParameterStore& store, const FrameDecoder& decoder, const Eigen::VectorXd& bias);

  /// Logits for the next frame given everything fed so far.
  const Eigen::VectorXd& dir_logits() const { return dir_; }
  const Eigen::VectorXd& speed_logits() const { return speed_; }
  void feed(const Frame& f);

 private:
  void advance(nn::Var input);

  const FrameDecoder* decoder_;
  nn::Tape tape_;
  nn::GruStack::State state_;
  Rng unused_rng_;
  Eigen::VectorXd dir_, speed_;
};

/// Encoder -> projection(final hidden ++ letter one-hot) -> style vector,
/// fed as the decoder's first input step.
class StyleAutoencoder {
 public:
  StyleAutoencoder(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const FrameDecoder& decoder() const { return decoder_; }

  /// Deterministic; no dropout in the encoder.
  StyleVector encode_style(const FrameSequence& fs) const;
  DecoderLogits decoder_forward(const StyleVector& style, const FrameSequence& fs, bool training,
                                Rng& rng) const;

  /// B x bias_dim node of style vectors for a batch.
  nn::Var encode_batch(nn::Tape& tape, std::span<const FrameSequence* const> batch) const;
  /// Total loss over a batch; the tape must be bound to params().
  nn::Var batch_loss(nn::Tape& tape, std::span<const FrameSequence* const> batch, bool training,
                     Rng& rng) const;

 private:
  ModelConfig cfg_;
  nn::ParameterStore store_;
  nn::GruStack encoder_;
  nn::Dense projection_;
  FrameDecoder decoder_;
};

/// "Letter + writer bias" benchmark: the bias frame is a projection of a
/// writer embedding and a letter embedding. Writers outside the training
/// vocabulary fall back to the mean writer embedding.
class LetterWriterBaseline {
 public:
  LetterWriterBaseline(const ModelConfig& cfg, std::vector<std::string> writers, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return store_; }
  const nn::ParameterStore& params() const { return store_; }
  const FrameDecoder& decoder() const { return decoder_; }
  const std::vector<std::string>& writers() const { return writers_; }
  bool knows_writer(const std::string& writer_id) const;

  struct BiasFrame {
    Eigen::VectorXd values;
    bool used_mean_writer = false;
  };
  BiasFrame bias_frame(const std::string& writer_id, char letter) const;

  struct Output {
    DecoderLogits logits;
    bool used_mean_writer = false;
  };
  Output forward(const std::string& writer_id, const FrameSequence& fs, bool training, Rng& rng) const;

  nn::Var bias_batch(nn::Tape& tape, std::span<const FrameSequence* const> batch) const;
  nn::Var batch_loss(nn::Tape& tape, std::span<const FrameSequence* const> batch, bool training,
                     Rng& rng) const;

 private:
  std::optional<std::size_t> writer_index(const std::string& writer_id) const;

  ModelConfig cfg_;
  std::vector<std::string> writers_;  // sorted
  nn::ParameterStore store_;
  nn::ParamId writer_table_ = 0, letter_table_ = 0;
  nn::Dense projection_;
  FrameDecoder decoder_;
};

nn::Tensor2 letter_one_hot(std::span<const FrameSequence* const> batch);

}  // namespace hwstyle
