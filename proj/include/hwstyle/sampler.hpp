#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "hwstyle/checkpoint.hpp"

namespace hwstyle {

struct SamplerConfig {
  double temperature = 0.5;
  int n_max = 100;  // cap on generated frames (the bias step is not counted)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws from softmax(logits / temperature). Only the first `n_classes`
/// entries are eligible when n_classes > 0.
int sample_categorical(const Eigen::VectorXd& logits, double temperature, Rng& rng, int n_classes = 0);

/// Autoregressive sampling from a bias frame: two independent categorical
/// draws per step, fed back as the next input. Stops on the stop class
/// (never at the first step) or after cfg.n_max frames. Geometry sidecar
/// fields of the result are left at their defaults.
FrameSequence generate_from_bias(const Checkpoint& ckpt, const Eigen::VectorXd& bias, char letter,
                                 const SamplerConfig& cfg);

/// Autoencoder only: style vector in, frames out.
FrameSequence generate(const Checkpoint& ckpt, const StyleVector& style, char letter, const SamplerConfig& cfg);

/// Regenerates `fs`: the autoencoder conditions on encode_style(fs); the
/// baseline conditions on (fs.writer_id, fs.letter). Writer id, letter and
/// geometry sidecar are copied from `fs` so the result can be decoded in
/// place of the original. `used_mean_writer` is set for baseline fallbacks.
FrameSequence reconstruct_letter(const Checkpoint& ckpt, const FrameSequence& fs, const SamplerConfig& cfg,
                                 bool* used_mean_writer = nullptr);

}  // namespace hwstyle
