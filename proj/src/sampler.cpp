#include "hwstyle/sampler.hpp"

#include <cmath>

#include "hwstyle/error.hpp"

namespace hwstyle {

void SamplerConfig::validate() const {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (n_max < 1) throw InvalidArgument("n_max must be >= 1");
}

int sample_categorical(const Eigen::VectorXd& logits, double temperature, Rng& rng, int n_classes) {
  const Eigen::Index n = n_classes > 0 ? std::min<Eigen::Index>(n_classes, logits.size()) : logits.size();
  if (n == 0) throw InvalidArgument("sample_categorical: no classes");
  const Eigen::VectorXd p = nn::softmax(logits.head(n), temperature);
  const double u = uniform01(rng);
  double cum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cum += p(i);
    if (u < cum) return static_cast<int>(i);
  }
  // Rounding left u above the final cumulative sum: take the last class
  // with non-zero mass.
  for (Eigen::Index i = n; i-- > 0;) {
    if (p(i) > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

FrameSequence generate_from_bias(const Checkpoint& ckpt, const Eigen::VectorXd& bias, char letter,
                                 const SamplerConfig& cfg) {
  cfg.validate();
  letter_index(letter);
  const int n = ckpt.model_config().n_levels;
  DecoderSession session(ckpt.params(), ckpt.decoder(), bias);
  Rng rng(mix_seed(cfg.seed, 0x5a));

  FrameSequence out;
  out.letter = letter;
  while (static_cast<int>(out.frames.size()) < cfg.n_max) {
    // At least one frame is always emitted, so the stop class is masked out
    // of the first draw.
    const int dir = sample_categorical(session.dir_logits(), cfg.temperature, rng,
                                       out.frames.empty() ? n : n + 1);
    const int speed = sample_categorical(session.speed_logits(), cfg.temperature, rng);
    if (dir == n) break;
    out.frames.push_back({dir, speed});
    if (static_cast<int>(out.frames.size()) < cfg.n_max) session.feed(out.frames.back());
  }
  return out;
}

FrameSequence generate(const Checkpoint& ckpt, const StyleVector& style, char letter, const SamplerConfig& cfg) {
  if (!ckpt.is_autoencoder()) throw InvalidArgument("generate needs an autoencoder checkpoint");
  if (style.values.size() != ckpt.model_config().bias_dim) {
    throw InvalidArgument("style vector dimension does not match the checkpoint");
  }
  return generate_from_bias(ckpt, style.values, letter, cfg);
}

FrameSequence reconstruct_letter(const Checkpoint& ckpt, const FrameSequence& fs, const SamplerConfig& cfg,
                                 bool* used_mean_writer) {
  Eigen::VectorXd bias;
  bool fallback = false;
  if (const auto* ae = std::get_if<StyleAutoencoder>(&ckpt.model)) {
    bias = ae->encode_style(fs).values;
  } else {
    const auto frame = std::get<LetterWriterBaseline>(ckpt.model).bias_frame(fs.writer_id, fs.letter);
    bias = frame.values;
    fallback = frame.used_mean_writer;
  }
  if (used_mean_writer) *used_mean_writer = fallback;
  FrameSequence out = generate_from_bias(ckpt, bias, fs.letter, cfg);
  out.writer_id = fs.writer_id;
  out.initial_heading = fs.initial_heading;
  out.initial_speed = fs.initial_speed;
  out.origin_x = fs.origin_x;
  out.origin_y = fs.origin_y;
  out.sample_rate_hz = fs.sample_rate_hz;
  return out;
}

}  // namespace hwstyle
