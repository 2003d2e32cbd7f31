#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "hwstyle/error.hpp"
#include "hwstyle/sampler.hpp"
#include "hwstyle/trainer.hpp"
#include "support.hpp"

using namespace hwstyle;

namespace {

ModelConfig tiny_model() {
  ModelConfig m;
  m.hidden = 8;
  m.bias_dim = 4;
  return m;
}

Checkpoint untrained(std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.model = tiny_model();
  return Checkpoint{StyleAutoencoder(cfg.model, seed), QuantizerConfig{}, cfg, 0, 0.0, ""};
}

void set_stop_bias(Checkpoint& ck, double value) {
  auto& store = std::get<StyleAutoencoder>(ck.model).params();
  store[store.find("decoder.head_dir.bias")].value(0, 16) = value;
}

int argmax(const Eigen::VectorXd& v, Eigen::Index n) {
  Eigen::Index i = 0;
  v.head(n).maxCoeff(&i);
  return static_cast<int>(i);
}

// Trains the tiny model on one sequence until it reproduces it.
struct Memorized {
  Checkpoint ckpt;
  FrameSequence fs;
};

const Memorized& memorized() {
  static const Memorized m = [] {
    const auto traces = testing::tiny_x_corpus(1, 4);
    const QuantizerConfig q = calibrate_quantizer(traces);
    const auto fs = encode(traces[0], q);
    const std::vector<FrameSequence> data(4, fs);
    TrainConfig cfg;
    cfg.model.hidden = 32;
    cfg.model.bias_dim = 4;
    cfg.model.decoder_dropout = 0.0;
    cfg.lr = 0.01;
    cfg.batch_size = 4;
    cfg.max_epochs = 800;
    cfg.patience = 800;
    cfg.seed = 7;
    return Memorized{train_sequences(data, data, q, cfg).checkpoint, fs};
  }();
  return m;
}

}  // namespace

TEST_CASE("sample frequencies follow softmax(logits / T)") {
  Eigen::VectorXd logits(16);
  Rng init(3);
  for (auto& v : logits) v = normal(init);
  const double T = 0.5;
  const Eigen::VectorXd p = nn::softmax(logits, T);
  constexpr int kDraws = 10000;
  std::vector<int> counts(16, 0);
  Rng rng(11);
  for (int i = 0; i < kDraws; ++i) ++counts[static_cast<std::size_t>(sample_categorical(logits, T, rng))];
  double chi2 = 0.0;
  for (int k = 0; k < 16; ++k) {
    const double expected = kDraws * p(k);
    chi2 += (counts[static_cast<std::size_t>(k)] - expected) * (counts[static_cast<std::size_t>(k)] - expected) / expected;
  }
  const boost::math::chi_squared dist(15);
  const double pvalue = boost::math::cdf(boost::math::complement(dist, chi2));
  INFO("chi2 " << chi2 << " p " << pvalue);
  CHECK(pvalue > 0.01);
}

TEST_CASE("restricting the class count excludes the tail") {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(17);
  logits(16) = 50.0;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) CHECK(sample_categorical(logits, 1.0, rng, 16) < 16);
  CHECK(sample_categorical(logits, 1.0, rng) == 16);
}

TEST_CASE("low temperature sampling is greedy decoding") {
  Eigen::VectorXd logits(5);
  logits << 0.1, 0.3, 0.29, -1.0, 0.0;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) CHECK(sample_categorical(logits, 1e-6, rng) == 1);

  const auto ck = untrained(3);
  const StyleVector style{Eigen::VectorXd::LinSpaced(4, -1.0, 1.0)};
  SamplerConfig cfg;
  cfg.temperature = 1e-6;
  cfg.n_max = 30;
  const auto got = generate(ck, style, 'X', cfg);
  DecoderSession session(ck.params(), ck.decoder(), style.values);
  std::vector<Frame> greedy;
  while (static_cast<int>(greedy.size()) < cfg.n_max) {
    const int dir = argmax(session.dir_logits(), greedy.empty() ? 16 : 17);
    const int speed = argmax(session.speed_logits(), 16);
    if (dir == 16) break;
    greedy.push_back({dir, speed});
    session.feed(greedy.back());
  }
  CHECK(got.frames == greedy);
}

TEST_CASE("generation respects n_max and is deterministic per seed") {
  auto ck = untrained(4);
  set_stop_bias(ck, -1e9);
  const StyleVector style{Eigen::VectorXd::Ones(4)};
  SamplerConfig cfg;
  cfg.n_max = 5;
  CHECK(generate(ck, style, 'A', cfg).size() == 5);

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    SamplerConfig c;
    c.n_max = 1 + static_cast<int>(uniform_index(rng, 120));
    c.temperature = uniform(rng, 0.1, 3.0);
    c.seed = rng();
    const auto a = generate(untrained(trial), style, 'S', c);
    CHECK(a.size() >= 1);
    CHECK(static_cast<int>(a.size()) <= c.n_max);
    CHECK(a.frames == generate(untrained(trial), style, 'S', c).frames);
    for (const auto& f : a.frames) {
      CHECK(f.dir >= 0);
      CHECK(f.dir < 16);
      CHECK(f.speed >= 0);
      CHECK(f.speed < 16);
    }
  }
}

TEST_CASE("the first step never stops") {
  auto ck = untrained(5);
  set_stop_bias(ck, 1e9);
  const StyleVector style{Eigen::VectorXd::Zero(4)};
  CHECK(generate(ck, style, 'C', SamplerConfig{}).size() == 1);
}

TEST_CASE("sampler argument checks") {
  const auto ck = untrained();
  SamplerConfig bad;
  bad.temperature = 0.0;
  CHECK_THROWS_AS(generate(ck, StyleVector{Eigen::VectorXd::Zero(4)}, 'X', bad), InvalidArgument);
  CHECK_THROWS_AS(generate(ck, StyleVector{Eigen::VectorXd::Zero(3)}, 'X', SamplerConfig{}), InvalidArgument);
  CHECK_THROWS_AS(generate(ck, StyleVector{Eigen::VectorXd::Zero(4)}, 'x', SamplerConfig{}), InvalidArgument);
}

TEST_CASE("greedy reconstruction recovers a memorized sequence") {
  const auto& m = memorized();
  SamplerConfig cfg;
  cfg.temperature = 1e-3;
  const auto out = reconstruct_letter(m.ckpt, m.fs, cfg);
  CHECK(out.frames == m.fs.frames);
  CHECK(out.writer_id == m.fs.writer_id);
  CHECK(out.initial_heading == m.fs.initial_heading);
  CHECK(out.origin_x == m.fs.origin_x);
}

TEST_CASE("sampled lengths on a trained model are model-determined") {
  const auto& m = memorized();
  SamplerConfig cfg;
  int capped = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    const auto out = reconstruct_letter(m.ckpt, m.fs, cfg);
    capped += static_cast<int>(out.size()) == cfg.n_max;
  }
  CHECK(capped < 20);
}

TEST_CASE("baseline reconstruction reports the mean-writer fallback") {
  TrainConfig cfg;
  cfg.model = tiny_model();
  const Checkpoint ck{LetterWriterBaseline(cfg.model, {"w1"}, 1), QuantizerConfig{}, cfg, 0, 0.0, ""};
  auto fs = testing::make_sequence({{0, 0}, {1, 1}});
  bool fallback = false;
  fs.writer_id = "w1";
  reconstruct_letter(ck, fs, SamplerConfig{}, &fallback);
  CHECK_FALSE(fallback);
  fs.writer_id = "stranger";
  reconstruct_letter(ck, fs, SamplerConfig{}, &fallback);
  CHECK(fallback);
  CHECK_THROWS_AS(generate(ck, StyleVector{Eigen::VectorXd::Zero(4)}, 'X', SamplerConfig{}), InvalidArgument);
}
