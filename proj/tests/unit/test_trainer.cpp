#include <doctest.h>

#include <cmath>

#include "hwstyle/error.hpp"
#include "hwstyle/synth.hpp"
#include "hwstyle/trainer.hpp"
#include "support.hpp"

using namespace hwstyle;
using nn::Tensor2;

namespace {

// -log softmax(row)[k] written out directly
double nll(const Eigen::RowVectorXd& row, int k) {
  double z = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) z += std::exp(row(i));
  return std::log(z) - row(k);
}

TrainConfig small_config(int epochs) {
  TrainConfig cfg;
  cfg.model.hidden = 16;
  cfg.model.bias_dim = 4;
  cfg.model.writer_dim = 8;
  cfg.model.letter_dim = 4;
  cfg.max_epochs = epochs;
  cfg.batch_size = 8;
  cfg.seed = 7;
  return cfg;
}

const Corpus& tiny_corpus() {
  // 2 rotation styles x 20 writers of X
  static const Corpus c = testing::split_corpus(testing::tiny_x_corpus(40, 3), 0, 2);
  return c;
}

}  // namespace

TEST_CASE("sequence_loss limits") {
  const auto fs = testing::make_sequence({{1, 2}, {3, 4}, {0, 15}});
  Tensor2 dir = Tensor2::Constant(3, 16, -1000.0), speed = Tensor2::Constant(3, 16, -1000.0);
  for (int t = 0; t < 3; ++t) {
    dir(t, fs.frames[static_cast<std::size_t>(t)].dir) = 1000.0;
    speed(t, fs.frames[static_cast<std::size_t>(t)].speed) = 1000.0;
  }
  CHECK(sequence_loss(dir, speed, fs) == doctest::Approx(0.0));
  CHECK(sequence_loss(Tensor2::Zero(3, 16), Tensor2::Zero(3, 16), fs) == doctest::Approx(std::log(16.0)).epsilon(1e-12));
  // with the stop row: (ln 17 + ln 16) / 2
  CHECK(sequence_loss(Tensor2::Zero(4, 17), Tensor2::Zero(3, 16), fs) ==
        doctest::Approx(0.5 * (std::log(17.0) + std::log(16.0))).epsilon(1e-12));
  CHECK_THROWS_AS(sequence_loss(Tensor2::Zero(2, 16), Tensor2::Zero(3, 16), fs), InvalidArgument);
  CHECK_THROWS_AS(sequence_loss(Tensor2::Zero(3, 16), Tensor2::Zero(4, 16), fs), InvalidArgument);
}

TEST_CASE("sequence_loss matches a hand computation on three steps") {
  const auto fs = testing::make_sequence({{0, 1}, {2, 0}, {1, 2}});
  Tensor2 dir(4, 4), speed(3, 3);
  dir << 0.5, -1.0, 2.0, 0.0,
         1.0, 1.0, -0.5, 0.3,
         -2.0, 0.7, 0.1, 1.5,
         0.0, 0.2, 0.4, 0.9;
  speed << 0.1, 0.2, 0.3,
           1.0, -1.0, 0.0,
           0.0, 0.0, 2.0;
  const double dir_loss = (nll(dir.row(0), 0) + nll(dir.row(1), 2) + nll(dir.row(2), 1) + nll(dir.row(3), 3)) / 4.0;
  const double speed_loss = (nll(speed.row(0), 1) + nll(speed.row(1), 0) + nll(speed.row(2), 2)) / 3.0;
  CHECK(sequence_loss(dir, speed, fs) == doctest::Approx(0.5 * (dir_loss + speed_loss)).epsilon(1e-14));
}

TEST_CASE("property: swapping the two heads leaves the total unchanged") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto T = 1 + uniform_index(rng, 30);
    const auto fs = testing::random_sequence(rng, T);
    auto swapped = fs;
    for (auto& f : swapped.frames) std::swap(f.dir, f.speed);
    const Tensor2 a = testing::random_tensor(static_cast<Eigen::Index>(T), 16, rng, 2.0);
    const Tensor2 b = testing::random_tensor(static_cast<Eigen::Index>(T), 16, rng, 2.0);
    CHECK(sequence_loss(a, b, fs) == doctest::Approx(sequence_loss(b, a, swapped)).epsilon(1e-13));
  }
}

TEST_CASE("early stopping counts epochs without improvement") {
  EarlyStopping es(3);
  CHECK(es.update(5.0));
  CHECK_FALSE(es.update(5.0));
  CHECK_FALSE(es.update(6.0));
  CHECK_FALSE(es.should_stop());
  CHECK(es.update(4.0));
  CHECK_FALSE(es.update(4.5));
  CHECK_FALSE(es.update(4.5));
  CHECK_FALSE(es.should_stop());
  CHECK_FALSE(es.update(4.5));
  CHECK(es.should_stop());
  CHECK(es.best() == 4.0);
  CHECK_THROWS_AS(EarlyStopping(0), InvalidArgument);
}

TEST_CASE("a validation metric that never improves stops training at epoch 21") {
  auto cfg = small_config(100);
  cfg.model.hidden = 8;
  TrainHooks hooks;
  hooks.val_metric = [](int, double) { return 1.0; };
  const auto r = train(tiny_corpus(), cfg, hooks);
  CHECK(r.early_stopped);
  REQUIRE(r.history.size() == 21);
  CHECK(r.history.back().epoch == 21);
  CHECK(r.checkpoint.epoch == 1);
}

TEST_CASE("training returns the best-validation snapshot") {
  auto cfg = small_config(6);
  cfg.model.hidden = 8;
  TrainHooks hooks;
  hooks.val_metric = [](int epoch, double) { return std::abs(epoch - 3.0); };
  const auto r = train(tiny_corpus(), cfg, hooks);
  CHECK_FALSE(r.early_stopped);
  CHECK(r.history.size() == 6);
  CHECK(r.checkpoint.epoch == 3);
  CHECK(r.checkpoint.best_val_loss == 0.0);
  std::vector<FrameSequence> val;
  for (const auto& t : tiny_corpus().select(Split::val)) val.push_back(encode(t, r.checkpoint.quantizer));
  CHECK(evaluate_loss(r.checkpoint, val) == doctest::Approx(r.history[2].val_loss).epsilon(1e-12));
}

TEST_CASE("training is bit-reproducible per seed") {
  auto cfg = small_config(3);
  cfg.model.hidden = 8;
  const auto a = train(tiny_corpus(), cfg);
  const auto b = train(tiny_corpus(), cfg);
  CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));
  const auto c = train_baseline(tiny_corpus(), cfg);
  const auto d = train_baseline(tiny_corpus(), cfg);
  CHECK(serialize_checkpoint(c.checkpoint) == serialize_checkpoint(d.checkpoint));
  cfg.seed = 8;
  CHECK(serialize_checkpoint(train(tiny_corpus(), cfg).checkpoint) != serialize_checkpoint(a.checkpoint));
}

TEST_CASE("both models beat the uniform baseline on the tiny corpus within 50 epochs") {
  const auto cfg = small_config(50);
  const auto ae = train(tiny_corpus(), cfg);
  INFO("autoencoder best val " << ae.checkpoint.best_val_loss);
  CHECK(ae.checkpoint.best_val_loss < std::log(16.0));
  CHECK(ae.checkpoint.is_autoencoder());
  CHECK(ae.checkpoint.quantizer.v_max > 0.0);

  const auto bl = train_baseline(tiny_corpus(), cfg);
  INFO("baseline best val " << bl.checkpoint.best_val_loss);
  CHECK(bl.checkpoint.best_val_loss < std::log(16.0));
  CHECK_FALSE(bl.checkpoint.is_autoencoder());
  // validation writers are unknown to the baseline, so the mean embedding is used there
  const auto& model = std::get<LetterWriterBaseline>(bl.checkpoint.model);
  for (const auto& t : tiny_corpus().select(Split::val)) CHECK_FALSE(model.knows_writer(t.writer_id));
}

TEST_CASE("a single repeated sequence is memorized") {
  const auto traces = testing::tiny_x_corpus(1, 4);
  const QuantizerConfig q = calibrate_quantizer(traces);
  const auto fs = encode(traces[0], q);
  const std::vector<FrameSequence> data(4, fs);
  auto cfg = small_config(800);
  cfg.model.hidden = 32;
  cfg.model.decoder_dropout = 0.0;
  cfg.lr = 0.01;
  cfg.batch_size = 4;
  cfg.patience = 800;
  const auto r = train_sequences(data, data, q, cfg);
  double lowest = r.history.front().train_loss;
  for (const auto& e : r.history) lowest = std::min(lowest, e.train_loss);
  INFO("lowest train loss " << lowest);
  CHECK(lowest < 0.05);
  CHECK(r.checkpoint.best_val_loss < 0.05);
}

TEST_CASE("held-out sequences score better under their own style vector than another class's") {
  SynthCorpusConfig sc;
  sc.letters = "X";
  sc.writers = 80;
  sc.vary_tempo = true;
  sc.jitter = 0.0005;
  sc.seed = 5;
  const auto corpus = testing::split_corpus(synth_corpus(sc), 0, 2);
  auto cfg = small_config(150);
  cfg.model.hidden = 32;
  cfg.model.bias_dim = 16;
  const auto r = train(corpus, cfg);
  const auto& model = std::get<StyleAutoencoder>(r.checkpoint.model);
  const auto held = corpus.select(Split::val);

  double own = 0.0, other = 0.0;
  int pairs = 0;
  Rng rng(1);
  for (const auto& a : held) {
    const auto fa = encode(a, r.checkpoint.quantizer);
    const auto sa = model.encode_style(fa);
    for (const auto& b : held) {
      if (a.style.at("rotation") == b.style.at("rotation")) continue;
      const auto sb = model.encode_style(encode(b, r.checkpoint.quantizer));
      const auto la = model.decoder_forward(sa, fa, false, rng), lb = model.decoder_forward(sb, fa, false, rng);
      own += sequence_loss(la.dir, la.speed, fa);
      other += sequence_loss(lb.dir, lb.speed, fa);
      ++pairs;
    }
  }
  REQUIRE(pairs > 0);
  INFO("own " << own / pairs << " other " << other / pairs << " over " << pairs << " pairs");
  CHECK(own / pairs < other / pairs);
}

TEST_CASE("training errors") {
  Corpus no_val;
  for (const auto& t : testing::tiny_x_corpus(4)) no_val.add(t, Split::train);
  CHECK_THROWS_AS(train(no_val, small_config(1)), InvalidArgument);

  const auto traces = testing::tiny_x_corpus(2);
  const QuantizerConfig q = calibrate_quantizer(traces);
  std::vector<FrameSequence> data;
  for (const auto& t : traces) data.push_back(encode(t, q));
  auto cfg = small_config(5);
  cfg.lr = 1e305;
  CHECK_THROWS_AS(train_sequences(data, data, q, cfg), NumericError);
}

TEST_CASE("epoch records serialize as one JSON object") {
  const EpochRecord r{4, 1.5, 2.25};
  const auto j = r.to_json();
  CHECK(j.at("epoch") == 4);
  CHECK(j.at("train_loss") == 1.5);
  CHECK(j.at("val_loss") == 2.25);
}
