#include <doctest.h>

#include "hwstyle/error.hpp"
#include "hwstyle/model.hpp"
#include "hwstyle/nn/tape.hpp"
#include "hwstyle/trainer.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace hwstyle;
using hwstyle::testing::random_sequence;

namespace {

ModelConfig tiny_config() { return testing::gradcheck_model_config(); }

std::vector<const FrameSequence*> pointers(const std::vector<FrameSequence>& v) {
  std::vector<const FrameSequence*> out;
  for (const auto& fs : v) out.push_back(&fs);
  return out;
}

}  // namespace

TEST_CASE("model config defaults and validation") {
  const ModelConfig c;
  CHECK(c.hidden == 128);
  CHECK(c.encoder_layers == 2);
  CHECK(c.decoder_layers == 2);
  CHECK(c.encoder_dropout == 0.0);
  CHECK(c.decoder_dropout == 0.2);
  CHECK(c.bias_dim == 32);
  CHECK(c.stop_class() == 16);
  auto bad = c;
  bad.bias_dim = 128;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.decoder_dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  const auto back = ModelConfig::from_json(tiny_config().to_json());
  CHECK(back.to_json() == tiny_config().to_json());
}

TEST_CASE("property: logits shapes for any length 1..99") {
  auto cfg = tiny_config();
  StyleAutoencoder ae(cfg, 1);
  LetterWriterBaseline bl(cfg, {"a", "b"}, 1);
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto T = 1 + uniform_index(rng, 99);
    const auto fs = random_sequence(rng, T);
    const auto style = ae.encode_style(fs);
    CHECK(style.values.size() == 4);
    const auto out = ae.decoder_forward(style, fs, false, rng);
    CHECK(out.dir.rows() == static_cast<Eigen::Index>(T + 1));
    CHECK(out.dir.cols() == 17);
    CHECK(out.speed.rows() == static_cast<Eigen::Index>(T));
    CHECK(out.speed.cols() == 16);
    const auto b = bl.forward("a", fs, false, rng);
    CHECK(b.logits.dir.rows() == static_cast<Eigen::Index>(T + 1));
    CHECK(b.logits.speed.rows() == static_cast<Eigen::Index>(T));
  }
}

TEST_CASE("a single frame decodes from the bias step alone") {
  StyleAutoencoder ae(tiny_config(), 2);
  Rng rng(1);
  const auto fs = testing::make_sequence({{3, 7}});
  const auto out = ae.decoder_forward(ae.encode_style(fs), fs, false, rng);
  CHECK(out.dir.rows() == 2);
  CHECK(out.speed.rows() == 1);
  const Eigen::VectorXd p = nn::softmax(out.dir.row(0).transpose());
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ae.decoder_forward(ae.encode_style(fs), testing::make_sequence({}), false, rng), InvalidArgument);
}

TEST_CASE("encode_style is deterministic and letter-conditioned") {
  StyleAutoencoder ae(tiny_config(), 5);
  Rng rng(9);
  const auto fs = random_sequence(rng, 12);
  const auto a = ae.encode_style(fs);
  const auto b = ae.encode_style(fs);
  CHECK(a.values == b.values);
  auto other = fs;
  other.letter = fs.letter == 'A' ? 'B' : 'A';
  CHECK(ae.encode_style(other).values != a.values);
  auto bad = fs;
  bad.letter = '?';
  CHECK_THROWS_AS(ae.encode_style(bad), InvalidArgument);
}

TEST_CASE("zero weights give the projection bias as the style vector") {
  StyleAutoencoder ae(tiny_config(), 6);
  for (auto& p : ae.params()) p.value.setZero();
  Rng rng(2);
  auto& bias = ae.params()[ae.params().find("encoder.projection.bias")].value;
  bias = testing::random_tensor(1, 4, rng);
  const auto style = ae.encode_style(random_sequence(rng, 20));
  for (int i = 0; i < 4; ++i) CHECK(style.values(i) == bias(0, i));
}

TEST_CASE("eval mode is deterministic and training mode applies dropout") {
  auto cfg = tiny_config();
  cfg.decoder_dropout = 0.5;
  StyleAutoencoder ae(cfg, 7);
  Rng rng(4);
  const auto fs = random_sequence(rng, 15);
  const auto style = ae.encode_style(fs);
  Rng r1(1), r2(2);
  CHECK(ae.decoder_forward(style, fs, false, r1).dir == ae.decoder_forward(style, fs, false, r2).dir);
  Rng r3(1), r4(2);
  CHECK(ae.decoder_forward(style, fs, true, r3).dir != ae.decoder_forward(style, fs, true, r4).dir);
}

TEST_CASE("batched loss equals the mean of per-sequence losses") {
  StyleAutoencoder ae(tiny_config(), 8);
  LetterWriterBaseline bl(tiny_config(), {"w"}, 8);
  Rng rng(10);
  std::vector<FrameSequence> data;
  for (std::size_t T : {1, 5, 9, 2, 30}) data.push_back(random_sequence(rng, T));
  double ae_mean = 0, bl_mean = 0;
  for (const auto& fs : data) {
    const auto out = ae.decoder_forward(ae.encode_style(fs), fs, false, rng);
    ae_mean += sequence_loss(out.dir, out.speed, fs) / static_cast<double>(data.size());
    const auto b = bl.forward(fs.writer_id, fs, false, rng);
    bl_mean += sequence_loss(b.logits.dir, b.logits.speed, fs) / static_cast<double>(data.size());
  }
  const auto batch = pointers(data);
  nn::Tape t1(ae.params());
  CHECK(t1.value(ae.batch_loss(t1, batch, false, rng))(0, 0) == doctest::Approx(ae_mean).epsilon(1e-12));
  nn::Tape t2(bl.params());
  CHECK(t2.value(bl.batch_loss(t2, batch, false, rng))(0, 0) == doctest::Approx(bl_mean).epsilon(1e-12));
}

TEST_CASE("end-to-end gradient check of the tiny autoencoder") {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    StyleAutoencoder ae(tiny_config(), rng());
    std::vector<FrameSequence> data{random_sequence(rng, 5), random_sequence(rng, 5), random_sequence(rng, 3)};
    const auto res = testing::gradcheck_model(ae, data, trial == 2);
    INFO("worst " << res.worst << " at " << res.where);
    CHECK(res.checked == ae.params().scalar_count());
    CHECK(res.worst < testing::kGradTol);
  }
}

TEST_CASE("end-to-end gradient check of the tiny baseline") {
  Rng rng(22);
  LetterWriterBaseline bl(tiny_config(), {"a", "b", "c"}, 3);
  std::vector<FrameSequence> data{random_sequence(rng, 5), random_sequence(rng, 4), random_sequence(rng, 5)};
  data[0].writer_id = "a";
  data[1].writer_id = "c";
  data[2].writer_id = "unknown";  // exercises the mean-embedding path
  const auto res = testing::gradcheck_model(bl, data, true);
  INFO("worst " << res.worst << " at " << res.where);
  CHECK(res.worst < testing::kGradTol);
}

TEST_CASE("baseline falls back to the mean writer embedding") {
  LetterWriterBaseline bl(tiny_config(), {"b", "a", "b"}, 11);
  CHECK(bl.writers() == std::vector<std::string>{"a", "b"});
  CHECK(bl.knows_writer("a"));
  CHECK_FALSE(bl.knows_writer("z"));

  const auto known = bl.bias_frame("a", 'X');
  CHECK_FALSE(known.used_mean_writer);
  const auto unknown = bl.bias_frame("z", 'X');
  CHECK(unknown.used_mean_writer);

  const auto& store = bl.params();
  const auto& writers = store[store.find("baseline.writer_embedding")].value;
  const auto& letters = store[store.find("baseline.letter_embedding")].value;
  const auto& w = store[store.find("baseline.projection.weight")].value;
  const auto& b = store[store.find("baseline.projection.bias")].value;
  Eigen::RowVectorXd in(writers.cols() + letters.cols());
  in << writers.colwise().mean(), letters.row(letter_index('X'));
  const Eigen::RowVectorXd expected = in * w + b;
  for (int i = 0; i < 4; ++i) CHECK(unknown.values(i) == doctest::Approx(expected(i)).epsilon(1e-12));

  Rng rng(1);
  const auto fs = random_sequence(rng, 6);
  const auto out = bl.forward("z", fs, false, rng);
  CHECK(out.used_mean_writer);
  CHECK(out.logits.dir == bl.forward("z", fs, false, rng).logits.dir);
  CHECK_THROWS_AS(LetterWriterBaseline(tiny_config(), {}, 1), InvalidArgument);
}

TEST_CASE("mismatched style dimension is rejected") {
  StyleAutoencoder ae(tiny_config(), 1);
  Rng rng(1);
  const auto fs = random_sequence(rng, 4);
  StyleVector wrong{Eigen::VectorXd::Zero(5)};
  CHECK_THROWS_AS(ae.decoder_forward(wrong, fs, false, rng), InvalidArgument);
}
