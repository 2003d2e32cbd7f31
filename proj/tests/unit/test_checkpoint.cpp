#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "hwstyle/checkpoint.hpp"
#include "hwstyle/error.hpp"
#include "support.hpp"

using namespace hwstyle;

namespace {

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.model.hidden = 8;
  cfg.model.bias_dim = 4;
  cfg.seed = 5;
  cfg.lr = 0.003;
  return cfg;
}

Checkpoint make_autoencoder() {
  const auto cfg = small_train_config();
  QuantizerConfig q;
  q.v_max = 1.75;
  Rng rng(3);
  Checkpoint ck{StyleAutoencoder(cfg.model, 1), q, cfg, 12, 1.25, rng_state(rng)};
  return ck;
}

Checkpoint make_baseline() {
  const auto cfg = small_train_config();
  Checkpoint ck{LetterWriterBaseline(cfg.model, {"w1", "w2"}, 1), QuantizerConfig{}, cfg, 3, 2.5, ""};
  return ck;
}

void check_same(const Checkpoint& a, const Checkpoint& b) {
  CHECK(a.kind() == b.kind());
  CHECK(a.epoch == b.epoch);
  CHECK(a.best_val_loss == b.best_val_loss);
  CHECK(a.rng_state == b.rng_state);
  CHECK(a.quantizer.v_max == b.quantizer.v_max);
  CHECK(a.train.to_json() == b.train.to_json());
  REQUIRE(a.params().size() == b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params()[i].name == b.params()[i].name);
    CHECK(a.params()[i].value == b.params()[i].value);
  }
}

}  // namespace

TEST_CASE("train config defaults") {
  const TrainConfig c;
  CHECK(c.lr == 0.001);
  CHECK(c.patience == 20);
  CHECK(c.batch_size == 32);
  CHECK(c.max_epochs == 500);
  CHECK(c.model.hidden == 128);
  auto bad = c;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(TrainConfig::from_json(small_train_config().to_json()).to_json() == small_train_config().to_json());
}

TEST_CASE("checkpoints round trip bit-exactly") {
  for (const auto& ck : {make_autoencoder(), make_baseline()}) {
    const auto bytes = serialize_checkpoint(ck);
    CHECK(bytes.compare(0, 5, kCheckpointMagic) == 0);
    const auto back = deserialize_checkpoint(bytes);
    check_same(ck, back);
    CHECK(serialize_checkpoint(back) == bytes);
  }
  const auto bl = deserialize_checkpoint(serialize_checkpoint(make_baseline()));
  CHECK(std::get<LetterWriterBaseline>(bl.model).writers() == std::vector<std::string>{"w1", "w2"});
}

TEST_CASE("parameter blocks are little-endian doubles after the header") {
  const auto ck = make_autoencoder();
  const auto bytes = serialize_checkpoint(ck);
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(bytes[5 + static_cast<std::size_t>(i)]);
  const auto header = nlohmann::json::parse(bytes.substr(13, header_len));
  CHECK(header.at("version") == kCheckpointVersion);
  CHECK(header.at("params").size() == ck.params().size());
  std::size_t expected = 13 + header_len;
  for (const auto& p : ck.params()) expected += 8 * static_cast<std::size_t>(p.value.size());
  CHECK(bytes.size() == expected);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 13 + header_len, 8);
  CHECK(first == ck.params()[0].value(0, 0));
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto bytes = serialize_checkpoint(make_autoencoder());
  CHECK_THROWS_AS(deserialize_checkpoint("nope"), InvalidArgument);
  CHECK_THROWS_AS(deserialize_checkpoint("XXXXX" + bytes.substr(5)), InvalidArgument);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)), InvalidArgument);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), InvalidArgument);
}

TEST_CASE("checkpoint files") {
  const auto path = std::filesystem::temp_directory_path() / "hwstyle_ckpt_test.styl";
  const auto ck = make_autoencoder();
  save_checkpoint(path, ck);
  check_same(ck, load_checkpoint(path));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.styl"), IoError);
  CHECK_THROWS_AS(save_checkpoint("/nonexistent/dir/ck.styl", ck), IoError);
}
