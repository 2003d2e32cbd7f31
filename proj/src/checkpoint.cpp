#include "hwstyle/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hwstyle/error.hpp"

namespace hwstyle {

using nlohmann::json;

void TrainConfig::validate() const {
  model.validate();
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (patience <= 0) throw InvalidArgument("patience must be positive");
  if (batch_size <= 0) throw InvalidArgument("batch_size must be positive");
  if (max_epochs <= 0) throw InvalidArgument("max_epochs must be positive");
  if (clip_norm < 0.0) throw InvalidArgument("clip_norm must be non-negative");
  if (v_max < 0.0) throw InvalidArgument("v_max must be non-negative");
}

json TrainConfig::to_json() const {
  return {{"model", model.to_json()}, {"lr", lr},         {"patience", patience},
          {"batch_size", batch_size}, {"max_epochs", max_epochs}, {"seed", seed},
          {"clip_norm", clip_norm},   {"v_max", v_max}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  c.lr = j.value("lr", c.lr);
  c.patience = j.value("patience", c.patience);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.v_max = j.value("v_max", c.v_max);
  c.validate();
  return c;
}

const nn::ParameterStore& Checkpoint::params() const {
  return std::visit([](const auto& m) -> const nn::ParameterStore& { return m.params(); }, model);
}

const ModelConfig& Checkpoint::model_config() const {
  return std::visit([](const auto& m) -> const ModelConfig& { return m.config(); }, model);
}

const FrameDecoder& Checkpoint::decoder() const {
  return std::visit([](const auto& m) -> const FrameDecoder& { return m.decoder(); }, model);
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = kCheckpointMagic;
  header["version"] = kCheckpointVersion;
  header["kind"] = ckpt.kind();
  header["model"] = ckpt.model_config().to_json();
  header["quantizer"] = ckpt.quantizer.to_json();
  header["train"] = ckpt.train.to_json();
  header["epoch"] = ckpt.epoch;
  header["best_val_loss"] = std::isfinite(ckpt.best_val_loss) ? json(ckpt.best_val_loss) : json(nullptr);
  header["rng_state"] = ckpt.rng_state;
  if (const auto* b = std::get_if<LetterWriterBaseline>(&ckpt.model)) header["writers"] = b->writers();
  json shapes = json::array();
  for (const auto& p : ckpt.params()) {
    shapes.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["params"] = std::move(shapes);

  const std::string text = header.dump();
  std::string out(kCheckpointMagic, 5);
  put_u64(out, text.size());
  out += text;
  for (const auto& p : ckpt.params()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(p.value.data()[i]));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 13 || bytes.compare(0, 5, kCheckpointMagic) != 0) {
    throw InvalidArgument("not a STYL1 checkpoint");
  }
  const std::uint64_t header_len = get_u64(bytes, 5);
  if (13 + header_len > bytes.size()) throw InvalidArgument("truncated checkpoint header");
  const json header = json::parse(bytes.substr(13, header_len));
  if (header.value("version", 0) != kCheckpointVersion) throw InvalidArgument("unsupported checkpoint version");

  const ModelConfig mc = ModelConfig::from_json(header.at("model"));
  const std::string kind = header.at("kind").get<std::string>();
  Checkpoint ckpt{kind == "baseline"
                      ? AnyModel(std::in_place_type<LetterWriterBaseline>, mc,
                                 header.at("writers").get<std::vector<std::string>>(), 0)
                      : AnyModel(std::in_place_type<StyleAutoencoder>, mc, 0),
                  QuantizerConfig::from_json(header.at("quantizer")),
                  TrainConfig::from_json(header.at("train")),
                  header.at("epoch").get<int>(),
                  header.at("best_val_loss").is_null() ? std::numeric_limits<double>::infinity()
                                                       : header.at("best_val_loss").get<double>(),
                  header.at("rng_state").get<std::string>()};
  if (kind != "baseline" && kind != "autoencoder") throw InvalidArgument("unknown model kind: " + kind);

  auto& store = std::visit([](auto& m) -> nn::ParameterStore& { return m.params(); }, ckpt.model);
  const auto& shapes = header.at("params");
  if (shapes.size() != store.size()) throw InvalidArgument("checkpoint parameter count mismatch");
  std::size_t at = 13 + header_len;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (shapes[i].at("name").get<std::string>() != p.name || shapes[i].at("rows").get<Eigen::Index>() != p.value.rows() ||
        shapes[i].at("cols").get<Eigen::Index>() != p.value.cols()) {
      throw InvalidArgument("checkpoint parameter mismatch at " + p.name);
    }
    const auto n = static_cast<std::size_t>(p.value.size());
    if (at + 8 * n > bytes.size()) throw InvalidArgument("truncated checkpoint parameters");
    for (std::size_t k = 0; k < n; ++k) p.value.data()[k] = std::bit_cast<double>(get_u64(bytes, at + 8 * k));
    at += 8 * n;
  }
  if (at != bytes.size()) throw InvalidArgument("trailing bytes after checkpoint parameters");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace hwstyle
