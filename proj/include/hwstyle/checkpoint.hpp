#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "hwstyle/codec.hpp"
#include "hwstyle/model.hpp"

namespace hwstyle {

struct TrainConfig {
  ModelConfig model;
  double lr = 0.001;
  int patience = 20;  // epochs without validation improvement
  int batch_size = 32;
  int max_epochs = 500;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
  double v_max = 0.0;      // fixed speed ceiling; 0 calibrates on the train split

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

using AnyModel = std::variant<StyleAutoencoder, LetterWriterBaseline>;

struct Checkpoint {
  AnyModel model;
  QuantizerConfig quantizer;
  TrainConfig train;
  int epoch = 0;  // epoch at which the stored parameters were best
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::string rng_state;

  bool is_autoencoder() const { return std::holds_alternative<StyleAutoencoder>(model); }
  std::string_view kind() const { return is_autoencoder() ? "autoencoder" : "baseline"; }
  const nn::ParameterStore& params() const;
  const ModelConfig& model_config() const;
  const FrameDecoder& decoder() const;
};

inline constexpr char kCheckpointMagic[] = "STYL1";
inline constexpr int kCheckpointVersion = 1;

// Layout: 5 magic bytes "STYL1", u64 little-endian header length, UTF-8
// JSON header, then every parameter as little-endian f64 in row-major
// order, in the order listed under header["params"].
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hwstyle
