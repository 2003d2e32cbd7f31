#pragma once

#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hwstyle/checkpoint.hpp"
#include "hwstyle/trace.hpp"

namespace hwstyle {

/// Per-frame NLL averaged over steps for each head, then averaged over the
/// two heads. `dir_logits` has T rows, or T + 1 rows when the last row
/// predicts the stop class (the final column). `speed_logits` has T rows.
double sequence_loss(const nn::Tensor2& dir_logits, const nn::Tensor2& speed_logits, const FrameSequence& fs);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  nlohmann::json to_json() const;
};

/// Stops once `patience` consecutive updates fail to improve on the best
/// (lowest) metric seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);
  /// Returns true when `metric` is a new best.
  bool update(double metric);
  bool should_stop() const { return since_best_ >= patience_; }
  double best() const { return best_; }

 private:
  int patience_;
  int since_best_ = 0;
  double best_;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Replaces the validation loss as the early-stopping metric.
  std::function<double(int epoch, double val_loss)> val_metric;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochRecord> history;
  bool early_stopped = false;
  std::size_t skipped_traces = 0;  // traces that could not be encoded
};

/// Encodes the train/val splits of `corpus` (calibrating v_max on train
/// unless fixed in the config) and trains the conditioned autoencoder.
/// Throws InvalidArgument for an empty split and NumericError for a
/// non-finite loss.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks = {});
TrainResult train_baseline(const Corpus& corpus, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Same loops over pre-encoded sequences.
TrainResult train_sequences(std::span<const FrameSequence> train, std::span<const FrameSequence> val,
                            const QuantizerConfig& quantizer, const TrainConfig& cfg,
                            const TrainHooks& hooks = {});
TrainResult train_baseline_sequences(std::span<const FrameSequence> train, std::span<const FrameSequence> val,
                                     const QuantizerConfig& quantizer, const TrainConfig& cfg,
                                     const TrainHooks& hooks = {});

/// Mean per-sequence total loss with dropout disabled.
double evaluate_loss(const Checkpoint& ckpt, std::span<const FrameSequence> data);

}  // namespace hwstyle
