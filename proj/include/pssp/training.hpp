#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pssp/adam.hpp"
#include "pssp/augment.hpp"
#include "pssp/model.hpp"
#include "pssp/split.hpp"

namespace pssp::training {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  double split_fraction = 0.8;
  SplitMode split_mode = SplitMode::WindowLevel;
  std::size_t early_stop_patience = 5;
  double early_stop_min_delta = 1e-4;
  std::size_t plateau_patience = 3;
  double plateau_factor = 0.5;
  double min_lr = 1e-6;
  nn::AdamConfig adam{};
  std::uint64_t seed = 42;
  /// Keep the parameters of the best validation epoch (otherwise the last).
  bool restore_best = true;
  /// Record per-epoch wall time; when false the seconds column is zero and
  /// runs are byte-reproducible.
  bool record_timing = true;
  model::Exec exec = model::Exec::Parallel;

  /// Throws InvalidConfig.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
  double seconds = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct History {
  std::vector<EpochRecord> epochs;
  bool early_stopped = false;
  std::size_t best_epoch = 0;  // 1-based; 0 when empty

  std::vector<double> val_losses() const;
  bool operator==(const History&) const = default;
};

enum class Decision { Continue, Stop };

/// Stop once the latest `patience` epochs all failed to beat the best
/// earlier validation loss by more than `min_delta`.
Decision early_stop_check(std::span<const double> val_losses, std::size_t patience, double min_delta);
Decision early_stop_check(const History& history, std::size_t patience, double min_delta);

/// Learning rate after replaying the plateau rule over `val_losses`: each
/// time `patience` consecutive epochs fail to beat the best loss by more than
/// `min_delta`, lr <- max(lr * factor, min_lr) and the wait count resets.
double plateau_check(std::span<const double> val_losses, double initial_lr, std::size_t patience, double factor,
                     double min_lr, double min_delta = 1e-4);

/// Incremental form of plateau_check used inside the training loop.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, std::size_t patience, double factor, double min_lr, double min_delta);
  /// Feeds one epoch's validation loss and returns the rate for the next.
  double observe(double val_loss);
  double lr() const noexcept { return lr_; }

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  double min_lr_;
  double min_delta_;
  double best_;
  std::size_t wait_ = 0;
  bool seen_ = false;
};

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t tokens = 0;
  std::size_t correct = 0;
};

/// Token-weighted loss and accuracy of `params` over `windows`.
EvalStats evaluate(const model::Parameters& params, std::span<const WindowSample> windows,
                   std::size_t batch_size = 256, model::Exec exec = model::Exec::Parallel);

struct TrainResult {
  model::Parameters params;
  History history;
  Split split;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Splits `windows`, then runs mini-batch Adam on the training side with
/// per-epoch shuffling, EarlyStopping and ReduceLROnPlateau on validation
/// loss. Throws DegenerateSplit, NonFiniteLoss and InvalidConfig.
TrainResult train(const model::ModelConfig& model_config, const TrainConfig& train_config,
                  std::span<const WindowSample> windows, const EpochCallback& on_epoch = {});

/// Trains on already-split data.
TrainResult train_split(const model::ModelConfig& model_config, const TrainConfig& train_config, Split split,
                        const EpochCallback& on_epoch = {});

/// epoch,train_loss,train_acc,val_loss,val_acc,lr,seconds
void write_history_csv(std::ostream& out, const History& history);
void write_history_csv(const std::filesystem::path& path, const History& history);

}  // namespace pssp::training
