#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ksfno/dataset.hpp"
#include "ksfno/error.hpp"
#include "ksfno/field.hpp"
#include "ksfno/fno.hpp"

namespace ksfno {

/// ||pred - target||_2 / ||target||_2 over the grid. Throws ZeroTarget.
double relative_l2(const ScalarField2D& pred, const ScalarField2D& target);
/// Gradient of relative_l2 with respect to pred; zero where pred == target.
std::vector<double> relative_l2_grad(const ScalarField2D& pred, const ScalarField2D& target);
double mse(const ScalarField2D& pred, const ScalarField2D& target);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

/// One Adam update with bias correction at step t >= 1. Weight decay is
/// decoupled: params shrink by lr*weight_decay*param before the Adam step.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               double weight_decay, std::uint64_t t);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t scheduler_step = 30;
  double scheduler_gamma = 0.5;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  std::optional<std::size_t> early_stop_patience = 20;
  /// Worker threads for per-sample forward/backward within a batch. Results
  /// are bitwise independent of this value.
  std::size_t threads = 1;

  void validate() const;
};

/// lr * gamma^floor((epoch - 1) / scheduler_step), epoch >= 1.
double step_lr(std::size_t epoch, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  FnoParams params;  // best validation loss seen (initial params if no epoch ran)
  TrainHistory history;
  double initial_train_loss = 0.0;
  double initial_val_loss = 0.0;
  std::size_t best_epoch = 0;  // 0 when the initial params were never beaten
};

/// Thrown when a loss turns non-finite; carries the history recorded so far.
class TrainingBlowUp : public Error {
 public:
  TrainingBlowUp(const std::string& message, TrainHistory history)
      : Error(ErrorCode::BlowUp, message), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

/// Mean relative L2 of the model over the listed samples.
double mean_relative_l2(const Dataset& ds, std::span<const std::size_t> indices, const FnoParams& params,
                        std::size_t threads = 1);

/// Per-epoch callback for progress reporting.
using EpochObserver = std::function<void(const EpochRecord&)>;

/// Mini-batch training on the train split with validation on the val split.
/// The train order is reshuffled every epoch from (seed, epoch); batch
/// gradients are summed in sample order, so runs are bitwise reproducible.
TrainResult train(const Dataset& ds, const FnoConfig& fno_cfg, const TrainConfig& train_cfg,
                  const EpochObserver& observer = {});

/// Overload starting from given parameters instead of init_params(seed).
TrainResult train(const Dataset& ds, FnoParams initial, const TrainConfig& train_cfg,
                  const EpochObserver& observer = {});

}  // namespace ksfno
