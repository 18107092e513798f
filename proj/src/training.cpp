#include "ksfno/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ksfno/parallel.hpp"
#include "ksfno/rng.hpp"

namespace ksfno {
namespace {

void check_same_shape(const ScalarField2D& a, const ScalarField2D& b) {
  if (a.n() != b.n()) throw Error(ErrorCode::ShapeMismatch, "prediction and target grids differ");
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Fisher-Yates driven by CounterRng so the order is identical on every
// standard library.
std::vector<std::size_t> shuffled(std::vector<std::size_t> items, std::uint64_t seed, std::uint64_t epoch) {
  CounterRng rng(CounterRng::mix64(seed) ^ CounterRng::mix64(epoch + 0x5eed));
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(items[i - 1], items[j]);
  }
  return items;
}

double relative_l2_values(std::span<const double> pred, std::span<const double> target) {
  const double denom = norm2(target);
  if (denom == 0.0) throw Error(ErrorCode::ZeroTarget, "relative L2 undefined for an all-zero target");
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred[k] - target[k];
    s += d * d;
  }
  return std::sqrt(s) / denom;
}

std::vector<double> relative_l2_grad_values(std::span<const double> pred, std::span<const double> target) {
  const double denom = norm2(target);
  if (denom == 0.0) throw Error(ErrorCode::ZeroTarget, "relative L2 undefined for an all-zero target");
  std::vector<double> diff(pred.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = pred[k] - target[k];
  const double err = norm2(diff);
  if (err == 0.0) return std::vector<double>(diff.size(), 0.0);
  const double scale = 1.0 / (err * denom);
  for (double& d : diff) d *= scale;
  return diff;
}

}  // namespace

double relative_l2(const ScalarField2D& pred, const ScalarField2D& target) {
  check_same_shape(pred, target);
  return relative_l2_values(pred.values(), target.values());
}

std::vector<double> relative_l2_grad(const ScalarField2D& pred, const ScalarField2D& target) {
  check_same_shape(pred, target);
  return relative_l2_grad_values(pred.values(), target.values());
}

double mse(const ScalarField2D& pred, const ScalarField2D& target) {
  check_same_shape(pred, target);
  double s = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred.values()[k] - target.values()[k];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               double weight_decay, std::uint64_t t) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam_step buffers differ in size");
  }
  if (t == 0) throw Error(ErrorCode::InvalidArgument, "adam_step counts steps from 1");
  const double bc1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    params[k] -= lr * weight_decay * params[k];
    state.m[k] = AdamState::kBeta1 * state.m[k] + (1.0 - AdamState::kBeta1) * g;
    state.v[k] = AdamState::kBeta2 * state.v[k] + (1.0 - AdamState::kBeta2) * g * g;
    const double m_hat = state.m[k] / bc1;
    const double v_hat = state.v[k] / bc2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "train.lr must be > 0");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "train.weight_decay must be >= 0");
  if (!(scheduler_gamma > 0.0 && scheduler_gamma <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train.scheduler_gamma must be in (0, 1]");
  }
  if (scheduler_step == 0) throw Error(ErrorCode::InvalidArgument, "train.scheduler_step must be >= 1");
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "train.batch_size must be >= 1");
  if (early_stop_patience && *early_stop_patience == 0) {
    throw Error(ErrorCode::InvalidArgument, "train.patience must be >= 1");
  }
}

double step_lr(std::size_t epoch, const TrainConfig& cfg) {
  if (epoch == 0) throw Error(ErrorCode::InvalidArgument, "epochs count from 1");
  const auto decays = static_cast<double>((epoch - 1) / cfg.scheduler_step);
  return cfg.lr * std::pow(cfg.scheduler_gamma, decays);
}

double mean_relative_l2(const Dataset& ds, std::span<const std::size_t> indices, const FnoParams& params,
                        std::size_t threads) {
  if (indices.empty()) return 0.0;
  std::vector<double> losses(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t k) {
    const Sample& s = ds.samples[indices[k]];
    // Raw outputs: a diverged model must surface as a NaN loss, not as an
    // invalid-field exception.
    losses[k] = relative_l2_values(forward_tape(s.input, params).output, s.target.values());
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

TrainResult train(const Dataset& ds, const FnoConfig& fno_cfg, const TrainConfig& train_cfg,
                  const EpochObserver& observer) {
  return train(ds, init_params(fno_cfg, train_cfg.seed), train_cfg, observer);
}

TrainResult train(const Dataset& ds, FnoParams initial, const TrainConfig& train_cfg, const EpochObserver& observer) {
  train_cfg.validate();
  const FnoConfig& fno_cfg = initial.config();
  fno_cfg.validate();
  if (ds.solver_config.n != fno_cfg.n) {
    throw Error(ErrorCode::ShapeMismatch, "dataset grid does not match model grid");
  }
  const std::vector<std::size_t> train_idx = ds.indices(Split::Train);
  const std::vector<std::size_t> val_idx = ds.indices(Split::Val);
  if (train_idx.empty() || val_idx.empty()) {
    throw Error(ErrorCode::InvalidArgument, "training needs nonempty train and val splits");
  }

  const std::size_t threads = std::max<std::size_t>(1, train_cfg.threads);
  TrainResult result{initial, {}, 0.0, 0.0, 0};
  FnoParams params = std::move(initial);
  result.initial_train_loss = mean_relative_l2(ds, train_idx, params, threads);
  result.initial_val_loss = mean_relative_l2(ds, val_idx, params, threads);
  double best_val = result.initial_val_loss;
  std::size_t since_best = 0;

  AdamState adam(params.size());
  std::uint64_t step = 0;
  std::vector<double> batch_grad(params.size());

  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    const double lr = step_lr(epoch, train_cfg);
    const std::vector<std::size_t> order = shuffled(train_idx, train_cfg.seed, epoch);

    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
      const std::size_t count = std::min(train_cfg.batch_size, order.size() - start);
      const double inv_batch = 1.0 / static_cast<double>(count);
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);

      // Waves of `threads` samples; each wave's gradients are added in
      // sample order so the sum does not depend on the thread count.
      for (std::size_t wave = 0; wave < count; wave += threads) {
        const std::size_t width = std::min(threads, count - wave);
        std::vector<std::vector<double>> grads(width);
        parallel_for(width, width, [&](std::size_t w) {
          const Sample& s = ds.samples[order[start + wave + w]];
          const ForwardTape tape = forward_tape(s.input, params);
          std::vector<double> upstream = relative_l2_grad_values(tape.output, s.target.values());
          for (double& u : upstream) u *= inv_batch;
          const FnoParams g = backward(tape, params, upstream);
          grads[w].assign(g.data().begin(), g.data().end());
        });
        for (const auto& g : grads) {
          for (std::size_t k = 0; k < g.size(); ++k) batch_grad[k] += g[k];
        }
      }
      adam_step(params.data(), batch_grad, adam, lr, train_cfg.weight_decay, ++step);
    }

    EpochRecord rec{epoch, mean_relative_l2(ds, train_idx, params, threads),
                    mean_relative_l2(ds, val_idx, params, threads), lr};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw TrainingBlowUp("loss became non-finite at epoch " + std::to_string(epoch), result.history);
    }
    result.history.epochs.push_back(rec);
    if (observer) observer(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (train_cfg.early_stop_patience && ++since_best >= *train_cfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace ksfno
