#include "pssp/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "pssp/error.hpp"
#include "pssp/random.hpp"

namespace pssp::training {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (batch_size == 0) fail("batch_size must be at least 1");
  if (max_epochs == 0) fail("max_epochs must be at least 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) fail("split_fraction must lie in (0, 1)");
  if (early_stop_patience == 0) fail("early_stop_patience must be at least 1");
  if (plateau_patience == 0) fail("plateau_patience must be at least 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) fail("plateau_factor must lie in (0, 1)");
  if (!(min_lr >= 0.0)) fail("min_lr must be non-negative");
  if (!(adam.lr > 0.0)) fail("learning rate must be positive");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
    fail("Adam betas must lie in (0, 1)");
  }
  if (!(adam.eps > 0.0)) fail("Adam eps must be positive");
}

std::vector<double> History::val_losses() const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.val_loss);
  return out;
}

Decision early_stop_check(std::span<const double> val_losses, std::size_t patience, double min_delta) {
  if (patience == 0) throw Error(ErrorKind::InvalidConfig, "early stopping patience must be at least 1");
  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  for (double loss : val_losses) {
    if (loss < best - min_delta) {
      best = loss;
      wait = 0;
    } else {
      ++wait;
    }
  }
  return wait >= patience ? Decision::Stop : Decision::Continue;
}

Decision early_stop_check(const History& history, std::size_t patience, double min_delta) {
  const auto losses = history.val_losses();
  return early_stop_check(losses, patience, min_delta);
}

PlateauScheduler::PlateauScheduler(double lr, std::size_t patience, double factor, double min_lr, double min_delta)
    : lr_(lr),
      patience_(patience),
      factor_(factor),
      min_lr_(min_lr),
      min_delta_(min_delta),
      best_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw Error(ErrorKind::InvalidConfig, "plateau patience must be at least 1");
  if (!(factor > 0.0 && factor < 1.0)) throw Error(ErrorKind::InvalidConfig, "plateau factor must lie in (0, 1)");
}

double PlateauScheduler::observe(double val_loss) {
  if (!seen_ || val_loss < best_ - min_delta_) {
    best_ = val_loss;
    wait_ = 0;
    seen_ = true;
  } else if (++wait_ >= patience_) {
    lr_ = std::max(lr_ * factor_, min_lr_);
    wait_ = 0;
  }
  return lr_;
}

double plateau_check(std::span<const double> val_losses, double initial_lr, std::size_t patience, double factor,
                     double min_lr, double min_delta) {
  PlateauScheduler sched(initial_lr, patience, factor, min_lr, min_delta);
  for (double loss : val_losses) sched.observe(loss);
  return sched.lr();
}

EvalStats evaluate(const model::Parameters& params, std::span<const WindowSample> windows, std::size_t batch_size,
                   model::Exec exec) {
  EvalStats stats;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const auto end = std::min(windows.size(), start + batch_size);
    idx.clear();
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    const auto batch = model::make_batch(windows, idx);
    const auto pass = model::forward(params, batch, model::Mode::Eval, exec);
    const auto loss = nn::sparse_ce_loss(pass.logits, batch.labels);
    total += loss.loss * static_cast<double>(loss.count);
    stats.tokens += loss.count;
    stats.correct += loss.correct;
  }
  if (stats.tokens == 0) throw Error(ErrorKind::AllIgnored, "no labelled positions to evaluate");
  stats.loss = total / static_cast<double>(stats.tokens);
  stats.accuracy = static_cast<double>(stats.correct) / static_cast<double>(stats.tokens);
  return stats;
}

TrainResult train(const model::ModelConfig& model_config, const TrainConfig& train_config,
                  std::span<const WindowSample> windows, const EpochCallback& on_epoch) {
  train_config.validate();
  if (windows.empty()) throw Error(ErrorKind::DegenerateSplit, "no windows to train on");
  return train_split(model_config, train_config,
                     split_train_val(windows, train_config.split_fraction, train_config.seed, train_config.split_mode),
                     on_epoch);
}

TrainResult train_split(const model::ModelConfig& model_config, const TrainConfig& cfg, Split split,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  model_config.validate();
  if (split.train.empty() || split.val.empty()) {
    throw Error(ErrorKind::DegenerateSplit, "training and validation sets must both be non-empty");
  }

  TrainResult result;
  result.params = model::init_params(model_config);
  auto& params = result.params;

  std::vector<nn::Tensor*> tensors;
  params.for_each([&tensors](const std::string&, nn::Tensor& t) { tensors.push_back(&t); });
  std::vector<nn::AdamState> states;
  states.reserve(tensors.size());
  for (auto* t : tensors) states.push_back(nn::AdamState::for_param(*t, cfg.adam));

  model::Parameters grads = model::zeros_like(params);
  std::vector<nn::Tensor*> grad_tensors;
  grads.for_each([&grad_tensors](const std::string&, nn::Tensor& t) { grad_tensors.push_back(&t); });
  std::vector<model::Parameters> scratch;

  PlateauScheduler plateau(cfg.adam.lr, cfg.plateau_patience, cfg.plateau_factor, cfg.min_lr,
                           cfg.early_stop_min_delta);
  double lr = cfg.adam.lr;
  double best_loss = std::numeric_limits<double>::infinity();
  model::Parameters best;
  std::uint64_t step = 0;

  std::vector<std::size_t> order(split.train.size());
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "shuffle", epoch));
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t tokens = 0, correct = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      const auto batch = model::make_batch(split.train, std::span<const std::size_t>(order).subspan(start, end - start));
      const auto pass = model::forward(params, batch, model::Mode::Train, cfg.exec, step);
      const auto loss = nn::sparse_ce_loss(pass.logits, batch.labels);
      if (!std::isfinite(loss.loss)) {
        throw Error(ErrorKind::NonFiniteLoss,
                    "loss became non-finite at epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_no));
      }
      loss_sum += loss.loss * static_cast<double>(loss.count);
      tokens += loss.count;
      correct += loss.correct;

      model::backward_into(pass, loss.grad_logits, cfg.exec, scratch, grads);
      for (std::size_t t = 0; t < tensors.size(); ++t) {
        states[t].lr = lr;
        nn::adam_step(*tensors[t], *grad_tensors[t], states[t]);
      }
      ++params.version;
      ++step;
    }

    const auto val = evaluate(params, split.val, 256, cfg.exec);
    if (!std::isfinite(val.loss)) {
      throw Error(ErrorKind::NonFiniteLoss, "validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(tokens);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(tokens);
    rec.val_loss = val.loss;
    rec.val_acc = val.accuracy;
    rec.lr = lr;
    if (cfg.record_timing) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val.loss < best_loss) {
      best_loss = val.loss;
      result.history.best_epoch = epoch;
      if (cfg.restore_best) best = params;
    }
    if (early_stop_check(result.history, cfg.early_stop_patience, cfg.early_stop_min_delta) == Decision::Stop) {
      result.history.early_stopped = true;
      break;
    }
    lr = plateau.observe(val.loss);
  }

  if (cfg.restore_best) {
    best.version = params.version + 1;
    params = std::move(best);
  }
  result.split = std::move(split);
  return result;
}

void write_history_csv(std::ostream& out, const History& history) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc,lr,seconds\n";
  char buf[256];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f,%.10f,%.10f,%.8g,%.3f\n", e.epoch, e.train_loss, e.train_acc,
                  e.val_loss, e.val_acc, e.lr, e.seconds);
    out << buf;
  }
}

void write_history_csv(const std::filesystem::path& path, const History& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  write_history_csv(out, history);
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

}  // namespace pssp::training
