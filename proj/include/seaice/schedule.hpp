#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"
#include "seaice/loss_spec.hpp"

namespace seaice {

struct TrainingConfig {
  int batch_size = 24;
  std::string optimizer = "adam";
  double lr_init = 1e-5;
  double lr_factor = 0.1;
  int lr_patience_epochs = 5;
  double lr_min = 1e-8;
  int early_stop_patience_epochs = 20;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  LossSpec loss;
  int max_epochs = 500;

  void validate() const {
    if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
    if (optimizer != "adam") throw ConfigError("train.optimizer: only 'adam' is supported");
    if (!(lr_min > 0.0 && lr_min <= lr_init)) throw ConfigError("need 0 < train.lr_min <= train.lr_init");
    if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("train.lr_factor must be in (0, 1)");
    if (lr_patience_epochs <= 0 || early_stop_patience_epochs <= 0) {
      throw ConfigError("patience values must be positive");
    }
    if (seeds.empty()) throw ConfigError("train.seeds must not be empty");
    if (max_epochs <= 0) throw ConfigError("train.max_epochs must be positive");
    loss.validate();
  }

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

inline nlohmann::json to_json(const TrainingConfig& c) {
  return {{"batch_size", c.batch_size},
          {"optimizer", c.optimizer},
          {"lr_init", c.lr_init},
          {"lr_factor", c.lr_factor},
          {"lr_patience_epochs", c.lr_patience_epochs},
          {"lr_min", c.lr_min},
          {"early_stop_patience_epochs", c.early_stop_patience_epochs},
          {"seeds", c.seeds},
          {"max_epochs", c.max_epochs},
          {"loss",
           {{"kind", to_string(c.loss.kind)},
            {"focal_gamma", c.loss.focal_gamma},
            {"focal_alpha", c.loss.focal_alpha},
            {"dice_smooth", c.loss.dice_smooth},
            {"ignore_value", c.loss.ignore_value}}}};
}

/// Outcome of feeding one epoch's validation loss to the schedule.
struct ScheduleStep {
  bool improved = false;
  bool lr_reduced = false;
  bool stop = false;
  double next_lr = 0.0;
};

/// Reduce-on-plateau learning rate with early stopping. An epoch improves
/// only if its validation loss is strictly below the best so far. The LR is
/// multiplied by `lr_factor` once `lr_patience_epochs` epochs pass without
/// improvement (the counter restarts after each reduction), never going
/// below `lr_min`. Training stops after `early_stop_patience_epochs` epochs
/// without improvement or at `max_epochs`.
class PlateauSchedule {
 public:
  explicit PlateauSchedule(const TrainingConfig& config)
      : lr_factor_(config.lr_factor),
        lr_min_(config.lr_min),
        lr_patience_(config.lr_patience_epochs),
        stop_patience_(config.early_stop_patience_epochs),
        max_epochs_(config.max_epochs),
        lr_(config.lr_init) {}

  double lr() const noexcept { return lr_; }
  double best_loss() const noexcept { return best_; }
  int best_epoch() const noexcept { return best_epoch_; }
  int epochs_since_improvement() const noexcept { return since_improvement_; }

  ScheduleStep observe(int epoch, double val_loss) {
    ScheduleStep step;
    if (val_loss < best_) {
      best_ = val_loss;
      best_epoch_ = epoch;
      since_improvement_ = 0;
      plateau_ = 0;
      step.improved = true;
    } else {
      ++since_improvement_;
      ++plateau_;
    }
    if (plateau_ >= lr_patience_) {
      // Snap to the floor so that repeated scaling (1e-5 * 0.1^3) lands on
      // lr_min exactly instead of a rounding error above it.
      double reduced = lr_ * lr_factor_;
      if (reduced <= lr_min_ * (1.0 + 1e-9)) reduced = lr_min_;
      if (reduced < lr_ * (1.0 - 1e-9)) {
        lr_ = reduced;
        step.lr_reduced = true;
      }
      plateau_ = 0;
    }
    step.stop = since_improvement_ >= stop_patience_ || epoch >= max_epochs_;
    step.next_lr = lr_;
    return step;
  }

 private:
  double lr_factor_;
  double lr_min_;
  int lr_patience_;
  int stop_patience_;
  int max_epochs_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int since_improvement_ = 0;
  int plateau_ = 0;
};

}  // namespace seaice
