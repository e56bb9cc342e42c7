#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

struct SGDConfig {
  double learning_rate = 0.01;
  double momentum = 0.0;
  /// applied to regularized (convolution) parameters only
  double l1_weight = 1e-4;
  int plateau_patience = 5;
  double plateau_factor = 0.1;
  double min_delta = 1e-3;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("sgd: learning_rate must be positive");
    if (!(momentum >= 0.0)) throw ConfigError("sgd: momentum must be non-negative");
    if (!(l1_weight >= 0.0)) throw ConfigError("sgd: l1_weight must be non-negative");
    if (plateau_patience <= 0) throw ConfigError("sgd: plateau_patience must be positive");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("sgd: plateau_factor must lie in (0, 1)");
    if (!(min_delta >= 0.0)) throw ConfigError("sgd: min_delta must be non-negative");
  }
};

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/**
 * Momentum SGD with an L1 subgradient on convolution weights:
 *   g' = grad + l1_weight * sign(w)   (regularized parameters only)
 *   v  = momentum * v - lr * g'
 *   w += v
 * Velocities are bound to the parameter order of the first step.
 */
class SGD {
 public:
  explicit SGD(SGDConfig cfg) : cfg_(cfg), lr_(cfg.learning_rate) { cfg_.validate(); }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  const SGDConfig& config() const { return cfg_; }

  void step(std::span<Parameter* const> params) {
    if (velocity_.empty()) {
      velocity_.reserve(params.size());
      for (const auto* p : params) velocity_.push_back(zeros_like(p->value));
    }
    if (velocity_.size() != params.size()) throw ConsistencyError("sgd: parameter set changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      Parameter& p = *params[i];
      Tensor& v = velocity_[i];
      const double l1 = p.regularized ? cfg_.l1_weight : 0.0;
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = l1 != 0.0 ? p.grad[j] + l1 * sign(p.value[j]) : p.grad[j];
        v[j] = cfg_.momentum * v[j] - lr_ * g;
        if (v[j] != 0.0) p.value[j] += v[j];
      }
    }
  }

 private:
  SGDConfig cfg_;
  double lr_;
  std::vector<Tensor> velocity_;
};

/// Incremental reduce-on-plateau rule over per-epoch monitored losses.
class PlateauTracker {
 public:
  explicit PlateauTracker(const SGDConfig& cfg) : cfg_(cfg), lr_(cfg.learning_rate) {}

  /// Feeds one epoch's loss; returns true when the learning rate was decayed.
  bool observe(double loss) {
    if (loss < best_ - cfg_.min_delta) {
      best_ = loss;
      wait_ = 0;
      return false;
    }
    if (++wait_ >= cfg_.plateau_patience) {
      lr_ *= cfg_.plateau_factor;
      wait_ = 0;
      return true;
    }
    return false;
  }

  double learning_rate() const { return lr_; }
  double best() const { return best_; }

 private:
  SGDConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

/// Learning rate after replaying `history` from cfg.learning_rate.
inline double plateau_schedule(std::span<const double> history, const SGDConfig& cfg) {
  if (history.empty()) throw DataError("plateau_schedule: empty loss history");
  PlateauTracker tracker(cfg);
  for (double loss : history) tracker.observe(loss);
  return tracker.learning_rate();
}

}  // namespace tcnscope
