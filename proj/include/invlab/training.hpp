#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "invlab/data.hpp"
#include "invlab/model.hpp"

// Alternating adversarial training: per minibatch the adversary head is
// updated first (toward maximizing its log-likelihood), then encoder and
// classifier descend on L_c - lambda*L_a with the adversary frozen.

namespace invlab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double lambda = 0.0;
  int batch_size = 40;
  int max_epochs = 500;
  int patience = 10;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda < 0.0) throw std::invalid_argument("train config: lambda must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("train config: max_epochs must be >= 1");
  }
};

enum class StepDirection { kDescent, kAscent };

template <class S>
struct AdamStateT {
  std::vector<TensorT<S>> m, v;
  long t = 0;
};

using AdamState = AdamStateT<float>;

/// One Adam update over a parameter group. State arrays are allocated on
/// first use and must stay shape-congruent with the group afterwards.
template <class S>
void adam_step(const std::vector<TensorT<S>*>& params, const std::vector<const TensorT<S>*>& grads,
               AdamStateT<S>& state, const AdamConfig& cfg,
               StepDirection direction = StepDirection::kDescent) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: param/grad group size mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
  const S one_b1 = static_cast<S>(1.0 - cfg.beta1), one_b2 = static_cast<S>(1.0 - cfg.beta2);
  const S step_scale = static_cast<S>(cfg.lr / bc1);
  const S inv_sqrt_bc2 = static_cast<S>(1.0 / std::sqrt(bc2));
  const S eps = static_cast<S>(cfg.eps);
  const S sign = direction == StepDirection::kDescent ? S(1) : S(-1);

  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorT<S>& p = *params[i];
    const TensorT<S>& g = *grads[i];
    if (!g.same_shape(p.shape()))
      throw std::invalid_argument("adam_step: grad shape " + shape_to_string(g.shape()) +
                                  " does not match param " + shape_to_string(p.shape()));
    TensorT<S>& m = state.m[i];
    TensorT<S>& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + one_b1 * g[j];
      v[j] = b2 * v[j] + one_b2 * g[j] * g[j];
      p[j] -= sign * step_scale * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

/// Patience-based stopping on a per-epoch loss; a new minimum must be
/// strictly lower than the current best.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool observe(double loss) {
    if (loss < best_loss_) {
      best_loss_ = loss;
      best_epoch_ = n_;
      since_best_ = 0;
    } else {
      ++since_best_;
    }
    ++n_;
    return since_best_ >= patience_;
  }

  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  bool improved_last() const { return since_best_ == 0; }

 private:
  int patience_;
  int n_ = 0;
  int best_epoch_ = -1;
  int since_best_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct EpochStats {
  double train_loss_c = 0, train_loss_a = 0;
  double val_loss_c = 0, val_loss_a = 0;
  double val_acc_c = 0, val_acc_a = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // 0-based index into epochs
};

struct Checkpoint {
  NetworkParams params;
  int epoch = -1;
  TrainConfig config;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

/// Per-sub-step notification; hashes cover the raw bytes of each group.
struct StepEvent {
  enum class Phase { kAfterAdversary, kAfterEncoder };
  Phase phase;
  int epoch = 0;
  int batch = 0;
  std::uint64_t hash_encoder = 0;
  std::uint64_t hash_classifier = 0;
  std::uint64_t hash_adversary = 0;
};

struct TrainHooks {
  bool update_adversary = true;  // disables step A when false (test hook)
  std::function<void(const StepEvent&)> observer;
};

TrainResult train_adversarial(const TrialSet& train_set, const TrialSet& val_set,
                              NetworkParams params, const TrainConfig& config,
                              const TrainHooks& hooks = {});

struct EvalResult {
  double classifier_accuracy = 0;
  double adversary_accuracy = 0;
  std::vector<std::vector<long>> confusion_classifier;  // [true][pred], 3x3
  std::vector<std::vector<long>> confusion_adversary;   // [true][pred], 2x2
};

EvalResult evaluate(const NetworkParams& params, const TrialSet& test_set);

/// Per-epoch validation metrics in Infer mode (no dropout, running stats).
EpochStats eval_losses(const NetworkParams& params, const TrialSet& set, int batch_size);

}  // namespace invlab
