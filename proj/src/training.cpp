#include "invlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "invlab/hash.hpp"

namespace invlab {

namespace {

std::vector<TensorT<float>*> adversary_group(NetworkParams& p) { return {&p.adv_w, &p.adv_b}; }

std::vector<TensorT<float>*> encoder_classifier_group(NetworkParams& p) {
  return {&p.conv_kernels, &p.bn1.gamma, &p.bn1.beta, &p.depthwise_kernels,
          &p.bn2.gamma,    &p.bn2.beta,  &p.sep_depth_kernels, &p.sep_point_kernels,
          &p.bn3.gamma,    &p.bn3.beta,  &p.cls_w,     &p.cls_b};
}

std::uint64_t hash_group(NetworkParams& p, ParamGroup g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& np : named_params(p)) {
    if (np.group == g) h = hash_tensor(*np.tensor, h);
  }
  return h;
}

void emit_event(const TrainHooks& hooks, StepEvent::Phase phase, int epoch, int batch,
                NetworkParams& p) {
  if (!hooks.observer) return;
  StepEvent e;
  e.phase = phase;
  e.epoch = epoch;
  e.batch = batch;
  e.hash_encoder = hash_group(p, ParamGroup::kEncoder);
  e.hash_classifier = hash_group(p, ParamGroup::kClassifier);
  e.hash_adversary = hash_group(p, ParamGroup::kAdversary);
  hooks.observer(e);
}

void commit_batchnorm_stats(NetworkParams& p, const EncoderCache<float>& cache) {
  p.bn1.run_mean = cache.bn1_cache.new_run_mean;
  p.bn1.run_var = cache.bn1_cache.new_run_var;
  p.bn2.run_mean = cache.bn2_cache.new_run_mean;
  p.bn2.run_var = cache.bn2_cache.new_run_var;
  p.bn3.run_mean = cache.bn3_cache.new_run_mean;
  p.bn3.run_var = cache.bn3_cache.new_run_var;
}

}  // namespace

EpochStats eval_losses(const NetworkParams& params, const TrialSet& set, int batch_size) {
  EpochStats s;
  const int n = set.n_trials();
  if (n == 0) throw std::invalid_argument("eval_losses: empty set");
  long correct_c = 0, correct_a = 0;
  double sum_lc = 0, sum_la = 0;
  for (int start = 0; start < n; start += batch_size) {
    const int stop = std::min(n, start + batch_size);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(set, idx);
    auto fwd = forward_losses(b.X, b.onehot_s, b.onehot_m, params, 0.0, Mode::kInfer, nullptr);
    const int B = stop - start;
    sum_lc += static_cast<double>(fwd.loss_classifier) * B;
    sum_la += static_cast<double>(fwd.loss_adversary) * B;
    auto pred_c = nn::argmax_rows(fwd.probs_classifier);
    auto pred_a = nn::argmax_rows(fwd.probs_adversary);
    for (int i = 0; i < B; ++i) {
      if (pred_c[static_cast<std::size_t>(i)] == set.l_s[static_cast<std::size_t>(start + i)])
        ++correct_c;
      if (pred_a[static_cast<std::size_t>(i)] == set.l_m[static_cast<std::size_t>(start + i)])
        ++correct_a;
    }
  }
  s.val_loss_c = sum_lc / n;
  s.val_loss_a = sum_la / n;
  s.val_acc_c = static_cast<double>(correct_c) / n;
  s.val_acc_a = static_cast<double>(correct_a) / n;
  return s;
}

TrainResult train_adversarial(const TrialSet& train_set, const TrialSet& val_set,
                              NetworkParams params, const TrainConfig& config,
                              const TrainHooks& hooks) {
  config.validate();
  if (train_set.n_trials() == 0) throw std::invalid_argument("train_adversarial: empty train set");
  if (val_set.n_trials() == 0) throw std::invalid_argument("train_adversarial: empty val set");
  {
    bool has_s[3] = {false, false, false}, has_m[2] = {false, false};
    for (std::size_t i = 0; i < train_set.l_s.size(); ++i) {
      has_s[train_set.l_s[i]] = true;
      has_m[train_set.l_m[i]] = true;
    }
    if (!(has_s[0] && has_s[1] && has_s[2] && has_m[0] && has_m[1]))
      throw std::invalid_argument("train_adversarial: train set must contain every label");
  }

  Rng shuffle_rng = make_rng(derive_seed(config.seed, 1));
  Rng dropout_rng = make_rng(derive_seed(config.seed, 2));

  AdamState adam_adv, adam_enc;
  EarlyStopper stopper(config.patience);
  TrainResult result;
  result.checkpoint.config = config;

  std::vector<int> order(static_cast<std::size_t>(train_set.n_trials()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_lc = 0, epoch_la = 0;
    long counted = 0;

    for (int start = 0, batch_idx = 0; start < train_set.n_trials();
         start += config.batch_size, ++batch_idx) {
      const int stop = std::min(train_set.n_trials(), start + config.batch_size);
      const int B = stop - start;
      if (B < 2) break;  // batch norm needs >= 2; drop the stub
      std::vector<int> idx(order.begin() + start, order.begin() + stop);
      Batch batch = make_batch(train_set, idx);

      // single shared Train-mode forward; both steps reuse its activations
      auto fwd = forward_losses(batch.X, batch.onehot_s, batch.onehot_m, params, config.lambda,
                                Mode::kTrain, &dropout_rng);
      if (!std::isfinite(fwd.loss_classifier) || !std::isfinite(fwd.loss_adversary))
        throw std::runtime_error("train_adversarial: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(batch_idx));
      epoch_lc += static_cast<double>(fwd.loss_classifier) * B;
      epoch_la += static_cast<double>(fwd.loss_adversary) * B;
      counted += B;

      // step A: adversary ascends its log-likelihood; encoder/classifier frozen
      if (hooks.update_adversary) {
        auto ag = head_grads(fwd.z, params.adv_w, params.adv_b, batch.onehot_m);
        const std::vector<const Tensor*> grads = {&ag.weights, &ag.bias};
        adam_step(adversary_group(params), grads, adam_adv, config.adam, StepDirection::kDescent);
        emit_event(hooks, StepEvent::Phase::kAfterAdversary, epoch, batch_idx, params);
      }

      // step B: encoder+classifier descend on L_c - lambda*L_a; adversary frozen
      auto cg = combined_backward(fwd, params, config.lambda, batch.onehot_s, batch.onehot_m);
      {
        auto& e = cg.encoder;
        const std::vector<const Tensor*> grads = {
            &e.conv_kernels, &e.bn1_gamma, &e.bn1_beta, &e.depthwise_kernels,
            &e.bn2_gamma,    &e.bn2_beta,  &e.sep_depth_kernels, &e.sep_point_kernels,
            &e.bn3_gamma,    &e.bn3_beta,  &cg.cls_w,    &cg.cls_b};
        adam_step(encoder_classifier_group(params), grads, adam_enc, config.adam,
                  StepDirection::kDescent);
      }
      commit_batchnorm_stats(params, fwd.cache);
      emit_event(hooks, StepEvent::Phase::kAfterEncoder, epoch, batch_idx, params);
    }

    EpochStats stats = eval_losses(params, val_set, config.batch_size);
    stats.train_loss_c = epoch_lc / counted;
    stats.train_loss_a = epoch_la / counted;
    result.history.epochs.push_back(stats);

    const bool stop = stopper.observe(stats.val_loss_c);
    if (stopper.improved_last()) {
      result.checkpoint.params = params;
      result.checkpoint.epoch = stopper.best_epoch();
    }
    if (stop) break;
  }

  result.history.best_epoch = stopper.best_epoch();
  return result;
}

EvalResult evaluate(const NetworkParams& params, const TrialSet& test_set) {
  if (test_set.n_trials() == 0) throw std::invalid_argument("evaluate: empty test set");
  const int K = params.spec.n_classes, M = params.spec.n_nuisance;
  EvalResult r;
  r.confusion_classifier.assign(static_cast<std::size_t>(K), std::vector<long>(static_cast<std::size_t>(K), 0));
  r.confusion_adversary.assign(static_cast<std::size_t>(M), std::vector<long>(static_cast<std::size_t>(M), 0));

  const int n = test_set.n_trials();
  const int batch = 128;
  for (int start = 0; start < n; start += batch) {
    const int stop = std::min(n, start + batch);
    std::vector<int> idx(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    Batch b = make_batch(test_set, idx);
    auto z = encode(b.X, params, Mode::kInfer, nullptr);
    auto pred_c = nn::argmax_rows(classify(z, params));
    auto pred_a = nn::argmax_rows(adversary_predict(z, params));
    for (int i = 0; i < stop - start; ++i) {
      const int ts = test_set.l_s[static_cast<std::size_t>(start + i)];
      const int tm = test_set.l_m[static_cast<std::size_t>(start + i)];
      r.confusion_classifier[ts][pred_c[static_cast<std::size_t>(i)]]++;
      r.confusion_adversary[tm][pred_a[static_cast<std::size_t>(i)]]++;
    }
  }
  long diag_c = 0, diag_a = 0;
  for (int k = 0; k < K; ++k) diag_c += r.confusion_classifier[k][k];
  for (int m = 0; m < M; ++m) diag_a += r.confusion_adversary[m][m];
  r.classifier_accuracy = static_cast<double>(diag_c) / n;
  r.adversary_accuracy = static_cast<double>(diag_a) / n;
  return r;
}

}  // namespace invlab
