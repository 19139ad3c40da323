#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invlab/data.hpp"
#include "invlab/training.hpp"

// The lambda-sweep driver: one fresh network per (lambda, rep, fold) cell,
// each trained single-threaded from a position-derived seed so results are
// identical no matter how cells are scheduled.

namespace invlab {

struct SweepCellResult {
  int lambda_index = 0;
  int rep = 0;
  int fold = 0;
  double lambda = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double classifier_accuracy = 0;
  double adversary_accuracy = 0;
  int best_epoch = -1;
  double seconds = 0;  // wall clock; reported only in the sidecar log
};

struct LambdaSummary {
  double lambda = 0;
  int n_cells = 0;
  double classifier_mean = 0, classifier_std = 0;
  double adversary_mean = 0, adversary_std = 0;
};

struct SweepResult {
  std::vector<double> lambdas;
  int reps = 0;
  int folds = 0;
  std::vector<SweepCellResult> cells;     // canonical (lambda, rep, fold) order
  std::vector<LambdaSummary> summary;     // one entry per lambda
};

struct SweepOptions {
  int reps = 10;
  int folds = 5;
  double val_fraction = 0.10;
  int threads = 1;         // worker pool size; cells stay single-threaded
  std::string out_dir;     // when set, partial results are flushed per cell
  bool resume = false;     // re-read previously flushed cells from out_dir
};

/// Per-cell seed: base*10000 + rep*100 + fold*10 + lambda_index.
std::uint64_t cell_seed(std::uint64_t base_seed, int rep, int fold, int lambda_index);

SweepResult run_sweep(const TrialSet& trials, const std::vector<double>& lambdas,
                      const TrainConfig& base_config, const SweepOptions& options);

/// Recomputes per-lambda mean/std (sample std over completed cells).
void compute_summary(SweepResult& result);

}  // namespace invlab
