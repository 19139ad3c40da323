#include "invlab/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "invlab/splits.hpp"
#include "invlab/stats.hpp"

namespace invlab {

namespace fs = std::filesystem;

std::uint64_t cell_seed(std::uint64_t base_seed, int rep, int fold, int lambda_index) {
  return base_seed * 10000 + static_cast<std::uint64_t>(rep) * 100 +
         static_cast<std::uint64_t>(fold) * 10 + static_cast<std::uint64_t>(lambda_index);
}

namespace {

std::string partial_line(const SweepCellResult& c) {
  char buf[256];
  if (c.ok) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9f,%.9f,%d", c.lambda_index, c.rep, c.fold,
                  c.classifier_accuracy, c.adversary_accuracy, c.best_epoch);
  } else {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,,,-1", c.lambda_index, c.rep, c.fold);
  }
  return buf;
}

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

}  // namespace

void compute_summary(SweepResult& result) {
  result.summary.clear();
  for (std::size_t li = 0; li < result.lambdas.size(); ++li) {
    std::vector<double> cls, adv;
    for (const auto& c : result.cells) {
      if (c.lambda_index == static_cast<int>(li) && c.ok) {
        cls.push_back(c.classifier_accuracy);
        adv.push_back(c.adversary_accuracy);
      }
    }
    LambdaSummary s;
    s.lambda = result.lambdas[li];
    s.n_cells = static_cast<int>(cls.size());
    if (!cls.empty()) {
      s.classifier_mean = mean_of(cls);
      s.classifier_std = sample_std(cls);
      s.adversary_mean = mean_of(adv);
      s.adversary_std = sample_std(adv);
    }
    result.summary.push_back(s);
  }
}

SweepResult run_sweep(const TrialSet& trials, const std::vector<double>& lambdas,
                      const TrainConfig& base_config, const SweepOptions& options) {
  if (lambdas.empty()) throw std::invalid_argument("run_sweep: empty lambda list");
  for (double l : lambdas)
    if (l < 0.0) throw std::invalid_argument("run_sweep: lambda must be >= 0");
  trials.validate();

  auto plans = make_splits(trials.l_s, trials.l_m, options.reps, options.folds,
                           options.val_fraction, base_config.seed);
  validate_splits(plans, trials.l_s, trials.l_m, options.folds, options.val_fraction);

  SweepResult result;
  result.lambdas = lambdas;
  result.reps = options.reps;
  result.folds = options.folds;
  result.cells.resize(lambdas.size() * static_cast<std::size_t>(options.reps) * options.folds);

  std::vector<bool> done(result.cells.size(), false);
  auto slot = [&](int li, int rep, int fold) {
    return (static_cast<std::size_t>(li) * options.reps + rep) * options.folds + fold;
  };
  for (std::size_t li = 0; li < lambdas.size(); ++li)
    for (int rep = 0; rep < options.reps; ++rep)
      for (int fold = 0; fold < options.folds; ++fold) {
        auto& c = result.cells[slot(static_cast<int>(li), rep, fold)];
        c.lambda_index = static_cast<int>(li);
        c.rep = rep;
        c.fold = fold;
        c.lambda = lambdas[li];
        c.seed = cell_seed(base_config.seed, rep, fold, static_cast<int>(li));
      }

  fs::path partial_path, log_path;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    partial_path = fs::path(options.out_dir) / "results_partial.csv";
    log_path = fs::path(options.out_dir) / "run.log";
  }

  if (options.resume && !partial_path.empty() && fs::exists(partial_path)) {
    std::ifstream in(partial_path);
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string f;
      std::vector<std::string> fields;
      while (std::getline(ss, f, ',')) fields.push_back(f);
      if (fields.size() < 6) continue;
      const int li = std::stoi(fields[0]), rep = std::stoi(fields[1]), fold = std::stoi(fields[2]);
      if (li < 0 || li >= static_cast<int>(lambdas.size()) || rep < 0 || rep >= options.reps ||
          fold < 0 || fold >= options.folds)
        continue;
      auto& c = result.cells[slot(li, rep, fold)];
      if (!fields[3].empty()) {
        c.ok = true;
        c.classifier_accuracy = std::stod(fields[3]);
        c.adversary_accuracy = std::stod(fields[4]);
        c.best_epoch = std::stoi(fields[5]);
      } else {
        c.ok = false;
        c.error = "failed in a previous run";
      }
      done[slot(li, rep, fold)] = true;
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < result.cells.size(); ++i)
    if (!done[i]) pending.push_back(i);

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};

  auto run_cell = [&](SweepCellResult& c) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const SplitPlan& plan = plans[static_cast<std::size_t>(c.rep) * options.folds + c.fold];
      TrialSet train_set = trials.subset(plan.indices_of(Assignment::kTrain));
      TrialSet val_set = trials.subset(plan.indices_of(Assignment::kVal));
      TrialSet test_set = trials.subset(plan.indices_of(Assignment::kTest));

      TrainConfig cfg = base_config;
      cfg.lambda = c.lambda;
      cfg.seed = c.seed;
      NetworkParams net = build_network<float>(ArchSpec{}, derive_seed(c.seed, 3));
      TrainResult tr = train_adversarial(train_set, val_set, std::move(net), cfg);
      EvalResult ev = evaluate(tr.checkpoint.params, test_set);
      c.classifier_accuracy = ev.classifier_accuracy;
      c.adversary_accuracy = ev.adversary_accuracy;
      c.best_epoch = tr.checkpoint.epoch;
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::lock_guard<std::mutex> lock(io_mutex);
    if (!partial_path.empty()) {
      std::ofstream out(partial_path, std::ios::app);
      out << partial_line(c) << "\n";
    }
    if (!log_path.empty()) {
      std::ofstream log(log_path, std::ios::app);
      log << timestamp_now() << " cell lambda=" << c.lambda << " rep=" << c.rep
          << " fold=" << c.fold << " seed=" << c.seed << " seconds=" << c.seconds
          << (c.ok ? "" : " FAILED: " + c.error) << "\n";
    }
  };

  const int n_threads = std::max(1, options.threads);
  if (n_threads == 1) {
    for (std::size_t i : pending) run_cell(result.cells[i]);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= pending.size()) return;
          run_cell(result.cells[pending[i]]);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  compute_summary(result);
  return result;
}

}  // namespace invlab
