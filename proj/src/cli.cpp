#include "invlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "invlab/archive.hpp"
#include "invlab/checkpoint.hpp"
#include "invlab/report.hpp"
#include "invlab/splits.hpp"
#include "invlab/surface.hpp"
#include "invlab/sweep.hpp"

namespace invlab {

namespace fs = std::filesystem;

namespace {

int threads_from_env() {
  const char* v = std::getenv("INVLAB_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot write " + path);
  csv << "epoch,train_loss_c,train_loss_a,val_loss_c,val_loss_a,val_acc_c,val_acc_a\n";
  char buf[256];
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const auto& s = h.epochs[e];
    std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f", e, s.train_loss_c,
                  s.train_loss_a, s.val_loss_c, s.val_loss_a, s.val_acc_c, s.val_acc_a);
    csv << buf << "\n";
  }
}

int cmd_gen_surface(double H, double C, double kl, double kr, double ks, int n,
                    std::uint64_t seed, std::string out) {
  SurfaceSpec spec;
  spec.hurst = H;
  spec.amplitude = C;
  spec.k_low = kl;
  spec.k_roll = kr;
  spec.k_cut = ks;
  spec.validate();
  HeightMap map = synthesize_surface(spec, n, seed);
  if (!out.empty() && out.back() == '/') {
    fs::create_directories(out);
    out += "surface";
  }
  export_heightmap(map, out);
  std::cout << "wrote " << out << ".csv, " << out << ".pgm, " << out << ".json (N=" << n
            << ", seed=" << seed << ")\n";
  return 0;
}

int cmd_gen_data(int n_per_cond, double snr, double leak, std::uint64_t seed,
                 const std::string& out) {
  GeneratorConfig cfg;
  cfg.snr_texture = snr;
  cfg.leak_movement = leak;
  cfg.seed = seed;
  cfg.validate();
  TrialSet set = generate_dataset(n_per_cond, cfg);
  ArchiveMeta meta;
  meta.generator = cfg;
  meta.seed = seed;
  write_archive(set, out, meta);
  std::cout << "wrote archive with " << set.n_trials() << " trials to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& archive, double lambda, std::uint64_t seed,
              const std::string& out) {
  if (lambda < 0.0)
    throw std::invalid_argument("--lambda must be >= 0 (negative weights invert the objective)");
  TrialSet set = read_archive(archive);
  auto plans = make_splits(set.l_s, set.l_m, 1, 5, 0.10, seed);
  const SplitPlan& plan = plans.front();
  TrialSet train_set = set.subset(plan.indices_of(Assignment::kTrain));
  TrialSet val_set = set.subset(plan.indices_of(Assignment::kVal));
  TrialSet test_set = set.subset(plan.indices_of(Assignment::kTest));

  TrainConfig cfg;
  cfg.lambda = lambda;
  cfg.seed = seed;
  NetworkParams net = build_network<float>(ArchSpec{}, derive_seed(seed, 3));
  TrainResult tr = train_adversarial(train_set, val_set, std::move(net), cfg);
  EvalResult ev = evaluate(tr.checkpoint.params, test_set);

  fs::create_directories(out);
  save_checkpoint(tr.checkpoint, (fs::path(out) / "checkpoint.bin").string());
  write_history_csv(tr.history, (fs::path(out) / "history.csv").string());
  {
    nlohmann::json j;
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["best_epoch"] = tr.checkpoint.epoch;
    j["epochs_run"] = tr.history.epochs.size();
    j["test_classifier_accuracy"] = ev.classifier_accuracy;
    j["test_adversary_accuracy"] = ev.adversary_accuracy;
    j["confusion_classifier"] = ev.confusion_classifier;
    j["confusion_adversary"] = ev.confusion_adversary;
    std::ofstream js(fs::path(out) / "metrics.json");
    js << j.dump(2) << "\n";
  }
  std::cout << "best epoch " << tr.checkpoint.epoch << ", test classifier "
            << ev.classifier_accuracy << ", test adversary " << ev.adversary_accuracy << "\n";
  return 0;
}

int cmd_sweep(const std::string& archive, std::vector<double> lambdas, int reps, int folds,
              std::uint64_t seed, const std::string& out, bool resume) {
  for (double l : lambdas)
    if (l < 0.0) throw std::invalid_argument("--lambdas entries must be >= 0");
  TrialSet set = read_archive(archive);
  TrainConfig base;
  base.seed = seed;
  SweepOptions opt;
  opt.reps = reps;
  opt.folds = folds;
  opt.threads = threads_from_env();
  opt.out_dir = out;
  opt.resume = resume;
  SweepResult result = run_sweep(set, lambdas, base, opt);
  emit_report(result, out);
  int failed = 0;
  for (const auto& c : result.cells)
    if (!c.ok) ++failed;
  std::cout << "sweep complete: " << result.cells.size() << " cells (" << failed
            << " failed), report under " << out << "\n";
  return failed == 0 ? 0 : 1;
}

int cmd_report(std::string result_path, const std::string& out) {
  if (fs::is_directory(result_path)) result_path = (fs::path(result_path) / "results.csv").string();
  SweepResult result = read_results_csv(result_path);
  emit_report(result, out);
  std::cout << "report written under " << out << "\n";
  return 0;
}

int cmd_verify(const std::string& archive) {
  ArchiveMeta meta;
  TrialSet set = read_archive(archive, &meta);
  long per_condition[6] = {0, 0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < set.l_s.size(); ++i)
    per_condition[set.l_s[i] * 2 + set.l_m[i]]++;
  std::cout << "archive ok: " << set.n_trials() << " trials, " << set.n_channels()
            << " channels x " << set.n_samples() << " samples, subject " << meta.subject_id
            << "\n";
  for (int ls = 0; ls < 3; ++ls)
    for (int lm = 0; lm < 2; ++lm)
      std::cout << "  condition (l_s=" << ls << ", l_m=" << lm
                << "): " << per_condition[ls * 2 + lm] << " trials\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"invariant-representation learning lab: surface synthesis, synthetic trials, "
               "adversarial training and lambda sweeps"};
  app.require_subcommand(1);

  // gen-surface
  double H = 0.5, C = 1e11, kl = 16, kr = 16, ks = 64;
  int n_side = 256;
  std::uint64_t surf_seed = 0;
  std::string surf_out;
  auto* gs = app.add_subcommand("gen-surface", "synthesize a rough surface from its PSD");
  gs->add_option("--H", H, "Hurst exponent, in (0,1]")->capture_default_str();
  gs->add_option("--C", C, "roughness amplitude")->capture_default_str();
  gs->add_option("--kl", kl, "lower roll-off wavenumber")->capture_default_str();
  gs->add_option("--kr", kr, "upper roll-off wavenumber")->capture_default_str();
  gs->add_option("--ks", ks, "cutoff wavenumber")->capture_default_str();
  gs->add_option("--n", n_side, "grid side (power of two)")->capture_default_str();
  gs->add_option("--seed", surf_seed, "random seed")->capture_default_str();
  gs->add_option("--out", surf_out, "output path prefix")->required();

  // gen-data
  int n_per_cond = 100;
  double snr = 0.8, leak = 0.8;
  std::uint64_t data_seed = 0;
  std::string data_out;
  auto* gd = app.add_subcommand("gen-data", "generate a balanced synthetic trial archive");
  gd->add_option("--n-per-cond", n_per_cond, "trials per (texture, movement) condition")
      ->capture_default_str();
  gd->add_option("--snr", snr, "texture template amplitude / noise RMS")->capture_default_str();
  gd->add_option("--leak", leak, "movement template amplitude / noise RMS")->capture_default_str();
  gd->add_option("--seed", data_seed, "random seed")->capture_default_str();
  gd->add_option("--out", data_out, "archive directory")->required();

  // train
  std::string train_archive, train_out;
  double train_lambda = 0.0;
  std::uint64_t train_seed = 0;
  auto* tr = app.add_subcommand("train", "train one network on a 70/10/20 split");
  tr->add_option("--archive", train_archive, "trial archive directory")->required();
  tr->add_option("--lambda", train_lambda, "adversarial regularization weight (>= 0)")
      ->capture_default_str();
  tr->add_option("--seed", train_seed, "random seed")->capture_default_str();
  tr->add_option("--out", train_out, "output directory")->required();

  // sweep
  std::string sweep_archive, sweep_out;
  std::vector<double> lambdas = {0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  int reps = 10, folds = 5;
  std::uint64_t sweep_seed = 0;
  bool resume = false;
  auto* sw = app.add_subcommand("sweep", "lambda sweep over repeated stratified folds");
  sw->add_option("--archive", sweep_archive, "trial archive directory")->required();
  sw->add_option("--lambdas", lambdas, "comma-separated lambda list")
      ->delimiter(',')
      ->capture_default_str();
  sw->add_option("--reps", reps, "repetitions")->capture_default_str();
  sw->add_option("--folds", folds, "test folds per repetition")->capture_default_str();
  sw->add_option("--seed", sweep_seed, "base seed")->capture_default_str();
  sw->add_option("--out", sweep_out, "output directory")->required();
  sw->add_flag("--resume", resume, "reuse cells already flushed to results_partial.csv");

  // report
  std::string report_in, report_out;
  auto* rp = app.add_subcommand("report", "re-emit CSV summaries and SVG figures");
  rp->add_option("--result", report_in, "results.csv or the sweep output directory")->required();
  rp->add_option("--out", report_out, "output directory")->required();

  // verify
  std::string verify_archive;
  auto* vf = app.add_subcommand("verify", "audit an archive's invariants");
  vf->add_option("--archive", verify_archive, "trial archive directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gs->parsed()) return cmd_gen_surface(H, C, kl, kr, ks, n_side, surf_seed, surf_out);
    if (gd->parsed()) return cmd_gen_data(n_per_cond, snr, leak, data_seed, data_out);
    if (tr->parsed()) return cmd_train(train_archive, train_lambda, train_seed, train_out);
    if (sw->parsed())
      return cmd_sweep(sweep_archive, lambdas, reps, folds, sweep_seed, sweep_out, resume);
    if (rp->parsed()) return cmd_report(report_in, report_out);
    if (vf->parsed()) return cmd_verify(verify_archive);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace invlab
