// Command line front end: train, ablate, sweep-eps, sweep-ema, replay, report.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "stuc/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigFailure = 1, kNumericalFailure = 2, kIoFailure = 3 };

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->required();
  cmd->add_option("-o,--out", o.out, "output directory")->required();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--iterations", o.iterations, "override the iteration count");
}

stuc::TrainConfig resolve(const CommonOptions& o) {
  stuc::TrainConfig cfg = stuc::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.iterations) cfg.iterations = *o.iterations;
  if (o.mode) cfg.mode = stuc::mode_from_string(*o.mode);
  cfg.validate();
  return cfg;
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

int report(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto a = stuc::artifact_paths(dir);
  if (fs::exists(a.metrics_path)) {
    const stuc::TrainConfig cfg = stuc::load_config(a.config_path);
    const stuc::TrainReport r = stuc::read_metrics_csv(a.metrics_path);
    stuc::write_text((fs::path(dir) / stuc::kTrajectoryFile).string(),
                     stuc::trajectory_export(r));
    const auto errors = stuc::validate_metrics(r, cfg.batch.unlabeled_batch());
    for (const auto& e : errors) std::cout << "invariant violated: " << e << "\n";
    std::cout << "rows " << r.rows.size() << ", invariants "
              << (errors.empty() ? "ok" : "FAILED") << "\n";
    print_file(a.summary_path);
    return errors.empty() ? kOk : kNumericalFailure;
  }
  std::vector<stuc::RunArtifact> runs;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().filename() == stuc::kMetricsFile) {
      runs.push_back(stuc::load_run_artifact(entry.path().parent_path().string()));
    }
  }
  if (runs.empty()) throw stuc::IoError("no runs found under " + dir);
  std::sort(runs.begin(), runs.end(),
            [](const auto& x, const auto& y) { return x.dir < y.dir; });
  std::set<std::string> modes;
  for (const auto& r : runs) modes.insert(r.summary.mode);
  if (modes.size() >= 2) std::cout << stuc::ablation_table(runs);
  std::cout << stuc::eps_sweep_table(runs);
  std::cout << stuc::ema_sweep_table(runs);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised training with adaptive pseudo-label thresholds and "
               "a contrastive loss on unreliable samples"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "train one configuration into a run directory");
  add_common(train, train_opts);
  train->add_option("--mode", train_opts.mode,
                    "satpl+uscl | fixed-threshold | satpl-only | uscl-only");

  CommonOptions ablate_opts;
  std::size_t ablate_seeds = 5;
  auto* ablate = app.add_subcommand("ablate", "run all four modes over several seeds");
  add_common(ablate, ablate_opts);
  ablate->add_option("--seeds", ablate_seeds, "number of seeds")->check(CLI::PositiveNumber);

  CommonOptions eps_opts;
  std::size_t eps_seeds = 1;
  auto* sweep_eps = app.add_subcommand("sweep-eps", "grid over the positive-set thresholds");
  add_common(sweep_eps, eps_opts);
  sweep_eps->add_option("--seeds", eps_seeds, "number of seeds")->check(CLI::PositiveNumber);

  CommonOptions ema_opts;
  std::size_t ema_seeds = 1;
  auto* sweep_ema = app.add_subcommand("sweep-ema", "grid over the threshold EMA decay");
  add_common(sweep_ema, ema_opts);
  sweep_ema->add_option("--seeds", ema_seeds, "number of seeds")->check(CLI::PositiveNumber);

  std::string replay_dir, replay_ckpt;
  auto* replay = app.add_subcommand("replay", "re-evaluate a run's checkpoint");
  replay->add_option("run", replay_dir, "run directory")->required();
  replay->add_option("--checkpoint", replay_ckpt, "checkpoint file (default: run's)");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "export tables from run directories");
  report_cmd->add_option("dir", report_dir, "run or sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  try {
    if (train->parsed()) {
      const auto a = stuc::execute_run(resolve(train_opts), train_opts.out);
      std::cout << stuc::to_json(a.summary);
    } else if (ablate->parsed()) {
      stuc::run_ablation(resolve(ablate_opts), ablate_seeds, ablate_opts.out);
      print_file((std::filesystem::path(ablate_opts.out) / "ablation.csv").string());
    } else if (sweep_eps->parsed()) {
      stuc::run_eps_sweep(resolve(eps_opts), eps_seeds, eps_opts.out);
      print_file((std::filesystem::path(eps_opts.out) / "eps_sweep.csv").string());
    } else if (sweep_ema->parsed()) {
      stuc::run_ema_sweep(resolve(ema_opts), ema_seeds, ema_opts.out);
      print_file((std::filesystem::path(ema_opts.out) / "ema_sweep.csv").string());
    } else if (replay->parsed()) {
      const auto e = stuc::replay(replay_dir, replay_ckpt);
      std::printf("accuracy %.4f\n", e.accuracy);
      for (const auto& row : e.confusion) {
        for (std::size_t c = 0; c < row.size(); ++c) std::cout << (c ? "," : "") << row[c];
        std::cout << "\n";
      }
    } else if (report_cmd->parsed()) {
      return report(report_dir);
    }
  } catch (const stuc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const stuc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const stuc::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const stuc::ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  }
  return kOk;
}
