#include "stuc/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace stuc {
namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

RunArtifact execute_run(const TrainConfig& cfg, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  RunArtifact a = artifact_paths(dir);
  save_config(a.config_path, cfg);

  Trainer trainer(cfg, build_run_data(cfg));
  trainer.set_abort_checkpoint((fs::path(dir) / "last_good.bin").string());
  MetricsWriter writer(a.metrics_path, trainer.params().arch.num_classes);
  const TrainReport report = trainer.run(&writer);

  write_confusion_csv(a.confusion_path, report.final_eval.confusion);
  save_checkpoint(a.checkpoint_path, trainer.checkpoint());
  write_text((fs::path(dir) / kTrajectoryFile).string(), trajectory_export(report));
  a.summary = summarize(report, cfg);
  write_text(a.summary_path, to_json(a.summary));
  return a;
}

std::vector<std::uint64_t> seed_list(const TrainConfig& base, std::size_t seeds) {
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < seeds; ++k) out.push_back(base.seed + k);
  return out;
}

std::vector<RunArtifact> run_ablation(const TrainConfig& base, std::size_t seeds,
                                      const std::string& dir) {
  std::vector<RunArtifact> runs;
  for (TrainMode m : {TrainMode::kFixedThreshold, TrainMode::kUsclOnly,
                      TrainMode::kSatplOnly, TrainMode::kFull}) {
    for (std::uint64_t seed : seed_list(base, seeds)) {
      TrainConfig cfg = base;
      cfg.mode = m;
      cfg.seed = seed;
      const auto sub = fs::path(dir) / to_string(m) / ("seed" + std::to_string(seed));
      runs.push_back(execute_run(cfg, sub.string()));
    }
  }
  write_text((fs::path(dir) / "ablation.csv").string(), ablation_table(runs));
  return runs;
}

std::vector<RunArtifact> run_eps_sweep(const TrainConfig& base, std::size_t seeds,
                                       const std::string& dir) {
  std::vector<RunArtifact> runs;
  char name[64];
  for (double e1 : kSweepEps1) {
    for (double e2 : kSweepEps2) {
      for (std::uint64_t seed : seed_list(base, seeds)) {
        TrainConfig cfg = base;
        cfg.eps1 = e1;
        cfg.eps2 = e2;
        cfg.seed = seed;
        std::snprintf(name, sizeof name, "eps1_%.2f_eps2_%.2f", e1, e2);
        const auto sub = fs::path(dir) / name / ("seed" + std::to_string(seed));
        runs.push_back(execute_run(cfg, sub.string()));
      }
    }
  }
  write_text((fs::path(dir) / "eps_sweep.csv").string(), eps_sweep_table(runs));
  return runs;
}

std::vector<RunArtifact> run_ema_sweep(const TrainConfig& base, std::size_t seeds,
                                       const std::string& dir) {
  std::vector<RunArtifact> runs;
  char name[64];
  for (double lambda : kSweepEmaDecay) {
    for (std::uint64_t seed : seed_list(base, seeds)) {
      TrainConfig cfg = base;
      cfg.threshold_decay = lambda;
      cfg.seed = seed;
      std::snprintf(name, sizeof name, "lambda_%g", lambda);
      const auto sub = fs::path(dir) / name / ("seed" + std::to_string(seed));
      runs.push_back(execute_run(cfg, sub.string()));
    }
  }
  write_text((fs::path(dir) / "ema_sweep.csv").string(), ema_sweep_table(runs));
  return runs;
}

Evaluation replay(const std::string& run_dir, const std::string& checkpoint_path) {
  const RunArtifact a = artifact_paths(run_dir);
  const TrainConfig cfg = load_config(a.config_path);
  const Checkpoint ckpt =
      load_checkpoint(checkpoint_path.empty() ? a.checkpoint_path : checkpoint_path);
  Trainer trainer(cfg, build_run_data(cfg));
  trainer.restore(ckpt);
  return evaluate(trainer.ema().shadow, trainer.test_set());
}

}  // namespace stuc
