#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smt/config.hpp"
#include "smt/report.hpp"
#include "smt/synthdata.hpp"
#include "smt/trainer.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_gen_data(const std::string& config_path, const std::string& out,
                 const std::vector<std::string>& overrides) {
  smt::KeyValues kv;
  if (!config_path.empty()) kv = smt::KeyValues::parse_file(config_path);
  kv.apply_overrides(overrides);
  smt::SynthConfig cfg = smt::synth_config_from(kv);
  double percent = kv.get_double("split.percent_labeled", 10.0);
  uint64_t split_seed =
      static_cast<uint64_t>(kv.get_int("split.seed", static_cast<int64_t>(cfg.seed)));
  kv.check_all_consumed();

  fs::path out_dir = out.empty() ? smt::cache_dir() / "synth-default" : fs::path(out);
  smt::DatasetManifest manifest = smt::generate_dataset(cfg, out_dir);
  smt::SplitManifest split = smt::split_labeled_unlabeled(manifest, percent, split_seed);
  smt::io::write_json(out_dir / "split.json", split.to_json());
  std::cout << "dataset: " << out_dir.string() << " (" << manifest.clips.size()
            << " clips, " << split.labeled.size() << " labeled / " << split.unlabeled.size()
            << " unlabeled)\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& mode, const std::string& out,
              const std::string& resume, const std::vector<std::string>& overrides) {
  smt::KeyValues kv;
  if (!config_path.empty()) kv = smt::KeyValues::parse_file(config_path);
  kv.apply_overrides(overrides);
  if (!mode.empty()) kv.set("train.mode", mode);
  if (!out.empty()) kv.set("train.out_dir", out);
  smt::TrainConfig cfg = smt::train_config_from(kv);
  kv.check_all_consumed();
  if (cfg.out_dir.empty()) throw smt::config_error("train.out_dir is required");
  smt::mode_flags(cfg.mode);  // reject unknown modes before any work
  cfg.validate();

  std::cout << "mode=" << cfg.mode << " beta=" << cfg.beta << " lambda_max=" << cfg.lambda_max
            << " lr=" << cfg.lr << " epochs=" << cfg.epochs << " batch=" << cfg.batch_size
            << " seed=" << cfg.seed << "\n";

  smt::Trainer<float> trainer(cfg);
  if (!resume.empty()) trainer.resume_from(resume);
  trainer.run();
  std::cout << "done: " << cfg.out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint,
                 const std::string& split, const std::string& out,
                 const std::vector<std::string>& overrides) {
  smt::KeyValues kv;
  if (!config_path.empty()) kv = smt::KeyValues::parse_file(config_path);
  kv.apply_overrides(overrides);
  smt::TrainConfig cfg = smt::train_config_from(kv);
  kv.check_all_consumed();
  cfg.validate();
  if (split != "test" && split != "val")
    throw smt::config_error("--split must be test or val, got '" + split + "'");

  fs::path root(cfg.dataset_dir);
  auto manifest = smt::DatasetManifest::from_json(smt::io::read_json(root / "dataset.json"));
  auto split_manifest = smt::SplitManifest::from_json(smt::io::read_json(cfg.split_path));
  const auto& ids = split == "test" ? split_manifest.test : split_manifest.validation;

  std::map<std::string, const smt::ClipEntry*> by_id;
  for (const auto& c : manifest.clips) by_id[c.id] = &c;
  std::map<int, std::string> class_bg;
  for (const auto& c : manifest.classes) class_bg[c.id] = c.background;
  std::vector<smt::Sample<float>> samples;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw smt::config_error("split references unknown clip: " + id);
    samples.push_back(smt::load_sample(root, *it->second, true));
  }

  smt::TrainState<float> state(cfg);
  smt::load_checkpoint(state, checkpoint);
  smt::Detector<float>& model = cfg.eval_student ? state.student : state.teacher;
  smt::EvalReport rep =
      smt::evaluate_model(model, samples, class_bg, cfg.binarize_thresh);

  fs::path out_path = out.empty() ? fs::path("report.json") : fs::path(out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  smt::io::write_json(out_path, rep.to_json());
  std::ofstream csv(out_path.string() + ".csv");
  csv << rep.to_csv();

  // detection exchange dump next to the report
  auto tubes = smt::predict_tubes(model, samples, cfg.binarize_thresh);
  smt::write_detections(out_path.string() + ".detections.jsonl", tubes);

  std::cout << "f-mAP@0.5 " << rep.f_map_at("0.5") << "  v-mAP@0.5 " << rep.v_map_at("0.5")
            << "  coherence " << rep.coherence << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out) {
  std::vector<smt::RunData> runs;
  for (const auto& d : run_dirs) {
    if (!fs::exists(d)) throw smt::config_error("missing run directory: " + d);
    runs.push_back(smt::load_run(d));
  }
  smt::write_report(runs, out);
  std::cout << "report written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable mean-teacher training pipeline for video action detection"};
  app.require_subcommand(1);

  std::string config_path, mode, out, resume, checkpoint, split = "test";
  std::vector<std::string> overrides, run_dirs;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic benchmark");
  gen->add_option("--config", config_path, "key=value config file");
  gen->add_option("--out", out, "output dataset directory");
  gen->add_option("--set", overrides, "override config keys (key=value)");

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--mode", mode, "supervised|mean-teacher|+eor|+dop|full");
  train->add_option("--out", out, "run output directory");
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--set", overrides, "override config keys (key=value)");

  auto* eval = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  eval->add_option("--config", config_path, "key=value config file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
  eval->add_option("--split", split, "test|val");
  eval->add_option("--out", out, "report JSON path");
  eval->add_option("--set", overrides, "override config keys (key=value)");

  auto* rep = app.add_subcommand("report", "Summarize runs into tables and charts");
  rep->add_option("--runs", run_dirs, "run directories")->required();
  rep->add_option("--out", out, "report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out, overrides);
    if (train->parsed()) return cmd_train(config_path, mode, out, resume, overrides);
    if (eval->parsed()) return cmd_evaluate(config_path, checkpoint, split, out, overrides);
    if (rep->parsed()) return cmd_report(run_dirs, out);
  } catch (const smt::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
