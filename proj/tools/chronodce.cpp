// chronodce: synthetic skeletal-action benchmark toolkit driver.
//
// Subcommands cover the full loop: synth -> train -> noise-bench / probe /
// ensemble -> report. Every run is seed-deterministic and registers its
// artifacts (with content hashes) in the experiment directory's
// manifest.json.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronodce/dataset.hpp"
#include "chronodce/model.hpp"
#include "chronodce/probe.hpp"
#include "chronodce/report.hpp"
#include "chronodce/synth.hpp"
#include "chronodce/training.hpp"

namespace fs = std::filesystem;
using namespace chronodce;

namespace {

struct CommonModelFlags {
  std::vector<std::size_t> channels = {16, 32, 48};
  std::vector<std::size_t> strides = {2, 2, 1};
  std::vector<std::size_t> dilations = {1, 2, 3};
  std::size_t kernel = 3;
  std::size_t chron_hidden = 32;

  ModelConfig to_config() const {
    ModelConfig cfg;
    cfg.num_stus = channels.size();
    cfg.channels = channels;
    cfg.strides = strides;
    cfg.dilations = dilations;
    cfg.temporal_kernel = kernel;
    cfg.chron_hidden = chron_hidden;
    return cfg;
  }
};

void add_model_flags(CLI::App* cmd, CommonModelFlags& flags) {
  cmd->add_option("--channels", flags.channels, "Channel width per STU")->delimiter(',');
  cmd->add_option("--strides", flags.strides, "Temporal stride per STU")->delimiter(',');
  cmd->add_option("--dilations", flags.dilations, "Dilation per TPE within an STU")
      ->delimiter(',');
  cmd->add_option("--kernel", flags.kernel, "Temporal kernel size (odd)");
  cmd->add_option("--chron-hidden", flags.chron_hidden, "Hidden width of the chronological head");
}

std::string dir_of(const std::string& path_or_prefix) {
  const fs::path p(path_or_prefix);
  return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

std::string base_of(const std::string& path_or_prefix) {
  return fs::path(path_or_prefix).filename().string();
}

Dataset load_split(const std::string& data_dir, const std::string& split, double val_fraction,
                   Dataset* full_out = nullptr) {
  Dataset full = load_dataset(data_dir);
  if (full_out) *full_out = full;
  if (split == "all") return full;
  if (split != "val") throw std::runtime_error("unknown --split value: " + split);
  return subset(full, stratified_split(full, val_fraction).val);
}

int cmd_synth(std::size_t classes, long pairs, long freq_classes, std::size_t samples,
              std::size_t frames, std::size_t joints, std::size_t persons, std::uint64_t seed,
              const std::string& out) {
  SyntheticSpec spec;
  if (pairs >= 0 || freq_classes >= 0) {
    spec.reversal_pairs = pairs >= 0 ? static_cast<std::size_t>(pairs) : 0;
    spec.freq_classes = freq_classes >= 0 ? static_cast<std::size_t>(freq_classes) : 0;
  } else {
    // --classes N maps to (N-2)/2 reversal pairs plus the remainder as
    // frequency classes, so the default mix keeps both kinds present.
    if (classes < 2) throw std::runtime_error("synth: need at least 2 classes");
    spec.reversal_pairs = (classes - 2) / 2;
    spec.freq_classes = classes - 2 * spec.reversal_pairs;
  }
  spec.samples_per_class = samples;
  spec.frames = frames;
  spec.joints = joints;
  spec.persons = persons;
  spec.seed = seed;
  Dataset ds = synth_generate(spec);
  save_dataset(ds, out);
  std::cout << "wrote " << ds.samples.size() << " sequences (" << ds.num_classes()
            << " classes) to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& features,
              const std::string& encoding, std::size_t K, double lambda_crl,
              std::size_t epochs, std::uint64_t seed, const std::string& out, double lr,
              double momentum, std::size_t batch, double val_fraction, std::size_t pad_frames,
              const std::vector<std::size_t>& decay_epochs, const CommonModelFlags& model_flags,
              std::string name) {
  Dataset ds = load_dataset(data_dir);
  const SkeletonGraph graph = SkeletonGraph::desk_default();

  TrainConfig tc;
  tc.lr0 = lr;
  tc.momentum = momentum;
  tc.epochs = epochs;
  tc.decay_epochs = decay_epochs;
  tc.batch_size = batch;
  tc.seed = seed;
  tc.loss.lambda_crl = lambda_crl;
  tc.features = feature_stream_from(features);
  tc.encoding = encoding_from(encoding);
  tc.K = K;
  tc.pad_frames = pad_frames;
  tc.val_fraction = val_fraction;

  if (name.empty()) {
    name = features + "_" + encoding;
    if (tc.encoding != EncodingKind::none) name += std::to_string(K);
    if (lambda_crl > 0.0) name += "_crl";
  }

  TrainResult result = train(model_flags.to_config(), ds, graph, tc);

  fs::create_directories(dir_of(out));
  nlohmann::ordered_json extra;
  extra["pipeline"] = tc.pipeline().to_json();
  extra["data"] = data_dir;
  save_model(result.model, out, name, extra);

  nlohmann::ordered_json run_json = train_run_to_json(result.run, ds.class_names);
  run_json["name"] = name;
  write_text_file(out + ".run.json", run_json.dump(2));
  write_confusion_csv(result.run.val.confusion, ds.class_names, out + ".confusion.csv");

  const std::string dir = dir_of(out), base = base_of(out);
  manifest_register(dir, "train",
                    {base + ".run.json", base + ".confusion.csv", base + ".json", base + ".bin"},
                    run_json["config"]);
  std::cout << name << ": val accuracy " << result.run.val_accuracy << " ("
            << result.run.params.total() << " params, " << result.run.wall_seconds << " s)\n";
  return 0;
}

int cmd_noise_bench(const std::vector<std::string>& checkpoints, const std::string& data_dir,
                    std::vector<double> epsilons, std::size_t trials, std::uint64_t seed,
                    const std::string& out, const std::string& split, double val_fraction) {
  Dataset eval_set = load_split(data_dir, split, val_fraction);
  const SkeletonGraph graph = SkeletonGraph::desk_default();

  std::vector<LoadedModel> loaded;
  std::vector<std::pair<std::string, const RecognizerModel*>> models;
  std::vector<PipelineConfig> pipelines;
  for (const auto& ck : checkpoints) loaded.push_back(load_model(ck));
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const std::string name =
        loaded[i].name.empty() ? base_of(checkpoints[i]) : loaded[i].name;
    models.emplace_back(name, &loaded[i].model);
    pipelines.push_back(PipelineConfig::from_json(loaded[i].extra.at("pipeline")));
  }

  auto rows = noise_bench(models, pipelines, eval_set, graph, epsilons, trials, seed);

  fs::create_directories(dir_of(out));
  std::ostringstream csv;
  csv << "model,epsilon,trial,accuracy\n";
  for (const auto& r : rows)
    csv << r.model << "," << r.epsilon << "," << r.trial << "," << r.accuracy << "\n";
  write_text_file(out, csv.str());

  // Mean accuracy per (model, epsilon) for the curve.
  std::vector<PlotSeries> series;
  for (const auto& [name, model] : models) {
    PlotSeries s;
    s.label = name;
    for (double eps : epsilons) {
      double acc = 0.0;
      int n = 0;
      for (const auto& r : rows)
        if (r.model == name && r.epsilon == eps) {
          acc += r.accuracy;
          ++n;
        }
      if (n) s.points.emplace_back(eps, acc / n);
    }
    series.push_back(std::move(s));
  }
  const std::string svg_path = out.substr(0, out.find_last_of('.')) + ".svg";
  write_text_file(svg_path,
                  svg_line_chart("Accuracy under validation noise", "epsilon", "accuracy",
                                 series));

  nlohmann::ordered_json cfg;
  cfg["checkpoints"] = checkpoints;
  cfg["epsilons"] = epsilons;
  cfg["trials"] = trials;
  cfg["seed"] = seed;
  cfg["split"] = split;
  cfg["data"] = data_dir;
  manifest_register(dir_of(out), "noise_bench", {base_of(out), base_of(svg_path)}, cfg);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

int cmd_probe(const std::string& data_dir, const std::string& kind, std::size_t K, double lr,
              std::size_t epochs, std::uint64_t seed, const std::string& out,
              bool include_original, std::size_t batch, double momentum, double val_fraction,
              const CommonModelFlags& model_flags) {
  Dataset ds = load_dataset(data_dir);
  const SkeletonGraph graph = SkeletonGraph::desk_default();

  ProbeConfig pc;
  pc.kind = probe_kind_from(kind);
  pc.K = K;
  pc.include_original = include_original;
  pc.lr = lr;
  pc.momentum = momentum;
  pc.epochs = epochs;
  pc.batch_size = batch;
  pc.seed = seed;
  pc.val_fraction = val_fraction;

  ProbeResult result = probe_train(model_flags.to_config(), ds, graph, pc);

  fs::create_directories(dir_of(out));
  // Mean per-frame curve over the held-out samples; spec format
  // frame,value,kind.
  std::vector<double> mean(result.frames_out, 0.0);
  for (const auto& c : result.curves)
    for (std::size_t t = 0; t < c.values.size(); ++t) mean[t] += c.values[t];
  for (double& v : mean) v /= static_cast<double>(result.curves.size());
  std::ostringstream csv;
  csv << "frame,value,kind\n";
  for (std::size_t t = 0; t < mean.size(); ++t)
    csv << t << "," << mean[t] << "," << kind << "\n";
  write_text_file(out + ".curves.csv", csv.str());

  nlohmann::ordered_json summary;
  summary["config"] = result.config;
  summary["mean_monotonicity"] = result.mean_monotonicity;
  summary["frames_out"] = result.frames_out;
  auto& per = summary["held_out"] = nlohmann::ordered_json::array();
  for (const auto& c : result.curves)
    per.push_back({{"sample", c.sample_index}, {"monotonicity", c.monotonicity}});
  write_text_file(out + ".summary.json", summary.dump(2));

  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < result.curves.size() && i < 8; ++i) {
    PlotSeries s;
    s.label = "sample " + std::to_string(result.curves[i].sample_index);
    for (std::size_t t = 0; t < result.curves[i].values.size(); ++t)
      s.points.emplace_back(static_cast<double>(t), result.curves[i].values[t]);
    series.push_back(std::move(s));
  }
  write_text_file(out + ".svg",
                  svg_line_chart("Per-frame chronological values (" + kind + ")", "frame",
                                 "normalized value", series));

  const std::string dir = dir_of(out), base = base_of(out);
  manifest_register(dir, "probe",
                    {base + ".curves.csv", base + ".summary.json", base + ".svg"},
                    result.config);
  std::cout << "probe kind=" << kind << ": mean monotonicity " << result.mean_monotonicity
            << " over " << result.curves.size() << " held-out samples (" << result.frames_out
            << " frames)\n";
  return 0;
}

int cmd_ensemble(const std::vector<std::string>& checkpoints, const std::string& data_dir,
                 const std::string& split, double val_fraction, const std::string& out) {
  if (checkpoints.size() < 2) throw std::runtime_error("ensemble: need at least 2 checkpoints");
  Dataset eval_set = load_split(data_dir, split, val_fraction);
  const SkeletonGraph graph = SkeletonGraph::desk_default();

  std::vector<LoadedModel> loaded;
  for (const auto& ck : checkpoints) loaded.push_back(load_model(ck));

  std::vector<int> labels;
  for (const auto& s : eval_set.samples) labels.push_back(s.label);

  std::vector<std::vector<Array4>> inputs;
  std::vector<const RecognizerModel*> models;
  std::vector<const std::vector<Array4>*> input_ptrs;
  for (auto& lm : loaded) {
    inputs.push_back(prepare_all(eval_set, graph,
                                 PipelineConfig::from_json(lm.extra.at("pipeline"))));
    models.push_back(&lm.model);
  }
  for (const auto& in : inputs) input_ptrs.push_back(&in);

  nlohmann::ordered_json names = nlohmann::ordered_json::array();
  nlohmann::ordered_json individual = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    names.push_back(loaded[i].name.empty() ? base_of(checkpoints[i]) : loaded[i].name);
    individual.push_back(evaluate(loaded[i].model, inputs[i], labels).accuracy);
  }
  nlohmann::ordered_json j;
  j["checkpoints"] = names;
  j["individual_accuracies"] = individual;
  const double ens = ensemble_eval(models, input_ptrs, labels);
  j["ensemble_accuracy"] = ens;
  j["samples"] = labels.size();
  j["split"] = split;

  std::cout << j.dump(2) << "\n";
  if (!out.empty()) {
    fs::create_directories(dir_of(out));
    write_text_file(out, j.dump(2));
    manifest_register(dir_of(out), "ensemble", {base_of(out)}, j);
  }
  return 0;
}

// Table 1-style run comparison plus the per-class confusion tables and the
// noise/probe figures, from the verified experiment manifest.
int cmd_report(const std::string& experiment_dir) {
  nlohmann::json manifest = manifest_load_verified(experiment_dir);
  std::ostringstream md;
  md << "# Experiment report: " << manifest.value("experiment", experiment_dir) << "\n\n";

  struct RunInfo {
    std::string name;
    nlohmann::json run;
  };
  std::vector<RunInfo> runs;
  std::vector<std::string> bench_files, probe_files;
  for (const auto& entry : manifest.at("entries")) {
    const std::string kind = entry.at("kind");
    if (kind == "train") {
      const std::string file = entry.at("files")[0].at("file");
      std::ifstream in(fs::path(experiment_dir) / file);
      nlohmann::json run;
      in >> run;
      runs.push_back({run.value("name", file), run});
    } else if (kind == "noise_bench") {
      bench_files.push_back(entry.at("files")[0].at("file"));
    } else if (kind == "probe") {
      probe_files.push_back(entry.at("files")[1].at("file"));  // summary.json
    }
  }

  if (!runs.empty()) {
    md << "## Runs\n\n";
    md << "| run | encoding | lambda_crl | params | backbone | val acc | acc delta |\n";
    md << "|---|---|---|---|---|---|---|\n";
    // Baseline: first run with no encoding and no CRL, else the first run.
    std::size_t baseline = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& cfg = runs[i].run.at("config");
      if (cfg.at("pipeline").at("encoding") == "none" && cfg.at("lambda_crl") == 0.0) {
        baseline = i;
        break;
      }
    }
    const double base_acc = runs[baseline].run.at("val_accuracy");
    for (const auto& r : runs) {
      const double acc = r.run.at("val_accuracy");
      md << "| " << r.name << " | " << r.run.at("config").at("pipeline").at("encoding")
         << " | " << r.run.at("config").at("lambda_crl") << " | "
         << r.run.at("params").at("total") << " | " << r.run.at("params").at("backbone")
         << " | " << acc << " | " << (acc - base_acc >= 0 ? "+" : "") << acc - base_acc
         << " |\n";
    }
    md << "\n";

    const auto& base_run = runs[baseline].run;
    const auto class_names = base_run.at("class_names").get<std::vector<std::string>>();
    auto confused_name = [&](const nlohmann::json& run, std::size_t c) -> std::string {
      const int mc = run.at("most_confused")[c];
      return mc < 0 ? "-" : class_names[static_cast<std::size_t>(mc)];
    };
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (i == baseline) continue;
      md << "## Per-class accuracy: " << runs[baseline].name << " vs " << runs[i].name
         << "\n\n";
      md << "| class | base acc | base similar action | acc | acc delta | similar action |\n";
      md << "|---|---|---|---|---|---|\n";
      for (std::size_t c = 0; c < class_names.size(); ++c) {
        const double ba = base_run.at("per_class_accuracy")[c];
        const double ra = runs[i].run.at("per_class_accuracy")[c];
        md << "| " << class_names[c] << " | " << ba << " | " << confused_name(base_run, c)
           << " | " << ra << " | " << (ra - ba >= 0 ? "+" : "") << ra - ba << " | "
           << confused_name(runs[i].run, c) << " |\n";
      }
      md << "\n";
    }
  }

  for (const auto& file : bench_files) {
    md << "## Noise robustness (" << file << ")\n\n";
    const auto rows = read_csv((fs::path(experiment_dir) / file).string());
    std::map<std::string, std::map<double, std::pair<double, int>>> agg;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      auto& cell = agg[rows[i][0]][std::stod(rows[i][1])];
      cell.first += std::stod(rows[i][3]);
      cell.second += 1;
    }
    md << "| model | epsilon | mean accuracy |\n|---|---|---|\n";
    for (const auto& [model, per_eps] : agg)
      for (const auto& [eps, acc] : per_eps)
        md << "| " << model << " | " << eps << " | " << acc.first / acc.second << " |\n";
    const std::string svg = file.substr(0, file.find_last_of('.')) + ".svg";
    md << "\n![noise curve](" << svg << ")\n\n";
  }

  for (const auto& file : probe_files) {
    std::ifstream in(fs::path(experiment_dir) / file);
    nlohmann::json summary;
    in >> summary;
    md << "## Chronological-order probe (" << file << ")\n\n";
    md << "- kind: " << summary.at("config").at("kind") << "\n";
    md << "- mean monotonicity fraction: " << summary.at("mean_monotonicity") << "\n";
    md << "- output frames: " << summary.at("frames_out") << "\n\n";
  }

  const std::string out_path = (fs::path(experiment_dir) / "report.md").string();
  write_text_file(out_path, md.str());
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal-accessory toolkit: discrete cosine encoding and chronological loss on "
               "synthetic skeletal actions"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic skeletal-action dataset");
  std::size_t classes = 10, samples = 100, frames = 300, joints = 9, persons = 1;
  long pairs = -1, freq = -1;
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  synth->add_option("--classes", classes, "Total class count (pairs derived)");
  synth->add_option("--pairs", pairs, "Explicit reversal-pair count (overrides --classes)");
  synth->add_option("--freq-classes", freq, "Explicit frequency-class count");
  synth->add_option("--samples", samples, "Samples per class");
  synth->add_option("--frames", frames, "Frames per sequence")->check(CLI::PositiveNumber);
  synth->add_option("--joints", joints, "Joint count (desk skeleton: 9)");
  synth->add_option("--persons", persons, "Person slots");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train BKB-mini on a dataset");
  std::string data_dir, features = "joint", encoding = "none", train_out, train_name;
  std::size_t K = 8, epochs = 20, batch = 16, pad_frames = 0;
  double lambda_crl = 1.0, lr = 0.05, momentum = 0.9, val_fraction = 0.2;
  std::uint64_t train_seed = 1;
  std::vector<std::size_t> decay_epochs;
  CommonModelFlags train_model;
  train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  train_cmd->add_option("--features", features, "joint|bone");
  train_cmd->add_option("--encoding", encoding, "none|dce|rand_pm1|repeat");
  train_cmd->add_option("--K", K, "Encoding block count");
  train_cmd->add_option("--lambda-crl", lambda_crl, "Chronological-loss weight");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--seed", train_seed, "Run seed");
  train_cmd->add_option("--out", train_out, "Checkpoint path prefix")->required();
  train_cmd->add_option("--lr", lr, "Initial learning rate");
  train_cmd->add_option("--momentum", momentum, "SGD momentum");
  train_cmd->add_option("--batch", batch, "Batch size");
  train_cmd->add_option("--val-fraction", val_fraction, "Held-out fraction");
  train_cmd->add_option("--pad-frames", pad_frames, "Repeat-pad to this length (0 keeps input)");
  train_cmd->add_option("--decay-epochs", decay_epochs, "Explicit decay epochs")->delimiter(',');
  train_cmd->add_option("--name", train_name, "Run label (defaults to features_encoding)");
  add_model_flags(train_cmd, train_model);

  // noise-bench
  auto* bench = app.add_subcommand("noise-bench", "Accuracy sweep over Gaussian noise levels");
  std::vector<std::string> bench_ckpts;
  std::vector<double> epsilons = {0.0, 0.02, 0.05, 0.1, 0.2};
  std::size_t trials = 5;
  std::uint64_t bench_seed = 9;
  std::string bench_data, bench_out, bench_split = "val";
  double bench_val_fraction = 0.2;
  bench->add_option("--checkpoint", bench_ckpts, "Checkpoint prefix (repeatable)")
      ->required()
      ->delimiter(',');
  bench->add_option("--data", bench_data, "Dataset directory")->required();
  bench->add_option("--epsilons", epsilons, "Noise levels")->delimiter(',');
  bench->add_option("--trials", trials, "Trials per level");
  bench->add_option("--seed", bench_seed, "Noise seed");
  bench->add_option("--out", bench_out, "Output CSV path")->required();
  bench->add_option("--split", bench_split, "val|all");
  bench->add_option("--val-fraction", bench_val_fraction, "Held-out fraction for --split val");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "Chronological-order probe");
  std::string probe_data, probe_kind = "tte", probe_out;
  std::size_t probe_K = 3, probe_epochs = 30, probe_batch = 8;
  double probe_lr = 0.05, probe_momentum = 0.9, probe_val_fraction = 0.2;
  std::uint64_t probe_seed = 5;
  bool include_original = false;
  CommonModelFlags probe_model;
  probe_cmd->add_option("--data", probe_data, "Dataset directory")->required();
  probe_cmd->add_option("--kind", probe_kind, "none|random|tte");
  probe_cmd->add_option("--K", probe_K, "Encoding block count");
  probe_cmd->add_option("--lr", probe_lr, "Learning rate");
  probe_cmd->add_option("--epochs", probe_epochs, "Probe epochs");
  probe_cmd->add_option("--seed", probe_seed, "Run seed");
  probe_cmd->add_option("--out", probe_out, "Output path prefix")->required();
  probe_cmd->add_flag("--include-original", include_original,
                      "Keep the original block alongside the TTE blocks");
  probe_cmd->add_option("--batch", probe_batch, "Batch size");
  probe_cmd->add_option("--momentum", probe_momentum, "SGD momentum");
  probe_cmd->add_option("--val-fraction", probe_val_fraction, "Held-out fraction");
  add_model_flags(probe_cmd, probe_model);

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "Average softmax scores of several checkpoints");
  std::vector<std::string> ens_ckpts;
  std::string ens_data, ens_out, ens_split = "val";
  double ens_val_fraction = 0.2;
  ens->add_option("--checkpoints", ens_ckpts, "Comma-separated checkpoint prefixes")
      ->required()
      ->delimiter(',');
  ens->add_option("--data", ens_data, "Dataset directory")->required();
  ens->add_option("--split", ens_split, "val|all");
  ens->add_option("--val-fraction", ens_val_fraction, "Held-out fraction for --split val");
  ens->add_option("--out", ens_out, "Optional JSON output path");

  // report
  auto* report = app.add_subcommand("report", "Render markdown + SVG report for an experiment");
  std::string experiment_dir;
  report->add_option("--experiment-dir", experiment_dir, "Experiment directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(classes, pairs, freq, samples, frames, joints, persons, synth_seed,
                       synth_out);
    if (train_cmd->parsed())
      return cmd_train(data_dir, features, encoding, K, lambda_crl, epochs, train_seed,
                       train_out, lr, momentum, batch, val_fraction, pad_frames, decay_epochs,
                       train_model, train_name);
    if (bench->parsed())
      return cmd_noise_bench(bench_ckpts, bench_data, epsilons, trials, bench_seed, bench_out,
                             bench_split, bench_val_fraction);
    if (probe_cmd->parsed())
      return cmd_probe(probe_data, probe_kind, probe_K, probe_lr, probe_epochs, probe_seed,
                       probe_out, include_original, probe_batch, probe_momentum,
                       probe_val_fraction, probe_model);
    if (ens->parsed())
      return cmd_ensemble(ens_ckpts, ens_data, ens_split, ens_val_fraction, ens_out);
    if (report->parsed()) return cmd_report(experiment_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
