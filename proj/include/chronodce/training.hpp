#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronodce/dataset.hpp"
#include "chronodce/dct.hpp"
#include "chronodce/losses.hpp"
#include "chronodce/model.hpp"
#include "chronodce/parallel.hpp"
#include "chronodce/rng.hpp"
#include "chronodce/skeleton.hpp"

namespace chronodce {

enum class FeatureStream { joint, bone };
enum class EncodingKind { none, dce, rand_pm1, repeat };

inline std::string to_string(FeatureStream f) { return f == FeatureStream::joint ? "joint" : "bone"; }
inline std::string to_string(EncodingKind e) {
  switch (e) {
    case EncodingKind::none: return "none";
    case EncodingKind::dce: return "dce";
    case EncodingKind::rand_pm1: return "rand_pm1";
    default: return "repeat";
  }
}

inline FeatureStream feature_stream_from(const std::string& s) {
  if (s == "joint") return FeatureStream::joint;
  if (s == "bone") return FeatureStream::bone;
  throw std::invalid_argument("unknown feature stream: " + s);
}

inline EncodingKind encoding_from(const std::string& s) {
  if (s == "none") return EncodingKind::none;
  if (s == "dce") return EncodingKind::dce;
  if (s == "rand_pm1") return EncodingKind::rand_pm1;
  if (s == "repeat") return EncodingKind::repeat;
  throw std::invalid_argument("unknown encoding: " + s);
}

// The sample pipeline: normalize/translate, optional bone extraction,
// optional repeat padding, then the configured channel expansion. The
// expansion is input-deterministic, so it runs once per sequence at load
// time. rand_pm1 masks are drawn once from encode_seed and shared by every
// sample, mirroring how the cosine basis is one fixed set of factors.
struct PipelineConfig {
  FeatureStream features = FeatureStream::joint;
  EncodingKind encoding = EncodingKind::none;
  std::size_t K = 8;
  std::size_t pad_frames = 0;  // 0 keeps the native length
  std::uint64_t encode_seed = 0;

  std::size_t input_channels() const {
    return encoding == EncodingKind::none ? 3 : (K + 1) * 3;
  }

  nlohmann::ordered_json to_json() const {
    return {{"features", chronodce::to_string(features)},
            {"encoding", chronodce::to_string(encoding)},
            {"K", K},
            {"pad_frames", pad_frames},
            {"encode_seed", encode_seed}};
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig p;
    p.features = feature_stream_from(j.at("features"));
    p.encoding = encoding_from(j.at("encoding"));
    p.K = j.at("K");
    p.pad_frames = j.at("pad_frames");
    p.encode_seed = j.at("encode_seed");
    return p;
  }
};

// Stage 1: geometry. Noise-robustness sweeps perturb the output of this
// stage before encoding.
inline SkeletonSequence preprocess_features(const SkeletonSequence& seq,
                                            const SkeletonGraph& graph,
                                            const PipelineConfig& p) {
  SkeletonSequence s = normalize_translate(seq, graph);
  if (p.features == FeatureStream::bone) s = bones(s, graph);
  if (p.pad_frames > 0) s = pad_repeat(s, p.pad_frames);
  return s;
}

// Stage 2: channel expansion. rand_pm1 masks are drawn fresh per sample
// (seeded by encode_seed and the sample key), matching torch.rand-style
// draws; the dce basis is the same fixed factor set for every sample.
inline Array4 encode_features(const SkeletonSequence& seq, const PipelineConfig& p,
                              std::size_t sample_key = 0) {
  switch (p.encoding) {
    case EncodingKind::none: return seq.coords;
    case EncodingKind::dce: return dce_encode(seq, DceConfig{p.K, true});
    case EncodingKind::rand_pm1:
      return control_encoding(seq, ControlKind::rand_pm1, p.K,
                              mix_seed(p.encode_seed, sample_key));
    default: return control_encoding(seq, ControlKind::repeat, p.K, p.encode_seed);
  }
}

inline Array4 prepare_sample(const SkeletonSequence& seq, const SkeletonGraph& graph,
                             const PipelineConfig& p, std::size_t sample_key = 0) {
  return encode_features(preprocess_features(seq, graph, p), p, sample_key);
}

inline std::vector<Array4> prepare_all(const Dataset& ds, const SkeletonGraph& graph,
                                       const PipelineConfig& p) {
  std::vector<Array4> out(ds.samples.size());
  parallel_for(ds.samples.size(),
               [&](std::size_t i) { out[i] = prepare_sample(ds.samples[i], graph, p, i); });
  return out;
}

// --- optimizer ---------------------------------------------------------

// velocity <- momentum * velocity + grad; param <- param - lr * velocity.
inline void sgd_step(std::vector<double>& param, const std::vector<double>& grad,
                     std::vector<double>& velocity, double lr, double momentum) {
  if (param.size() != grad.size() || param.size() != velocity.size())
    throw std::invalid_argument("sgd_step: param/grad/velocity sizes disagree");
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= lr * velocity[i];
  }
}

struct TrainConfig {
  double lr0 = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 20;                  // the paper schedule runs 60
  std::vector<std::size_t> decay_epochs;    // empty: paper schedule scaled to `epochs`
  double decay_factor = 0.1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  LossWeights loss;
  FeatureStream features = FeatureStream::joint;
  EncodingKind encoding = EncodingKind::none;
  std::size_t K = 8;
  std::size_t pad_frames = 0;
  double val_fraction = 0.2;

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.features = features;
    p.encoding = encoding;
    p.K = K;
    p.pad_frames = pad_frames;
    p.encode_seed = mix_seed(seed, 0x656e63ULL);
    return p;
  }
};

// Decay epochs for the configured run length. The paper decays at epochs
// 28, 36, 44, 52 of 60; other lengths scale those positions proportionally
// (rounded to nearest; collapsing duplicates).
inline std::vector<std::size_t> resolved_decay_epochs(const TrainConfig& cfg) {
  std::vector<std::size_t> out;
  if (!cfg.decay_epochs.empty()) {
    out = cfg.decay_epochs;
  } else {
    for (std::size_t d : {28, 36, 44, 52}) {
      const double scaled = static_cast<double>(d) * static_cast<double>(cfg.epochs) / 60.0;
      const auto e = static_cast<std::size_t>(std::llround(scaled));
      if (e >= 1 && e < cfg.epochs && (out.empty() || e > out.back())) out.push_back(e);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] >= cfg.epochs)
      throw std::invalid_argument("decay epochs must be < epochs");
    if (i > 0 && out[i] <= out[i - 1])
      throw std::invalid_argument("decay epochs must be strictly increasing");
  }
  return out;
}

// lr0 * factor^(number of decay epochs <= epoch); non-increasing in epoch.
inline double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  const auto decays = resolved_decay_epochs(cfg);
  std::size_t applied = 0;
  for (std::size_t d : decays)
    if (d <= epoch) ++applied;
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(applied));
}

// --- evaluation --------------------------------------------------------

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - zmax);
  for (double& v : p) v /= sum;
  return p;
}

inline int argmax_class(const std::vector<double>& logits) {
  // Ties break to the lowest class index.
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best;
}

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // row = true class
  std::vector<int> most_confused;                   // -1 when a row has no errors
};

inline EvalResult evaluate_logits(const std::vector<std::vector<double>>& logits,
                                  const std::vector<int>& labels, std::size_t num_classes) {
  if (labels.empty()) throw std::invalid_argument("evaluate: empty dataset");
  EvalResult r;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw std::invalid_argument("evaluate: label out of range");
    const int pred = argmax_class(logits[i]);
    r.confusion[labels[i]][pred]++;
    if (pred == labels[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  r.per_class.assign(num_classes, 0.0);
  r.most_confused.assign(num_classes, -1);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t row_total = 0, best_off = 0;
    for (std::size_t j = 0; j < num_classes; ++j) row_total += r.confusion[c][j];
    if (row_total > 0)
      r.per_class[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(row_total);
    for (std::size_t j = 0; j < num_classes; ++j) {
      if (j == c) continue;
      if (r.confusion[c][j] > best_off) {
        best_off = r.confusion[c][j];
        r.most_confused[c] = static_cast<int>(j);
      }
    }
  }
  return r;
}

inline std::vector<std::vector<double>> predict_logits(const RecognizerModel& model,
                                                       const std::vector<Array4>& inputs) {
  std::vector<std::vector<double>> logits(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t i) {
    logits[i] = forward(model, inputs[i]).logits.value();
  });
  return logits;
}

inline EvalResult evaluate(const RecognizerModel& model, const std::vector<Array4>& inputs,
                           const std::vector<int>& labels) {
  return evaluate_logits(predict_logits(model, inputs), labels, model.cfg.num_classes);
}

// Averages per-model softmax vectors, then takes the argmax.
inline double ensemble_accuracy(const std::vector<std::vector<std::vector<double>>>& per_model_logits,
                                const std::vector<int>& labels) {
  if (per_model_logits.empty()) throw std::invalid_argument("ensemble: no models");
  if (labels.empty()) throw std::invalid_argument("ensemble: empty dataset");
  const std::size_t classes = per_model_logits[0][0].size();
  for (const auto& logits : per_model_logits)
    if (logits.size() != labels.size() || logits[0].size() != classes)
      throw std::invalid_argument("ensemble: class-count mismatch across models");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> mixed(classes, 0.0);
    for (const auto& logits : per_model_logits) {
      const auto p = softmax(logits[i]);
      for (std::size_t c = 0; c < classes; ++c) mixed[c] += p[c];
    }
    if (argmax_class(mixed) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

inline double ensemble_eval(const std::vector<const RecognizerModel*>& models,
                            const std::vector<const std::vector<Array4>*>& per_model_inputs,
                            const std::vector<int>& labels) {
  if (models.empty()) throw std::invalid_argument("ensemble_eval: no models");
  const std::size_t classes = models[0]->cfg.num_classes;
  for (const auto* m : models)
    if (m->cfg.num_classes != classes)
      throw std::invalid_argument("ensemble_eval: class-count mismatch across models");
  std::vector<std::vector<std::vector<double>>> per_model_logits;
  for (std::size_t mi = 0; mi < models.size(); ++mi)
    per_model_logits.push_back(predict_logits(*models[mi], *per_model_inputs[mi]));
  return ensemble_accuracy(per_model_logits, labels);
}

// --- training loop -------------------------------------------------------

struct EpochStats {
  double loss = 0.0;
  double crl = 0.0;
  double accuracy = 0.0;
};

struct TrainRun {
  nlohmann::ordered_json config;
  std::vector<EpochStats> epoch_stats;
  double val_accuracy = 0.0;
  EvalResult val;
  double wall_seconds = 0.0;
  ParamCount params;
};

struct TrainResult {
  RecognizerModel model;
  TrainRun run;
};

namespace detail {

struct SampleGrad {
  std::vector<std::vector<double>> grads;
  double loss = 0.0;
  double crl = 0.0;
  int pred = 0;
};

inline SampleGrad sample_backward(const RecognizerModel& worker, const Array4& input, int label,
                                  const LossWeights& weights) {
  ForwardResult fwd = forward(worker, input);
  Tensor values = chron_head(worker, fwd.embeddings);
  Tensor crl = crl_loss(values);
  Tensor cls = cross_entropy(fwd.logits, static_cast<std::size_t>(label));
  Tensor total = combined_loss(cls, crl, weights);
  backward(total);
  SampleGrad out;
  out.loss = total.item();
  out.crl = crl.item();
  out.pred = argmax_class(fwd.logits.value());
  for (const auto& p : worker.parameters()) out.grads.push_back(p.grad());
  return out;
}

}  // namespace detail

// Deterministic under config+seed: fixed init, fixed shuffle order, fixed
// gradient-reduction order (independent of worker count).
inline TrainResult train(const ModelConfig& base_cfg, const Dataset& data,
                         const SkeletonGraph& graph, const TrainConfig& tc) {
  if (data.samples.empty()) throw std::invalid_argument("train: empty dataset");
  const auto t_start = std::chrono::steady_clock::now();
  const PipelineConfig pipeline = tc.pipeline();

  ModelConfig cfg = base_cfg;
  cfg.joints = graph.joints;
  cfg.num_classes = data.num_classes();
  cfg.input_channels = pipeline.input_channels();
  cfg.validate();
  resolved_decay_epochs(tc);  // validates the schedule up front

  const std::vector<Array4> inputs = prepare_all(data, graph, pipeline);
  const Split split = stratified_split(data, tc.val_fraction);
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");

  RecognizerModel model = init_model(cfg, graph, tc.seed);
  auto params = model.parameters();
  std::vector<std::vector<double>> velocity;
  for (const auto& p : params) velocity.emplace_back(p.size(), 0.0);

  TrainRun run;
  run.params = param_count(model);

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(tc.seed, 0x73687566ULL, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    const double lr = lr_at(epoch, tc);
    double loss_sum = 0.0, crl_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t bsz = std::min(tc.batch_size, order.size() - start);
      std::vector<detail::SampleGrad> results(bsz);
      try {
        parallel_for(bsz, [&](std::size_t b) {
          const RecognizerModel worker = model.clone();
          const std::size_t idx = order[start + b];
          results[b] =
              detail::sample_backward(worker, inputs[idx], data.samples[idx].label, tc.loss);
        });
      } catch (const std::exception& e) {
        throw std::runtime_error("train: diverged at epoch " + std::to_string(epoch) + ": " +
                                 e.what());
      }

      for (std::size_t b = 0; b < bsz; ++b) {
        if (!std::isfinite(results[b].loss))
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        loss_sum += results[b].loss;
        crl_sum += results[b].crl;
        if (results[b].pred == data.samples[order[start + b]].label) ++correct;
      }
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        std::vector<double> grad(params[pi].size(), 0.0);
        for (std::size_t b = 0; b < bsz; ++b)
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += results[b].grads[pi][i];
        const double inv = 1.0 / static_cast<double>(bsz);
        for (double& g : grad) g *= inv;
        sgd_step(params[pi].value(), grad, velocity[pi], lr, tc.momentum);
      }
    }

    EpochStats stats;
    stats.loss = loss_sum / static_cast<double>(order.size());
    stats.crl = crl_sum / static_cast<double>(order.size());
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    run.epoch_stats.push_back(stats);
  }

  std::vector<Array4> val_inputs;
  std::vector<int> val_labels;
  for (std::size_t i : split.val) {
    val_inputs.push_back(inputs[i]);
    val_labels.push_back(data.samples[i].label);
  }
  if (!val_labels.empty()) {
    run.val = evaluate(model, val_inputs, val_labels);
    run.val_accuracy = run.val.accuracy;
  }

  run.config = {{"lr0", tc.lr0},
                {"momentum", tc.momentum},
                {"epochs", tc.epochs},
                {"decay_epochs", resolved_decay_epochs(tc)},
                {"decay_factor", tc.decay_factor},
                {"batch_size", tc.batch_size},
                {"seed", tc.seed},
                {"lambda_crl", tc.loss.lambda_crl},
                {"val_fraction", tc.val_fraction},
                {"pipeline", pipeline.to_json()},
                {"model", config_to_json(cfg)}};
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(model), std::move(run)};
}

inline nlohmann::ordered_json train_run_to_json(const TrainRun& run,
                                                const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["config"] = run.config;
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : run.epoch_stats)
    epochs.push_back({{"loss", e.loss}, {"crl", e.crl}, {"accuracy", e.accuracy}});
  j["val_accuracy"] = run.val_accuracy;
  j["per_class_accuracy"] = run.val.per_class;
  j["most_confused"] = run.val.most_confused;
  j["confusion"] = run.val.confusion;
  j["class_names"] = class_names;
  j["params"] = {{"backbone", run.params.backbone},
                 {"cls_head", run.params.cls_head},
                 {"chron_head", run.params.chron_head},
                 {"total", run.params.total()}};
  j["wall_seconds"] = run.wall_seconds;
  return j;
}

inline void write_confusion_csv(const std::vector<std::vector<std::size_t>>& confusion,
                                const std::vector<std::string>& class_names,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_confusion_csv: cannot open " + path);
  out << "true_class";
  for (const auto& n : class_names) out << "," << n;
  out << "\n";
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    out << class_names[i];
    for (std::size_t v : confusion[i]) out << "," << v;
    out << "\n";
  }
}

// --- noise-robustness sweep ---------------------------------------------

struct NoiseBenchRow {
  std::string model;
  double epsilon = 0.0;
  std::size_t trial = 0;
  double accuracy = 0.0;
};

// Perturbs the preprocessed validation features with x + eps*n, re-encodes,
// and evaluates. The noise draw depends on (seed, trial, sample) only, so
// every model and every epsilon sees the same perturbation field.
inline std::vector<NoiseBenchRow> noise_bench(
    const std::vector<std::pair<std::string, const RecognizerModel*>>& models,
    const std::vector<PipelineConfig>& pipelines, const Dataset& val,
    const SkeletonGraph& graph, const std::vector<double>& epsilons, std::size_t trials,
    std::uint64_t seed) {
  if (models.size() != pipelines.size())
    throw std::invalid_argument("noise_bench: one pipeline per model required");
  if (trials == 0) throw std::invalid_argument("noise_bench: trials must be >= 1");
  std::vector<NoiseBenchRow> rows;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    std::vector<SkeletonSequence> features(val.samples.size());
    parallel_for(val.samples.size(), [&](std::size_t i) {
      features[i] = preprocess_features(val.samples[i], graph, pipelines[mi]);
    });
    std::vector<int> labels;
    for (const auto& s : val.samples) labels.push_back(s.label);

    for (double eps : epsilons) {
      for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<Array4> inputs(features.size());
        parallel_for(features.size(), [&](std::size_t i) {
          const NoiseSpec spec{eps, mix_seed(seed, trial, i)};
          inputs[i] = encode_features(add_noise(features[i], spec), pipelines[mi], i);
        });
        NoiseBenchRow row;
        row.model = models[mi].first;
        row.epsilon = eps;
        row.trial = trial;
        row.accuracy = evaluate(*models[mi].second, inputs, labels).accuracy;
        rows.push_back(row);
        if (eps == 0.0) break;  // noiseless trials are identical
      }
    }
  }
  return rows;
}

}  // namespace chronodce
