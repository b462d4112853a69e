#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronodce/dataset.hpp"
#include "chronodce/dct.hpp"
#include "chronodce/losses.hpp"
#include "chronodce/model.hpp"
#include "chronodce/parallel.hpp"
#include "chronodce/training.hpp"

namespace chronodce {

// The chronological-order probe: keep the backbone but skip the final
// temporal pooling, map each frame embedding to a scalar with the MLP head,
// min-max normalize into [0,1], and train only the order loss.
enum class ProbeKind { none, random, tte };

inline std::string to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::none: return "none";
    case ProbeKind::random: return "random";
    default: return "tte";
  }
}

inline ProbeKind probe_kind_from(const std::string& s) {
  if (s == "none") return ProbeKind::none;
  if (s == "random") return ProbeKind::random;
  if (s == "tte") return ProbeKind::tte;
  throw std::invalid_argument("unknown probe kind: " + s);
}

struct ProbeConfig {
  ProbeKind kind = ProbeKind::tte;
  std::size_t K = 3;
  bool include_original = false;  // the appendix TTE drops the original block
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 5;
  double val_fraction = 0.2;

  std::size_t input_channels() const {
    if (kind == ProbeKind::none) return 3;
    return (K + (include_original ? 1 : 0)) * 3;
  }
};

// (v - min v) / (max v - min v); a constant vector maps to zeros and sets
// the degenerate flag instead of failing.
struct MinMaxResult {
  std::vector<double> values;
  bool degenerate = false;
};

inline MinMaxResult minmax_norm(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("minmax_norm: empty input");
  MinMaxResult r;
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == lo) {
    r.values.assign(v.size(), 0.0);
    r.degenerate = true;
    return r;
  }
  r.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r.values[i] = (v[i] - lo) / (hi - lo);
  return r;
}

// Differentiable variant used during probe training. Min/max route through
// the first extremal index (ties to the lowest); the degenerate case has
// zero gradient.
inline Tensor minmax_norm_op(const Tensor& v, bool* degenerate = nullptr) {
  const auto& val = v.value();
  if (val.empty()) throw std::invalid_argument("minmax_norm: empty input");
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < val.size(); ++i) {
    if (val[i] < val[imin]) imin = i;
    if (val[i] > val[imax]) imax = i;
  }
  const double lo = val[imin], hi = val[imax];
  if (degenerate) *degenerate = hi == lo;
  if (hi == lo)
    return make_op(v.shape(), std::vector<double>(val.size(), 0.0), {v}, [](TensorNode&) {});
  std::vector<double> out(val.size());
  const double range = hi - lo;
  for (std::size_t i = 0; i < val.size(); ++i) out[i] = (val[i] - lo) / range;
  return make_op(v.shape(), std::move(out), {v}, [imin, imax, lo, range](TensorNode& n) {
    auto& p = *n.parents[0];
    p.ensure_grad();
    double g_sum = 0.0, gy_sum = 0.0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      g_sum += n.grad[i];
      gy_sum += n.grad[i] * n.value[i];
    }
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] / range;
    p.grad[imin] -= g_sum / range;
    p.grad[imax] -= gy_sum / range;
    p.grad[imin] += gy_sum / range;
    (void)lo;
  });
}

// Fraction of adjacent pairs with v_{t+1} >= v_t - 1e-12.
inline double monotonicity_fraction(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("monotonicity_fraction: need >= 2 values");
  std::size_t ok = 0;
  for (std::size_t t = 0; t + 1 < v.size(); ++t)
    if (v[t + 1] >= v[t] - 1e-12) ++ok;
  return static_cast<double>(ok) / static_cast<double>(v.size() - 1);
}

// Kind-specific input expansion. The random masks are drawn once per
// sequence and frozen, uniform on [0,1], one fresh mask per block so the
// shape matches the TTE expansion.
inline Array4 probe_encode(const SkeletonSequence& features, const ProbeConfig& cfg,
                           std::size_t sample_key) {
  switch (cfg.kind) {
    case ProbeKind::none:
      return features.coords;
    case ProbeKind::random: {
      Rng rng(mix_seed(cfg.seed, 0x70726f62ULL, sample_key));
      std::vector<std::vector<double>> masks(cfg.K);
      for (auto& m : masks) {
        m.resize(features.coords.t);
        for (double& x : m) x = rng.uniform();
      }
      return masked_encode(features.coords, masks, cfg.include_original);
    }
    default:
      return dce_encode(features.coords, DceConfig{cfg.K, cfg.include_original});
  }
}

struct ProbeForward {
  Tensor values;  // normalized, length T'
  bool degenerate = false;
};

inline ProbeForward probe_forward(const RecognizerModel& model, const Array4& input) {
  ForwardResult fwd = forward(model, input);
  Tensor raw = chron_head(model, fwd.embeddings);
  ProbeForward out;
  out.values = minmax_norm_op(raw, &out.degenerate);
  return out;
}

struct ProbeCurve {
  std::size_t sample_index = 0;
  std::vector<double> values;
  double monotonicity = 0.0;
};

struct ProbeResult {
  RecognizerModel model;
  std::vector<ProbeCurve> curves;  // held-out samples
  double mean_monotonicity = 0.0;
  std::size_t frames_out = 0;
  nlohmann::ordered_json config;
};

namespace detail {

struct ProbeGrad {
  std::vector<std::vector<double>> grads;
  double loss = 0.0;
};

inline ProbeGrad probe_backward(const RecognizerModel& worker, const Array4& input) {
  ProbeForward fwd = probe_forward(worker, input);
  Tensor loss = probe_order_loss(fwd.values);
  backward(loss);
  ProbeGrad out;
  out.loss = loss.item();
  for (const auto& p : worker.parameters()) out.grads.push_back(p.grad());
  return out;
}

}  // namespace detail

// Optimizes the order loss alone (constant lr) and reports per-frame value
// curves plus the monotonicity fraction on the held-out split.
inline ProbeResult probe_train(const ModelConfig& base_cfg, const Dataset& data,
                               const SkeletonGraph& graph, const ProbeConfig& cfg) {
  if (data.samples.empty()) throw std::invalid_argument("probe_train: empty dataset");

  ModelConfig mcfg = base_cfg;
  mcfg.joints = graph.joints;
  mcfg.num_classes = std::max<std::size_t>(1, data.num_classes());
  mcfg.input_channels = cfg.input_channels();
  mcfg.validate();

  PipelineConfig stage1;  // normalization only; expansion is kind-specific
  stage1.encoding = EncodingKind::none;
  std::vector<Array4> inputs(data.samples.size());
  parallel_for(data.samples.size(), [&](std::size_t i) {
    inputs[i] = probe_encode(preprocess_features(data.samples[i], graph, stage1), cfg, i);
  });

  const Split split = stratified_split(data, cfg.val_fraction);
  if (split.train.empty()) throw std::invalid_argument("probe_train: empty training split");

  RecognizerModel model = init_model(mcfg, graph, cfg.seed);
  auto params = model.parameters();
  std::vector<std::vector<double>> velocity;
  for (const auto& p : params) velocity.emplace_back(p.size(), 0.0);

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x7368ULL, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
      std::vector<detail::ProbeGrad> results(bsz);
      try {
        parallel_for(bsz, [&](std::size_t b) {
          const RecognizerModel worker = model.clone();
          results[b] = detail::probe_backward(worker, inputs[order[start + b]]);
        });
      } catch (const std::exception& e) {
        throw std::runtime_error("probe_train: diverged at epoch " + std::to_string(epoch) +
                                 ": " + e.what());
      }
      for (const auto& r : results)
        if (!std::isfinite(r.loss))
          throw std::runtime_error("probe_train: non-finite loss at epoch " +
                                   std::to_string(epoch));
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        std::vector<double> grad(params[pi].size(), 0.0);
        for (std::size_t b = 0; b < bsz; ++b)
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += results[b].grads[pi][i];
        const double inv = 1.0 / static_cast<double>(bsz);
        for (double& g : grad) g *= inv;
        sgd_step(params[pi].value(), grad, velocity[pi], cfg.lr, cfg.momentum);
      }
    }
  }

  ProbeResult result;
  result.curves.resize(split.val.size());
  parallel_for(split.val.size(), [&](std::size_t vi) {
    const std::size_t idx = split.val[vi];
    ProbeForward fwd = probe_forward(model, inputs[idx]);
    ProbeCurve curve;
    curve.sample_index = idx;
    curve.values = fwd.values.value();
    curve.monotonicity = monotonicity_fraction(curve.values);
    result.curves[vi] = std::move(curve);
  });
  double acc = 0.0;
  for (const auto& c : result.curves) acc += c.monotonicity;
  result.mean_monotonicity = result.curves.empty() ? 0.0 : acc / result.curves.size();
  result.frames_out = result.curves.empty() ? 0 : result.curves.front().values.size();
  result.config = {{"kind", to_string(cfg.kind)},
                   {"K", cfg.K},
                   {"include_original", cfg.include_original},
                   {"lr", cfg.lr},
                   {"momentum", cfg.momentum},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"seed", cfg.seed},
                   {"val_fraction", cfg.val_fraction},
                   {"model", config_to_json(mcfg)}};
  result.model = std::move(model);
  return result;
}

}  // namespace chronodce
