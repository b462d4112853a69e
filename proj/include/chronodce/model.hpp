#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronodce/rng.hpp"
#include "chronodce/sequence.hpp"
#include "chronodce/tensor.hpp"

namespace chronodce {

// BKB-mini: num_stus spatial-temporal units, each one SFE (graph conv) plus
// one TPE per dilation; the STU's configured stride applies at its final
// TPE. Defaults take 300 input frames to 75 embeddings.
struct ModelConfig {
  std::size_t num_stus = 3;
  std::vector<std::size_t> channels = {16, 32, 48};
  std::size_t temporal_kernel = 3;
  std::vector<std::size_t> dilations = {1, 2, 3};
  std::vector<std::size_t> strides = {2, 2, 1};
  std::size_t joints = 9;
  std::size_t num_classes = 0;
  std::size_t input_channels = 3;
  std::size_t chron_hidden = 32;

  void validate() const {
    if (num_stus == 0) throw std::invalid_argument("model config: need at least one STU");
    if (channels.size() != num_stus)
      throw std::invalid_argument("model config: one channel width per STU required");
    if (strides.size() != num_stus)
      throw std::invalid_argument("model config: one stride per STU required");
    if (temporal_kernel % 2 == 0)
      throw std::invalid_argument("model config: temporal kernel must be odd");
    if (dilations.empty()) throw std::invalid_argument("model config: no TPE dilations");
    for (std::size_t d : dilations)
      if (d < 1) throw std::invalid_argument("model config: dilations must be positive");
    for (std::size_t s : strides)
      if (s < 1) throw std::invalid_argument("model config: strides must be positive");
    if (joints == 0 || num_classes == 0 || input_channels == 0 || chron_hidden == 0)
      throw std::invalid_argument("model config: zero-sized field");
  }

  std::size_t stride_product() const {
    std::size_t p = 1;
    for (std::size_t s : strides) p *= s;
    return p;
  }

  std::size_t embed_dim() const { return channels.back(); }
};

// A-hat = D^(-1/2) (A + I) D^(-1/2) over the skeleton graph.
inline std::vector<double> normalized_adjacency(const SkeletonGraph& graph) {
  graph.validate();
  const std::size_t N = graph.joints;
  std::vector<double> a(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) a[i * N + i] = 1.0;
  for (const auto& [p, c] : graph.edges) {
    a[p * N + c] = 1.0;
    a[c * N + p] = 1.0;
  }
  std::vector<double> dinv(N);
  for (std::size_t i = 0; i < N; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < N; ++j) deg += a[i * N + j];
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) a[i * N + j] *= dinv[i] * dinv[j];
  return a;
}

struct RecognizerModel {
  ModelConfig cfg;
  SkeletonGraph graph;
  Tensor adjacency_hat;                         // constant, not a parameter
  std::vector<Tensor> sfe_weights;              // per STU: C_out x C_in
  std::vector<std::vector<Tensor>> tpe_weights; // per STU, per TPE: C x C x k
  Tensor cls_w, cls_b;
  Tensor chron_w1, chron_b1, chron_w2, chron_b2;

  // Canonical ordering; initialization, SGD state, checkpoints, and
  // gradient reduction all follow it.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t s = 0; s < sfe_weights.size(); ++s) {
      out.emplace_back("stu" + std::to_string(s) + ".sfe_w", sfe_weights[s]);
      for (std::size_t j = 0; j < tpe_weights[s].size(); ++j)
        out.emplace_back("stu" + std::to_string(s) + ".tpe" + std::to_string(j) + "_w",
                         tpe_weights[s][j]);
    }
    out.emplace_back("cls.w", cls_w);
    out.emplace_back("cls.b", cls_b);
    out.emplace_back("chron.w1", chron_w1);
    out.emplace_back("chron.b1", chron_b1);
    out.emplace_back("chron.w2", chron_w2);
    out.emplace_back("chron.b2", chron_b2);
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  void zero_grad() {
    for (auto& t : parameters()) t.zero_grad();
  }

  // Deep copy with detached parameter leaves; safe to hand to a worker
  // thread while the original keeps training state.
  RecognizerModel clone() const {
    RecognizerModel m;
    m.cfg = cfg;
    m.graph = graph;
    m.adjacency_hat = adjacency_hat.clone_detached();
    for (const auto& w : sfe_weights) m.sfe_weights.push_back(w.clone_detached());
    for (const auto& stu : tpe_weights) {
      m.tpe_weights.emplace_back();
      for (const auto& w : stu) m.tpe_weights.back().push_back(w.clone_detached());
    }
    m.cls_w = cls_w.clone_detached();
    m.cls_b = cls_b.clone_detached();
    m.chron_w1 = chron_w1.clone_detached();
    m.chron_b1 = chron_b1.clone_detached();
    m.chron_w2 = chron_w2.clone_detached();
    m.chron_b2 = chron_b2.clone_detached();
    return m;
  }
};

namespace detail {

inline Tensor init_param(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v));
}

}  // namespace detail

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] initialization, drawn in
// canonical parameter order so a seed pins the whole model.
inline RecognizerModel init_model(const ModelConfig& cfg, const SkeletonGraph& graph,
                                  std::uint64_t seed) {
  cfg.validate();
  if (graph.joints != cfg.joints)
    throw std::invalid_argument("init_model: graph joints do not match config");
  RecognizerModel m;
  m.cfg = cfg;
  m.graph = graph;
  m.adjacency_hat = Tensor::from({cfg.joints, cfg.joints}, normalized_adjacency(graph));
  Rng rng(mix_seed(seed, 0x6d6f64656cULL));
  const std::size_t k = cfg.temporal_kernel;
  std::size_t c_in = cfg.input_channels;
  for (std::size_t s = 0; s < cfg.num_stus; ++s) {
    const std::size_t c_out = cfg.channels[s];
    m.sfe_weights.push_back(detail::init_param({c_out, c_in}, c_in, rng));
    m.tpe_weights.emplace_back();
    for (std::size_t j = 0; j < cfg.dilations.size(); ++j)
      m.tpe_weights.back().push_back(detail::init_param({c_out, c_out, k}, c_out * k, rng));
    c_in = c_out;
  }
  const std::size_t d = cfg.embed_dim();
  m.cls_w = detail::init_param({cfg.num_classes, d}, d, rng);
  m.cls_b = detail::init_param({cfg.num_classes}, d, rng);
  m.chron_w1 = detail::init_param({cfg.chron_hidden, d}, d, rng);
  m.chron_b1 = detail::init_param({cfg.chron_hidden}, d, rng);
  m.chron_w2 = detail::init_param({1, cfg.chron_hidden}, cfg.chron_hidden, rng);
  m.chron_b2 = detail::init_param({1}, cfg.chron_hidden, rng);
  return m;
}

// Per frame t: relu(W x[:,t,:] A-hat).
inline Tensor sfe_forward(const Tensor& x, const Tensor& w, const Tensor& adjacency_hat) {
  if (x.shape().size() != 3)
    throw std::invalid_argument("sfe_forward: expected CxTxN input, got " + shape_str(x.shape()));
  const std::size_t c_in = x.dim(0), T = x.dim(1), N = x.dim(2);
  if (w.dim(1) != c_in)
    throw std::invalid_argument("sfe_forward: weight columns " + std::to_string(w.dim(1)) +
                                " != input channels " + std::to_string(c_in));
  if (adjacency_hat.dim(0) != N || adjacency_hat.dim(1) != N)
    throw std::invalid_argument("sfe_forward: adjacency does not match joint count");
  const std::size_t c_out = w.dim(0);
  Tensor y = matmul(w, reshape(x, {c_in, T * N}));
  y = matmul(reshape(y, {c_out * T, N}), adjacency_hat);
  return relu(reshape(y, {c_out, T, N}));
}

// Dilated temporal convolution per joint, optional stride, relu, residual
// add when the channel count is preserved.
inline Tensor tpe_forward(const Tensor& x, const Tensor& w, std::size_t dilation,
                          std::size_t stride = 1) {
  Tensor h = conv_temporal(x, w, dilation);
  if (stride > 1) h = stride_time(h, stride);
  h = relu(h);
  if (w.dim(0) == w.dim(1)) {
    Tensor res = stride > 1 ? stride_time(x, stride) : x;
    h = add(h, res);
  }
  return h;
}

struct ForwardResult {
  Tensor embeddings;  // D x T'
  Tensor logits;      // num_classes
};

// Pipeline: max-pool persons -> STUs -> mean-pool joints -> frame
// embeddings h_t; the classification branch mean-pools time and applies the
// linear head, the embeddings feed the chronological branch.
inline ForwardResult forward(const RecognizerModel& model, const Array4& input) {
  const ModelConfig& cfg = model.cfg;
  if (input.c != cfg.input_channels)
    throw std::invalid_argument(
        "forward: input has " + std::to_string(input.c) + " channels but the model expects " +
        std::to_string(cfg.input_channels) + " (encoding/model mismatch)");
  if (input.n != cfg.joints)
    throw std::invalid_argument("forward: joint count mismatch");
  if (input.t % cfg.stride_product() != 0)
    throw std::invalid_argument("forward: frame count " + std::to_string(input.t) +
                                " not divisible by stride product " +
                                std::to_string(cfg.stride_product()));

  Tensor x = Tensor::from({input.c, input.t, input.n, input.m}, input.data);
  x = reduce(x, 3, Reduce::max);
  for (std::size_t s = 0; s < cfg.num_stus; ++s) {
    x = sfe_forward(x, model.sfe_weights[s], model.adjacency_hat);
    for (std::size_t j = 0; j < cfg.dilations.size(); ++j) {
      const bool last = j + 1 == cfg.dilations.size();
      x = tpe_forward(x, model.tpe_weights[s][j], cfg.dilations[j],
                      last ? cfg.strides[s] : 1);
    }
  }
  Tensor emb = reduce(x, 2, Reduce::mean);  // D x T'

  Tensor pooled = reshape(reduce(emb, 1, Reduce::mean), {cfg.embed_dim(), 1});
  Tensor logits = reshape(add_bias(matmul(model.cls_w, pooled), model.cls_b),
                          {cfg.num_classes});
  return {emb, logits};
}

// f_phi per frame: linear -> relu -> linear; returns the chronological
// values [f_phi(h_1), ..., f_phi(h_T')].
inline Tensor chron_head(const RecognizerModel& model, const Tensor& embeddings) {
  const std::size_t tprime = embeddings.dim(1);
  Tensor h = relu(add_bias(matmul(model.chron_w1, embeddings), model.chron_b1));
  Tensor v = add_bias(matmul(model.chron_w2, h), model.chron_b2);
  return reshape(v, {tprime});
}

struct ParamCount {
  std::size_t backbone = 0;
  std::size_t cls_head = 0;
  std::size_t chron_head = 0;
  std::size_t total() const { return backbone + cls_head + chron_head; }
};

inline ParamCount param_count(const RecognizerModel& model) {
  ParamCount pc;
  for (const auto& w : model.sfe_weights) pc.backbone += w.size();
  for (const auto& stu : model.tpe_weights)
    for (const auto& w : stu) pc.backbone += w.size();
  pc.cls_head = model.cls_w.size() + model.cls_b.size();
  pc.chron_head = model.chron_w1.size() + model.chron_b1.size() + model.chron_w2.size() +
                  model.chron_b2.size();
  return pc;
}

// --- checkpoint I/O ---------------------------------------------------

inline nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["num_stus"] = cfg.num_stus;
  j["channels"] = cfg.channels;
  j["temporal_kernel"] = cfg.temporal_kernel;
  j["dilations"] = cfg.dilations;
  j["strides"] = cfg.strides;
  j["joints"] = cfg.joints;
  j["num_classes"] = cfg.num_classes;
  j["input_channels"] = cfg.input_channels;
  j["chron_hidden"] = cfg.chron_hidden;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.num_stus = j.at("num_stus");
  cfg.channels = j.at("channels").get<std::vector<std::size_t>>();
  cfg.temporal_kernel = j.at("temporal_kernel");
  cfg.dilations = j.at("dilations").get<std::vector<std::size_t>>();
  cfg.strides = j.at("strides").get<std::vector<std::size_t>>();
  cfg.joints = j.at("joints");
  cfg.num_classes = j.at("num_classes");
  cfg.input_channels = j.at("input_channels");
  cfg.chron_hidden = j.at("chron_hidden");
  return cfg;
}

// Checkpoint = <prefix>.json manifest (config, graph, parameter layout) and
// <prefix>.bin, the concatenated little-endian float64 parameter payload in
// manifest order.
inline void save_model(const RecognizerModel& model, const std::string& prefix,
                       const std::string& name = "",
                       const nlohmann::ordered_json& extra = nlohmann::ordered_json::object()) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint payload is defined little-endian");
  nlohmann::ordered_json j;
  j["format"] = "chronodce-checkpoint";
  j["version"] = 1;
  j["name"] = name;
  j["extra"] = extra;
  j["config"] = config_to_json(model.cfg);
  j["graph"] = {{"joints", model.graph.joints},
                {"root", model.graph.root},
                {"edges", model.graph.edges}};
  j["payload"] = {{"file", prefix.substr(prefix.find_last_of('/') + 1) + ".bin"},
                  {"dtype", "float64"},
                  {"byte_order", "little-endian"}};
  auto& params = j["parameters"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("save_model: cannot open " + prefix + ".bin");
  for (const auto& [pname, t] : model.named_parameters()) {
    params.push_back({{"name", pname},
                      {"shape", t.shape()},
                      {"offset_bytes", offset * sizeof(double)},
                      {"count", t.size()}});
    bin.write(reinterpret_cast<const char*>(t.value().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    offset += t.size();
  }
  if (!bin) throw std::runtime_error("save_model: write failed for " + prefix + ".bin");
  std::ofstream out(prefix + ".json", std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + prefix + ".json");
  out << j.dump(2);
}

struct LoadedModel {
  RecognizerModel model;
  std::string name;
  nlohmann::json extra;
};

inline LoadedModel load_model(const std::string& prefix) {
  std::ifstream in(prefix + ".json", std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + prefix + ".json");
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "chronodce-checkpoint" || j.value("version", 0) != 1)
    throw std::runtime_error("load_model: " + prefix + ".json is not a v1 checkpoint");
  LoadedModel out;
  out.name = j.value("name", "");
  if (j.contains("extra")) out.extra = j["extra"];
  const ModelConfig cfg = config_from_json(j.at("config"));
  SkeletonGraph graph;
  graph.joints = j.at("graph").at("joints");
  graph.root = j.at("graph").at("root");
  for (const auto& e : j.at("graph").at("edges"))
    graph.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  out.model = init_model(cfg, graph, 0);

  const std::string dir = prefix.find_last_of('/') == std::string::npos
                              ? std::string()
                              : prefix.substr(0, prefix.find_last_of('/') + 1);
  const std::string bin_path = dir + j.at("payload").at("file").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("load_model: cannot open payload " + bin_path);
  auto named = out.model.named_parameters();
  std::size_t i = 0;
  for (const auto& pj : j.at("parameters")) {
    if (i >= named.size()) throw std::runtime_error("load_model: too many parameters listed");
    auto& [pname, t] = named[i++];
    if (pj.at("name") != pname)
      throw std::runtime_error("load_model: parameter order mismatch at " + pname);
    if (pj.at("count").get<std::size_t>() != t.size())
      throw std::runtime_error("load_model: parameter size mismatch at " + pname);
    bin.read(reinterpret_cast<char*>(t.value().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("load_model: payload truncated at " + pname);
  }
  if (i != named.size()) throw std::runtime_error("load_model: missing parameters in manifest");
  for (const auto& [pname, t] : named)
    for (double v : t.value())
      if (!std::isfinite(v)) throw std::runtime_error("load_model: non-finite parameter " + pname);
  return out;
}

}  // namespace chronodce
