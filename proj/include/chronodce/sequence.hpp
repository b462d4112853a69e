#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace chronodce {

// Dense C x T x N x M grid, row-major in that axis order.
struct Array4 {
  std::size_t c = 0, t = 0, n = 0, m = 0;
  std::vector<double> data;

  Array4() = default;
  Array4(std::size_t c_, std::size_t t_, std::size_t n_, std::size_t m_)
      : c(c_), t(t_), n(n_), m(m_), data(c_ * t_ * n_ * m_, 0.0) {}

  std::size_t size() const { return data.size(); }
  std::size_t index(std::size_t ci, std::size_t ti, std::size_t ni, std::size_t mi) const {
    return ((ci * t + ti) * n + ni) * m + mi;
  }
  double& at(std::size_t ci, std::size_t ti, std::size_t ni, std::size_t mi) {
    return data[index(ci, ti, ni, mi)];
  }
  double at(std::size_t ci, std::size_t ti, std::size_t ni, std::size_t mi) const {
    return data[index(ci, ti, ni, mi)];
  }
};

// Spanning tree over the joints; edges are (parent, child) pairs.
struct SkeletonGraph {
  std::size_t joints = 0;
  std::size_t root = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  void validate() const {
    if (joints == 0) throw std::invalid_argument("skeleton graph: no joints");
    if (root >= joints) throw std::invalid_argument("skeleton graph: root out of range");
    if (edges.size() != joints - 1)
      throw std::invalid_argument("skeleton graph: " + std::to_string(edges.size()) +
                                  " edges cannot span " + std::to_string(joints) + " joints");
    std::vector<int> seen(joints, 0);
    for (const auto& [p, c] : edges) {
      if (p >= joints || c >= joints)
        throw std::invalid_argument("skeleton graph: edge joint out of range");
      if (c == root) throw std::invalid_argument("skeleton graph: root cannot be a child");
      if (seen[c]++) throw std::invalid_argument("skeleton graph: joint " + std::to_string(c) +
                                                 " has two parents");
    }
    // Every non-root joint appears exactly once as a child.
    for (std::size_t j = 0; j < joints; ++j)
      if (j != root && !seen[j])
        throw std::invalid_argument("skeleton graph: joint " + std::to_string(j) +
                                    " is disconnected");
  }

  // parent[j] for non-root joints; parent[root] == root.
  std::vector<std::size_t> parents() const {
    std::vector<std::size_t> p(joints, root);
    for (const auto& [pa, ch] : edges) p[ch] = pa;
    return p;
  }

  // Reference bone for scale normalization: the first edge out of the root.
  std::pair<std::size_t, std::size_t> reference_bone() const {
    for (const auto& e : edges)
      if (e.first == root) return e;
    throw std::invalid_argument("skeleton graph: root has no child edge");
  }

  // Desk-scale 9-joint figure: root(0)-spine(1)-head(2), two-joint arms off
  // the spine, single-joint legs off the root.
  static SkeletonGraph desk_default() {
    SkeletonGraph g;
    g.joints = 9;
    g.root = 0;
    g.edges = {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {1, 5}, {5, 6}, {0, 7}, {0, 8}};
    return g;
  }
};

inline const std::vector<std::string>& desk_joint_names() {
  static const std::vector<std::string> names = {"root",    "spine",  "head",
                                                 "l_elbow", "l_hand", "r_elbow",
                                                 "r_hand",  "l_foot", "r_foot"};
  return names;
}

// Motion tensor (C=3 coordinates) with label and validity metadata. Frames
// at t >= valid_len hold repeats of the valid window, frame t = frame
// (t mod valid_len).
struct SkeletonSequence {
  Array4 coords;
  int label = 0;
  std::size_t valid_len = 0;
  std::size_t persons = 1;
};

inline void check_finite(const Array4& a, const char* what) {
  for (double v : a.data)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

// Canonical on-disk form: UTF-8 JSON, keys in fixed order, numbers written
// with shortest round-trip precision so load(save(s)) is bitwise exact.
inline void save_sequence(const SkeletonSequence& seq, const std::string& path) {
  if (seq.coords.c != 3) throw std::invalid_argument("save_sequence: C must be 3");
  if (seq.valid_len < 1 || seq.valid_len > seq.coords.t)
    throw std::invalid_argument("save_sequence: valid_len out of range");
  check_finite(seq.coords, "save_sequence");
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["C"] = seq.coords.c;
  j["T"] = seq.coords.t;
  j["N"] = seq.coords.n;
  j["M"] = seq.coords.m;
  j["label"] = seq.label;
  j["valid_len"] = seq.valid_len;
  j["data"] = seq.coords.data;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_sequence: cannot open " + path);
  out << j.dump();
  if (!out) throw std::runtime_error("save_sequence: write failed for " + path);
}

inline SkeletonSequence load_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_sequence: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_sequence: " + path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"] != 1)
    throw std::runtime_error("load_sequence: " + path + ": unsupported version");
  SkeletonSequence seq;
  const std::size_t C = j.at("C"), T = j.at("T"), N = j.at("N"), M = j.at("M");
  if (C != 3) throw std::runtime_error("load_sequence: " + path + ": C must be 3");
  seq.coords = Array4(C, T, N, M);
  seq.label = j.at("label");
  seq.valid_len = j.at("valid_len");
  if (seq.label < 0) throw std::runtime_error("load_sequence: " + path + ": negative label");
  if (seq.valid_len < 1 || seq.valid_len > T)
    throw std::runtime_error("load_sequence: " + path + ": valid_len out of range");
  const auto& d = j.at("data");
  if (d.size() != C * T * N * M)
    throw std::runtime_error("load_sequence: " + path + ": data length " +
                             std::to_string(d.size()) + " != " + std::to_string(C * T * N * M));
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d[i].is_number())
      throw std::runtime_error("load_sequence: " + path + ": non-numeric data entry");
    seq.coords.data[i] = d[i].get<double>();
    if (!std::isfinite(seq.coords.data[i]))
      throw std::runtime_error("load_sequence: " + path + ": non-finite value");
  }
  seq.persons = M;
  return seq;
}

}  // namespace chronodce
