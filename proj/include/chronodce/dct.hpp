#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "chronodce/rng.hpp"
#include "chronodce/sequence.hpp"

namespace chronodce {

// The first K DCT-2 basis sequences over T frames:
//   B[k][t] = cos((pi/T) * (t + 1/2) * k)
// Row 0 is all ones; row 1 is strictly decreasing in t; rows are mutually
// orthogonal with B B^T = diag(T, T/2, ..., T/2).
struct DctBasis {
  std::size_t T = 0;
  std::size_t K = 0;
  std::vector<double> B;  // K x T, row-major

  double at(std::size_t k, std::size_t t) const { return B[k * T + t]; }
  const double* row(std::size_t k) const { return B.data() + k * T; }
};

inline DctBasis basis(std::size_t T, std::size_t K) {
  if (T == 0) throw std::invalid_argument("basis: T must be positive");
  if (K < 1 || K > T)
    throw std::invalid_argument("basis: K must lie in [1, T], got K=" + std::to_string(K) +
                                " T=" + std::to_string(T));
  DctBasis b;
  b.T = T;
  b.K = K;
  b.B.resize(K * T);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t t = 0; t < T; ++t)
      b.B[k * T + t] = std::cos((std::numbers::pi / static_cast<double>(T)) *
                                (static_cast<double>(t) + 0.5) * static_cast<double>(k));
  return b;
}

// Unnormalized DCT-2: d_k = sum_t x_t cos((pi/T)(t+1/2)k) for k = 0..T-1.
inline std::vector<double> dct2(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("dct2: empty input");
  const std::size_t T = x.size();
  const DctBasis b = basis(T, T);
  std::vector<double> d(T, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    const double* row = b.row(k);
    double acc = 0.0;
    for (std::size_t t = 0; t < T; ++t) acc += x[t] * row[t];
    d[k] = acc;
  }
  return d;
}

// Zeroes coefficients k >= keep and applies the exact inverse
//   x_t = d_0/T + (2/T) sum_{k>=1} d_k cos((pi/T)(t+1/2)k).
// keep = T reproduces x.
inline std::vector<double> lowpass_revert(const std::vector<double>& x, std::size_t keep) {
  const std::size_t T = x.size();
  if (keep < 1 || keep > T)
    throw std::invalid_argument("lowpass_revert: keep must lie in [1, T], got " +
                                std::to_string(keep));
  std::vector<double> d = dct2(x);
  const DctBasis b = basis(T, T);
  std::vector<double> out(T, d[0] / static_cast<double>(T));
  for (std::size_t k = 1; k < keep; ++k) {
    const double* row = b.row(k);
    const double coeff = 2.0 * d[k] / static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) out[t] += coeff * row[t];
  }
  return out;
}

struct DceConfig {
  std::size_t K = 8;
  bool include_original = true;
};

// Stacks per-series masked copies of x along the channel axis:
// [x (optional), masks[0] (.) x, ..., masks[B-1] (.) x]. Each mask is a
// length-T temporal factor shared across channels, joints, and persons.
inline Array4 masked_encode(const Array4& x, const std::vector<std::vector<double>>& masks,
                            bool include_original) {
  for (const auto& m : masks)
    if (m.size() != x.t) throw std::invalid_argument("masked_encode: mask length != T");
  const std::size_t blocks = masks.size() + (include_original ? 1 : 0);
  if (blocks == 0) throw std::invalid_argument("masked_encode: nothing to encode");
  Array4 out(blocks * x.c, x.t, x.n, x.m);
  const std::size_t frame = x.n * x.m;  // elements per (c, t)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::vector<double>* mask = nullptr;
    if (include_original) {
      if (blk > 0) mask = &masks[blk - 1];
    } else {
      mask = &masks[blk];
    }
    for (std::size_t ci = 0; ci < x.c; ++ci)
      for (std::size_t ti = 0; ti < x.t; ++ti) {
        const double f = mask ? (*mask)[ti] : 1.0;
        const double* src = x.data.data() + (ci * x.t + ti) * frame;
        double* dst = out.data.data() + ((blk * x.c + ci) * x.t + ti) * frame;
        for (std::size_t i = 0; i < frame; ++i) dst[i] = f * src[i];
      }
  }
  return out;
}

// Discrete cosine encoding: channel expansion to (K+1)C (or KC when the
// original block is dropped). Block order is fixed: original first, then
// ascending k.
inline Array4 dce_encode(const Array4& x, const DceConfig& cfg) {
  if (cfg.K < 1 || cfg.K > x.t)
    throw std::invalid_argument("dce_encode: K must lie in [1, T], got K=" +
                                std::to_string(cfg.K) + " T=" + std::to_string(x.t));
  const DctBasis b = basis(x.t, cfg.K);
  std::vector<std::vector<double>> masks(cfg.K);
  for (std::size_t k = 0; k < cfg.K; ++k) masks[k].assign(b.row(k), b.row(k) + x.t);
  return masked_encode(x, masks, cfg.include_original);
}

inline Array4 dce_encode(const SkeletonSequence& seq, const DceConfig& cfg) {
  return dce_encode(seq.coords, cfg);
}

enum class ControlKind { rand_pm1, repeat };

// The paper's two control expansions, shape-matched to dce_encode with the
// original block included. rand_pm1 multiplies each extra block elementwise
// by i.i.d. uniform [-1,1] draws over the full block shape, fresh per
// block; repeat copies the input.
inline Array4 control_encoding(const Array4& x, ControlKind kind, std::size_t K,
                               std::uint64_t rng_seed) {
  if (K < 1) throw std::invalid_argument("control_encoding: K must be >= 1");
  Array4 out((K + 1) * x.c, x.t, x.n, x.m);
  std::copy(x.data.begin(), x.data.end(), out.data.begin());
  Rng rng(mix_seed(rng_seed));
  for (std::size_t k = 0; k < K; ++k) {
    double* dst = out.data.data() + (k + 1) * x.data.size();
    for (std::size_t i = 0; i < x.data.size(); ++i)
      dst[i] = kind == ControlKind::rand_pm1 ? rng.uniform(-1.0, 1.0) * x.data[i] : x.data[i];
  }
  return out;
}

inline Array4 control_encoding(const SkeletonSequence& seq, ControlKind kind, std::size_t K,
                               std::uint64_t rng_seed) {
  return control_encoding(seq.coords, kind, K, rng_seed);
}

}  // namespace chronodce
