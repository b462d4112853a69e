#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chronodce/tensor.hpp"

namespace chronodce {

struct LossWeights {
  double lambda_crl = 1.0;
};

// Chronological loss: sum_t relu(v_t - v_{t+1}) over adjacent chronological
// values. Zero iff the values are non-decreasing; every local decrease
// contributes and cannot be neutralized.
inline Tensor crl_loss(const Tensor& v) {
  const std::size_t T = v.size();
  if (T < 2) throw std::invalid_argument("crl_loss: need at least 2 chronological values");
  const auto& val = v.value();
  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) loss += std::max(0.0, val[t] - val[t + 1]);
  return make_op({1}, {loss}, {v}, [T](TensorNode& n) {
    auto& p = *n.parents[0];
    p.ensure_grad();
    const double g = n.grad[0];
    for (std::size_t t = 0; t + 1 < T; ++t)
      if (p.value[t] - p.value[t + 1] > 0.0) {
        p.grad[t] += g;
        p.grad[t + 1] -= g;
      }
  });
}

// The documented failure mode: summing raw adjacent differences telescopes
// to exactly v_first - v_last, so oscillations with equal endpoints cost
// nothing. Evaluated in closed form, which is the exact value of the sum.
inline Tensor naive_chron_loss(const Tensor& v) {
  const std::size_t T = v.size();
  if (T < 2) throw std::invalid_argument("naive_chron_loss: need at least 2 values");
  const auto& val = v.value();
  const double loss = val.front() - val.back();
  return make_op({1}, {loss}, {v}, [T](TensorNode& n) {
    auto& p = *n.parents[0];
    p.ensure_grad();
    const double g = n.grad[0];
    p.grad[0] += g;
    p.grad[T - 1] -= g;
  });
}

// Same functional form as crl_loss; applied to the probe's normalized
// per-frame outputs. Constant stretches are allowed (idle frames).
inline Tensor probe_order_loss(const Tensor& v) {
  if (v.size() < 2) throw std::invalid_argument("probe_order_loss: need at least 2 values");
  return crl_loss(v);
}

// -log softmax(logits)[label], computed with max subtraction.
inline Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t n = logits.size();
  if (label >= n)
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                " out of range for " + std::to_string(n) + " classes");
  const auto& z = logits.value();
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double zi : z) sum += std::exp(zi - zmax);
  const double lse = std::log(sum) + zmax;
  const double loss = lse - z[label];
  return make_op({1}, {loss}, {logits}, [label, lse](TensorNode& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    const double g = nd.grad[0];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double softmax_i = std::exp(p.value[i] - lse);
      p.grad[i] += g * (softmax_i - (i == label ? 1.0 : 0.0));
    }
  });
}

inline Tensor combined_loss(const Tensor& cls, const Tensor& crl, const LossWeights& w) {
  if (!std::isfinite(cls.item()) || !std::isfinite(crl.item()))
    throw std::invalid_argument("combined_loss: non-finite loss term");
  if (w.lambda_crl < 0.0 || !std::isfinite(w.lambda_crl))
    throw std::invalid_argument("combined_loss: lambda_crl must be finite and >= 0");
  return add(cls, scale(crl, w.lambda_crl));
}

}  // namespace chronodce
