#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace chronodce {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// One vertex of the computation record. `backward_fn` pulls this node's
// gradient into the parents; leaves (no parents) just accumulate.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  bool is_leaf() const { return parents.empty(); }
};

// Dense n-dimensional 64-bit-float array participating in reverse-mode
// differentiation. Value-semantics handle to a shared node; copying a
// Tensor aliases the same node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor from(Shape shape, std::vector<double> data) {
    if (shape_size(shape) != data.size())
      throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    return Tensor(std::move(n));
  }
  static Tensor zeros(Shape shape) {
    std::vector<double> d(shape_size(shape), 0.0);
    return from(std::move(shape), std::move(d));
  }
  static Tensor ones(Shape shape) {
    std::vector<double> d(shape_size(shape), 1.0);
    return from(std::move(shape), std::move(d));
  }
  static Tensor full(Shape shape, double v) {
    std::vector<double> d(shape_size(shape), v);
    return from(std::move(shape), std::move(d));
  }
  static Tensor scalar(double v) { return from({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }

  std::vector<double>& value() { return node_->value; }
  const std::vector<double>& value() const { return node_->value; }
  double item() const {
    if (size() != 1) throw std::invalid_argument("item() on non-scalar tensor " + shape_str(shape()));
    return node_->value[0];
  }

  // Gradient accumulated by backward(); zeros if backward never reached it.
  const std::vector<double>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Deep copy: fresh leaf with the same values, detached from any graph.
  Tensor clone_detached() const {
    return from(node_->shape, node_->value);
  }

  std::shared_ptr<TensorNode>& node() { return node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Extension point: every op (including fused losses in other headers) is a
// node with an explicit backward closure.
inline Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                      std::function<void(TensorNode&)> backward_fn) {
  if (shape_size(shape) != value.size())
    throw std::invalid_argument("op value length does not match shape " + shape_str(shape));
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.node());
  n->backward_fn = std::move(backward_fn);
  return Tensor(std::move(n));
}

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i];
      pb.grad[i] += n.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i];
      pb.grad[i] -= n.grad[i];
    }
  });
}

// Hadamard product; backward routes the gradient through the opposite operand.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      pa.grad[i] += n.grad[i] * pb.value[i];
      pb.grad[i] += n.grad[i] * pa.value[i];
    }
  });
}

// Gradient at exactly 0 is defined as 0.
inline Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_op(a.shape(), std::move(out), {a}, [](TensorNode& n) {
    auto& p = *n.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += n.grad[i];
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  return make_op(a.shape(), std::move(out), {a}, [c](TensorNode& n) {
    auto& p = *n.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += c * n.grad[i];
  });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw std::invalid_argument("matmul: expected 2-d tensors, got " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw std::invalid_argument("matmul: inner dimensions disagree " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* av = a.value().data();
  const double* bv = b.value().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  return make_op({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& nd) {
    auto& pa = *nd.parents[0];
    auto& pb = *nd.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    const double* g = nd.grad.data();
    const double* av = pa.value.data();
    const double* bv = pb.value.data();
    // da = g * b^T
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double* grow = g + i * n;
        const double* brow = bv + p * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
        pa.grad[i * k + p] += acc;
      }
    // db = a^T * g
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t i = 0; i < m; ++i) {
        const double aip = av[i * k + p];
        const double* grow = g + i * n;
        double* brow = pb.grad.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
      }
  });
}

namespace detail {

// Shared kernel for temporal convolution over x: C_in x T x N,
// w: C_out x C_in x k, symmetric-same zero padding.
inline void conv_span(std::size_t T, std::size_t N, long offset, const double* src, double* dst,
                      double w) {
  // dst[t*N + n] += w * src[(t+offset)*N + n] over valid t.
  const long t_lo = std::max<long>(0, -offset);
  const long t_hi = std::min<long>(static_cast<long>(T), static_cast<long>(T) - offset);
  if (t_lo >= t_hi) return;
  const double* s = src + (t_lo + offset) * static_cast<long>(N);
  double* d = dst + t_lo * static_cast<long>(N);
  const std::size_t len = static_cast<std::size_t>(t_hi - t_lo) * N;
  for (std::size_t i = 0; i < len; ++i) d[i] += w * s[i];
}

inline double conv_dot(std::size_t T, std::size_t N, long offset, const double* a,
                       const double* b) {
  const long t_lo = std::max<long>(0, -offset);
  const long t_hi = std::min<long>(static_cast<long>(T), static_cast<long>(T) - offset);
  if (t_lo >= t_hi) return 0.0;
  const double* pa = a + t_lo * static_cast<long>(N);
  const double* pb = b + (t_lo + offset) * static_cast<long>(N);
  const std::size_t len = static_cast<std::size_t>(t_hi - t_lo) * N;
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += pa[i] * pb[i];
  return acc;
}

}  // namespace detail

// Temporal convolution with symmetric-same zero padding. Accepts
// x: C_in x T (one series per channel) or C_in x T x N (applied
// independently per trailing joint). Kernel size must be odd.
inline Tensor conv_temporal(const Tensor& x, const Tensor& w, std::size_t dilation) {
  if (x.shape().size() != 2 && x.shape().size() != 3)
    throw std::invalid_argument("conv_temporal: input must be CxT or CxTxN, got " +
                                shape_str(x.shape()));
  if (w.shape().size() != 3)
    throw std::invalid_argument("conv_temporal: weights must be C_out x C_in x k, got " +
                                shape_str(w.shape()));
  if (dilation < 1) throw std::invalid_argument("conv_temporal: dilation must be >= 1");
  const bool has_joints = x.shape().size() == 3;
  const std::size_t c_in = x.dim(0), T = x.dim(1), N = has_joints ? x.dim(2) : 1;
  const std::size_t c_out = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c_in)
    throw std::invalid_argument("conv_temporal: weight input channels " + std::to_string(w.dim(1)) +
                                " do not match input channels " + std::to_string(c_in));
  if (k % 2 == 0) throw std::invalid_argument("conv_temporal: kernel size must be odd");
  const long pad = static_cast<long>(dilation * (k - 1) / 2);

  std::vector<double> out(c_out * T * N, 0.0);
  const double* xv = x.value().data();
  const double* wv = w.value().data();
  for (std::size_t co = 0; co < c_out; ++co)
    for (std::size_t ci = 0; ci < c_in; ++ci)
      for (std::size_t j = 0; j < k; ++j) {
        const double wj = wv[(co * c_in + ci) * k + j];
        const long offset = static_cast<long>(j * dilation) - pad;
        detail::conv_span(T, N, offset, xv + ci * T * N, out.data() + co * T * N, wj);
      }

  Shape out_shape = has_joints ? Shape{c_out, T, N} : Shape{c_out, T};
  return make_op(std::move(out_shape), std::move(out), {x, w},
                 [c_in, c_out, k, T, N, pad, dilation](TensorNode& nd) {
                   auto& px = *nd.parents[0];
                   auto& pw = *nd.parents[1];
                   px.ensure_grad();
                   pw.ensure_grad();
                   const double* g = nd.grad.data();
                   const double* xv = px.value.data();
                   const double* wv = pw.value.data();
                   for (std::size_t co = 0; co < c_out; ++co)
                     for (std::size_t ci = 0; ci < c_in; ++ci)
                       for (std::size_t j = 0; j < k; ++j) {
                         const long offset = static_cast<long>(j * dilation) - pad;
                         const double wj = wv[(co * c_in + ci) * k + j];
                         // dx[t+offset] += w * g[t]   (reverse of the forward span)
                         detail::conv_span(T, N, -offset, g + co * T * N,
                                           px.grad.data() + ci * T * N, wj);
                         // dw = sum_t g[t] * x[t+offset]
                         pw.grad[(co * c_in + ci) * k + j] +=
                             detail::conv_dot(T, N, offset, g + co * T * N, xv + ci * T * N);
                       }
                 });
}

enum class Reduce { sum, mean, max };

// Removes `axis`. Backward: sum broadcasts, mean broadcasts g/len, max routes
// to the first argmax (ties to the lowest index).
inline Tensor reduce(const Tensor& x, std::size_t axis, Reduce kind) {
  const Shape& s = x.shape();
  if (axis >= s.size())
    throw std::invalid_argument("reduce: axis " + std::to_string(axis) +
                                " invalid for shape " + shape_str(s));
  const std::size_t len = s[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);

  std::vector<double> out(outer * inner, 0.0);
  const double* xv = x.value().data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const double* base = xv + o * len * inner + in;
      double acc = base[0];
      if (kind == Reduce::max) {
        for (std::size_t t = 1; t < len; ++t) acc = std::max(acc, base[t * inner]);
      } else {
        acc = 0.0;
        for (std::size_t t = 0; t < len; ++t) acc += base[t * inner];
        if (kind == Reduce::mean) acc /= static_cast<double>(len);
      }
      out[o * inner + in] = acc;
    }

  return make_op(std::move(out_shape), std::move(out), {x},
                 [outer, inner, len, kind](TensorNode& nd) {
                   auto& p = *nd.parents[0];
                   p.ensure_grad();
                   const double* g = nd.grad.data();
                   for (std::size_t o = 0; o < outer; ++o)
                     for (std::size_t in = 0; in < inner; ++in) {
                       const double gv = g[o * inner + in];
                       double* base = p.grad.data() + o * len * inner + in;
                       const double* vbase = p.value.data() + o * len * inner + in;
                       switch (kind) {
                         case Reduce::sum:
                           for (std::size_t t = 0; t < len; ++t) base[t * inner] += gv;
                           break;
                         case Reduce::mean: {
                           const double gm = gv / static_cast<double>(len);
                           for (std::size_t t = 0; t < len; ++t) base[t * inner] += gm;
                           break;
                         }
                         case Reduce::max: {
                           std::size_t arg = 0;
                           double best = vbase[0];
                           for (std::size_t t = 1; t < len; ++t)
                             if (vbase[t * inner] > best) {
                               best = vbase[t * inner];
                               arg = t;
                             }
                           base[arg * inner] += gv;
                           break;
                         }
                       }
                     }
                 });
}

inline Tensor sum_all(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  return make_op({1}, {acc}, {x}, [](TensorNode& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    const double g = nd.grad[0];
    for (double& pg : p.grad) pg += g;
  });
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw std::invalid_argument("reshape: size mismatch " + shape_str(x.shape()) + " -> " +
                                shape_str(shape));
  return make_op(std::move(shape), x.value(), {x}, [](TensorNode& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i) p.grad[i] += nd.grad[i];
  });
}

// Keeps frames 0, s, 2s, ... along axis 1 of a CxTxN tensor.
inline Tensor stride_time(const Tensor& x, std::size_t stride) {
  if (x.shape().size() != 3)
    throw std::invalid_argument("stride_time: expected CxTxN, got " + shape_str(x.shape()));
  if (stride < 1) throw std::invalid_argument("stride_time: stride must be >= 1");
  const std::size_t C = x.dim(0), T = x.dim(1), N = x.dim(2);
  const std::size_t T_out = (T + stride - 1) / stride;
  std::vector<double> out(C * T_out * N);
  const double* xv = x.value().data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T_out; ++t)
      for (std::size_t n = 0; n < N; ++n)
        out[(c * T_out + t) * N + n] = xv[(c * T + t * stride) * N + n];
  return make_op({C, T_out, N}, std::move(out), {x}, [C, T, N, T_out, stride](TensorNode& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    const double* g = nd.grad.data();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < T_out; ++t)
        for (std::size_t n = 0; n < N; ++n)
          p.grad[(c * T + t * stride) * N + n] += g[(c * T_out + t) * N + n];
  });
}

// Column-broadcast bias add: x is RxC, b is length R.
inline Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (x.shape().size() != 2)
    throw std::invalid_argument("add_bias: expected 2-d input, got " + shape_str(x.shape()));
  if (b.size() != x.dim(0))
    throw std::invalid_argument("add_bias: bias length " + std::to_string(b.size()) +
                                " does not match rows of " + shape_str(x.shape()));
  const std::size_t R = x.dim(0), C = x.dim(1);
  std::vector<double> out(R * C);
  const double* xv = x.value().data();
  const double* bv = b.value().data();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out[r * C + c] = xv[r * C + c] + bv[r];
  return make_op({R, C}, std::move(out), {x, b}, [R, C](TensorNode& nd) {
    auto& px = *nd.parents[0];
    auto& pb = *nd.parents[1];
    px.ensure_grad();
    pb.ensure_grad();
    const double* g = nd.grad.data();
    for (std::size_t r = 0; r < R; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        px.grad[r * C + c] += g[r * C + c];
        acc += g[r * C + c];
      }
      pb.grad[r] += acc;
    }
  });
}

// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every reachable
// tensor in reverse topological order. Leaf gradients accumulate across
// calls; non-leaf gradients are per-call scratch.
inline void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + shape_str(loss.shape()));

  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // order is children-after-parents; reverse for backprop.
  std::reverse(order.begin(), order.end());

  for (TensorNode* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), 0.0);
    else n->ensure_grad();
  }
  loss.node()->grad[0] += 1.0;
  for (TensorNode* n : order)
    if (n->backward_fn) n->backward_fn(*n);
}

// Central-difference gradient verification. Returns the max over coordinates
// of |analytic - numeric| / max(1, |numeric|). Forward-only on the numeric
// side, so it is independent of the backward path it checks.
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x,
                         double eps = 1e-5) {
  if (eps < 1e-7 || eps > 1e-3)
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  Tensor y = f(x);
  if (y.size() != 1)
    throw std::invalid_argument("grad_check: f must be scalar-valued, got " +
                                shape_str(y.shape()));
  x.zero_grad();
  backward(y);
  std::vector<double> analytic = x.grad();

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.value()[i];
    x.value()[i] = saved + eps;
    const double up = f(x).item();
    x.value()[i] = saved - eps;
    const double dn = f(x).item();
    x.value()[i] = saved;
    const double numeric = (up - dn) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace chronodce
