#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "chronodce/rng.hpp"
#include "chronodce/sequence.hpp"

namespace chronodce {

// Repeat-pads the valid window up to target_T frames: output frame t equals
// input frame (t mod valid_len). Truncation below valid_len is an error.
inline SkeletonSequence pad_repeat(const SkeletonSequence& seq, std::size_t target_T = 300) {
  if (seq.valid_len < 1) throw std::invalid_argument("pad_repeat: empty valid window");
  if (target_T < seq.valid_len)
    throw std::invalid_argument("pad_repeat: target " + std::to_string(target_T) +
                                " would truncate valid_len " + std::to_string(seq.valid_len));
  SkeletonSequence out;
  out.label = seq.label;
  out.valid_len = seq.valid_len;
  out.persons = seq.persons;
  const Array4& a = seq.coords;
  out.coords = Array4(a.c, target_T, a.n, a.m);
  const std::size_t frame = a.n * a.m;
  for (std::size_t ci = 0; ci < a.c; ++ci)
    for (std::size_t ti = 0; ti < target_T; ++ti) {
      const std::size_t src_t = ti % seq.valid_len;
      const double* src = a.data.data() + (ci * a.t + src_t) * frame;
      double* dst = out.coords.data.data() + (ci * target_T + ti) * frame;
      for (std::size_t i = 0; i < frame; ++i) dst[i] = src[i];
    }
  return out;
}

// Translation: subtract the first frame's root-joint position of person 0
// from every coordinate. Scale: divide uniformly so the frame-0 reference
// bone (root to its first child) has length 1. Idempotent.
inline SkeletonSequence normalize_translate(const SkeletonSequence& seq,
                                            const SkeletonGraph& graph) {
  graph.validate();
  if (graph.joints != seq.coords.n)
    throw std::invalid_argument("normalize_translate: graph joints " +
                                std::to_string(graph.joints) + " != sequence joints " +
                                std::to_string(seq.coords.n));
  const auto [root, ref_child] = graph.reference_bone();
  const Array4& a = seq.coords;

  double bone_sq = 0.0;
  for (std::size_t ci = 0; ci < a.c; ++ci) {
    const double d = a.at(ci, 0, ref_child, 0) - a.at(ci, 0, root, 0);
    bone_sq += d * d;
  }
  const double bone_len = std::sqrt(bone_sq);
  if (bone_len == 0.0)
    throw std::invalid_argument(
        "normalize_translate: reference bone (joint " + std::to_string(root) + " -> joint " +
        std::to_string(ref_child) + ") has zero length in frame 0; cannot fix scale");

  SkeletonSequence out = seq;
  const double inv = 1.0 / bone_len;
  for (std::size_t ci = 0; ci < a.c; ++ci) {
    const double origin = a.at(ci, 0, root, 0);
    double* ch = out.coords.data.data() + ci * a.t * a.n * a.m;
    const std::size_t count = a.t * a.n * a.m;
    for (std::size_t i = 0; i < count; ++i) ch[i] = (ch[i] - origin) * inv;
  }
  return out;
}

// Bone feature stream: child joint carries (child - parent); the root
// carries zeros. Same tensor shape as the input.
inline SkeletonSequence bones(const SkeletonSequence& seq, const SkeletonGraph& graph) {
  graph.validate();
  if (graph.joints != seq.coords.n)
    throw std::invalid_argument("bones: graph joints do not match sequence joints");
  const Array4& a = seq.coords;
  SkeletonSequence out = seq;
  const auto parent = graph.parents();
  for (std::size_t ci = 0; ci < a.c; ++ci)
    for (std::size_t ti = 0; ti < a.t; ++ti)
      for (std::size_t ni = 0; ni < a.n; ++ni)
        for (std::size_t mi = 0; mi < a.m; ++mi)
          out.coords.at(ci, ti, ni, mi) =
              ni == graph.root ? 0.0
                               : a.at(ci, ti, ni, mi) - a.at(ci, ti, parent[ni], mi);
  return out;
}

struct NoiseSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

// x := x + epsilon * n with n drawn i.i.d. standard normal over the full
// tensor shape. epsilon = 0 returns the input bitwise.
inline SkeletonSequence add_noise(const SkeletonSequence& seq, const NoiseSpec& spec) {
  if (spec.epsilon < 0.0) throw std::invalid_argument("add_noise: epsilon must be >= 0");
  SkeletonSequence out = seq;
  if (spec.epsilon == 0.0) return out;
  Rng rng(mix_seed(spec.seed));
  for (double& v : out.coords.data) v += spec.epsilon * rng.normal();
  return out;
}

// Reverses the valid window (frame t -> valid_len-1-t), then re-pads the
// tail by the repeat rule. Double reversal is the identity.
inline SkeletonSequence time_reverse(const SkeletonSequence& seq) {
  const Array4& a = seq.coords;
  SkeletonSequence out = seq;
  const std::size_t frame = a.n * a.m;
  for (std::size_t ci = 0; ci < a.c; ++ci)
    for (std::size_t ti = 0; ti < a.t; ++ti) {
      const std::size_t src_t = seq.valid_len - 1 - (ti % seq.valid_len);
      const double* src = a.data.data() + (ci * a.t + src_t) * frame;
      double* dst = out.coords.data.data() + (ci * a.t + ti) * frame;
      for (std::size_t i = 0; i < frame; ++i) dst[i] = src[i];
    }
  return out;
}

}  // namespace chronodce
