#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "chronodce/dataset.hpp"
#include "chronodce/rng.hpp"
#include "chronodce/sequence.hpp"
#include "chronodce/skeleton.hpp"

namespace chronodce {

// Synthetic task layout: classes [0, 2*reversal_pairs) are reversal pairs
// (class 2p+1 is the exact time reversal of class 2p's motion program),
// followed by freq_classes wave classes distinguished only by oscillation
// frequency. Per-sample phase/speed/amplitude jitter keeps classes
// nondegenerate.
struct SyntheticSpec {
  std::size_t reversal_pairs = 4;
  std::size_t freq_classes = 2;
  std::size_t frames = 300;
  std::size_t joints = 9;
  std::size_t persons = 1;
  std::size_t samples_per_class = 100;
  std::uint64_t seed = 7;

  std::size_t num_classes() const { return 2 * reversal_pairs + freq_classes; }

  void validate() const {
    if (joints != 9)
      throw std::invalid_argument("synthetic generator supports only the 9-joint desk skeleton");
    if (frames < 8) throw std::invalid_argument("synthetic generator: frames must be >= 8");
    if (persons < 1) throw std::invalid_argument("synthetic generator: persons must be >= 1");
    if (num_classes() == 0) throw std::invalid_argument("synthetic generator: no classes");
  }
};

namespace detail {

struct Vec3 {
  double x, y, z;
};

inline const std::array<Vec3, 9>& base_pose() {
  static const std::array<Vec3, 9> pose = {{
      {0.0, 0.0, 0.0},    // root
      {0.0, 1.0, 0.0},    // spine
      {0.0, 1.6, 0.0},    // head
      {-0.55, 1.0, 0.0},  // l_elbow
      {-1.1, 1.0, 0.0},   // l_hand
      {0.55, 1.0, 0.0},   // r_elbow
      {1.1, 1.0, 0.0},    // r_hand
      {-0.3, -1.0, 0.0},  // l_foot
      {0.3, -1.0, 0.0},   // r_foot
  }};
  return pose;
}

struct JointDrift {
  std::size_t joint;
  Vec3 delta;
};

// Directed limb program for reversal pair p; progress s runs 0 -> 1 over the
// valid window. Pairs beyond the four limb programs flip the z direction.
inline std::vector<JointDrift> pair_program(std::size_t p) {
  const double zs = (p / 4) % 2 == 0 ? 1.0 : -1.0;
  switch (p % 4) {
    case 0:
      return {{6, {-2.0, 2.5, 0.9 * zs}}, {5, {-0.6, 1.1, 0.4 * zs}}};
    case 1:
      return {{4, {2.0, 2.5, 0.9 * zs}}, {3, {0.6, 1.1, 0.4 * zs}}};
    case 2:
      return {{2, {0.0, -1.4, 1.9 * zs}}, {1, {0.0, -0.45, 0.95 * zs}}};
    default:
      return {{8, {0.0, 0.9, 2.1 * zs}}};
  }
}

inline double freq_of_class(std::size_t j) { return 2.0 + 3.0 * static_cast<double>(j); }

}  // namespace detail

// One deterministic sample. Odd members of a reversal pair are generated by
// time-reversing the pair's forward program under the same jitter stream.
inline SkeletonSequence synth_sample(const SyntheticSpec& spec, std::size_t class_id,
                                     std::size_t sample_idx) {
  spec.validate();
  if (class_id >= spec.num_classes())
    throw std::invalid_argument("synth_sample: class out of range");
  const std::size_t T = spec.frames;
  SkeletonSequence seq;
  seq.coords = Array4(3, T, spec.joints, spec.persons);
  seq.label = static_cast<int>(class_id);
  seq.valid_len = T;
  seq.persons = spec.persons;

  const bool is_pair_class = class_id < 2 * spec.reversal_pairs;
  const bool reversed = is_pair_class && (class_id % 2 == 1);

  for (std::size_t person = 0; person < spec.persons; ++person) {
    Rng rng(mix_seed(spec.seed, class_id * 100003 + sample_idx, person));
    const double amp = rng.uniform(0.8, 1.2);
    const double gamma = rng.uniform(0.85, 1.2);
    const double phase = rng.uniform(0.0, 1.0);

    for (std::size_t t = 0; t < T; ++t) {
      const double u = static_cast<double>(t) / static_cast<double>(T - 1);
      std::array<detail::Vec3, 9> pose = detail::base_pose();
      if (is_pair_class) {
        const double s = amp * std::pow(u, gamma);
        for (const auto& d : detail::pair_program(class_id / 2)) {
          pose[d.joint].x += s * d.delta.x;
          pose[d.joint].y += s * d.delta.y;
          pose[d.joint].z += s * d.delta.z;
        }
      } else {
        const std::size_t j = class_id - 2 * spec.reversal_pairs;
        const double w = amp * 0.8 *
                         std::sin(2.0 * std::numbers::pi * (detail::freq_of_class(j) * u + phase));
        pose[4].y += w;
        pose[6].y += w;
        pose[3].y += 0.5 * w;
        pose[5].y += 0.5 * w;
      }
      for (std::size_t n = 0; n < spec.joints; ++n) {
        seq.coords.at(0, t, n, person) = pose[n].x;
        seq.coords.at(1, t, n, person) = pose[n].y;
        seq.coords.at(2, t, n, person) = pose[n].z;
      }
    }
  }
  return reversed ? time_reverse(seq) : seq;
}

inline std::vector<std::string> synth_class_names(const SyntheticSpec& spec) {
  static const std::array<const char*, 4> pair_names = {"arm_raise_r", "arm_raise_l", "bow",
                                                        "kick_r"};
  std::vector<std::string> names;
  for (std::size_t p = 0; p < spec.reversal_pairs; ++p) {
    std::string base = pair_names[p % 4];
    if (p >= 4) base += "_v" + std::to_string(p / 4);
    names.push_back(base);
    names.push_back(base + "_rev");
  }
  for (std::size_t j = 0; j < spec.freq_classes; ++j)
    names.push_back("wave_f" + std::to_string(static_cast<int>(detail::freq_of_class(j))));
  return names;
}

inline Dataset synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.class_names = synth_class_names(spec);
  ds.samples.reserve(spec.num_classes() * spec.samples_per_class);
  for (std::size_t c = 0; c < spec.num_classes(); ++c)
    for (std::size_t i = 0; i < spec.samples_per_class; ++i)
      ds.samples.push_back(synth_sample(spec, c, i));
  return ds;
}

}  // namespace chronodce
