#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csgrl/dataset.hpp"

namespace csgrl::io {

struct AttrTypeSpec {
  std::string name;
  int32_t count = 0;
  double p = 0.2;   // intra-class edge probability
  double q = 0.02;  // inter-class edge probability
};

struct SynthSpec {
  int classes = 3;
  int32_t target_count = 300;
  std::vector<AttrTypeSpec> attr_types;
  int feature_dim = 16;
  double separation = 1.0;  // distance of each class mean from the origin
  double noise = 1.0;       // feature noise standard deviation
  uint64_t seed = 0;

  void validate() const;
};

/// Planted-partition heterograph: target node i gets class i mod k, so does
/// attribute node j of every attribute type; edges are Bernoulli(p) within a
/// class and Bernoulli(q) across. Target features are the class mean (the
/// scaled basis vector e_{c mod dim}) plus Gaussian noise. Attribute types
/// carry no features. One meta-path M<i> = [r<i>, r<i>_rev] per attribute
/// type. Deterministic under seed.
Dataset gen_synth(const SynthSpec& spec);

/// Same graph written as a dataset directory (byte-identical under a seed).
void gen_synth_dir(const SynthSpec& spec, const std::string& dir);

}  // namespace csgrl::io
