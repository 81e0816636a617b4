#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "csgrl/autodiff.hpp"
#include "csgrl/mat.hpp"
#include "csgrl/rng.hpp"

namespace csgrl::opt {

using ad::Parameter;

/// Owning collection of named parameters. Storage is a deque so Parameter
/// addresses stay stable while new entries are added; tapes and optimizer
/// slots hold raw pointers into it.
class ParamSet {
 public:
  ParamSet() = default;
  // Copying would leave index pointers aimed at the source's storage.
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Parameter& add(const std::string& name, Mat value);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  /// Insertion order, which fixes the update order everywhere downstream.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  void zero_grads();
  size_t size() const { return order_.size(); }

 private:
  std::deque<Parameter> store_;
  std::vector<Parameter*> order_;
  std::unordered_map<std::string, Parameter*> index_;
};

/// Glorot-uniform fill: +-sqrt(6 / (fan_in + fan_out)).
void glorot_init(Mat& m, int fan_in, int fan_out, Rng& rng);

struct AdamWConfig {
  double lr = 1e-2;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Decoupled-weight-decay Adam. Moment buffers are keyed by parameter name
/// and created on first use; the step counter is shared by all parameters.
class AdamWState {
 public:
  explicit AdamWState(AdamWConfig cfg = {}) : cfg_(cfg) {}

  const AdamWConfig& config() const { return cfg_; }
  int64_t step_count() const { return t_; }

  /// One update on every parameter in order. Throws on a non-finite gradient.
  void step(const std::vector<Parameter*>& params);

 private:
  struct Slot {
    Mat m;
    Mat v;
  };
  AdamWConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Slot> slots_;
};

void adamw_step(const std::vector<Parameter*>& params, AdamWState& state);

/// pi <- tau * pi + (1 - tau) * theta, entrywise. Lists must align by name
/// and shape.
void ema_update(const std::vector<Parameter*>& target,
                const std::vector<const Parameter*>& online, double tau);

}  // namespace csgrl::opt
