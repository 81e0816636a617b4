#include "csgrl/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "csgrl/kernels.hpp"

namespace csgrl::opt {

Parameter& ParamSet::add(const std::string& name, Mat value) {
  if (index_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  store_.emplace_back(name, std::move(value));
  Parameter* p = &store_.back();
  order_.push_back(p);
  index_.emplace(name, p);
  return *p;
}

Parameter& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

const Parameter& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

bool ParamSet::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

std::vector<Parameter*> ParamSet::all() { return order_; }

std::vector<const Parameter*> ParamSet::all() const {
  return {order_.begin(), order_.end()};
}

std::vector<Parameter*> ParamSet::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (Parameter* p : order_)
    if (p->name.rfind(prefix, 0) == 0) out.push_back(p);
  return out;
}

void ParamSet::zero_grads() {
  for (Parameter* p : order_) p->grad.fill(0.0);
}

void glorot_init(Mat& m, int fan_in, int fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / (double(fan_in) + double(fan_out)));
  for (double& x : m.v) x = rng.uniform(-limit, limit);
}

void AdamWState::step(const std::vector<Parameter*>& params) {
  ++t_;
  double bias_c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  double bias_c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (Parameter* p : params) {
    if (!p->grad.all_finite())
      throw ad::NumericError("non-finite gradient in parameter " + p->name);
    auto it = slots_.find(p->name);
    if (it == slots_.end()) {
      Slot s;
      s.m = Mat(p->value.rows, p->value.cols);
      s.v = Mat(p->value.rows, p->value.cols);
      it = slots_.emplace(p->name, std::move(s)).first;
    }
    Slot& s = it->second;
    if (!s.m.same_shape(p->value))
      throw std::invalid_argument("parameter shape changed under optimizer: " +
                                  p->name);
    kernels::adamw_update(p->value.data(), p->grad.data(), s.m.data(),
                          s.v.data(), p->value.size(), cfg_.lr, cfg_.beta1,
                          cfg_.beta2, cfg_.eps, cfg_.weight_decay, bias_c1,
                          bias_c2);
  }
}

void adamw_step(const std::vector<Parameter*>& params, AdamWState& state) {
  state.step(params);
}

void ema_update(const std::vector<Parameter*>& target,
                const std::vector<const Parameter*>& online, double tau) {
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("tau must be in [0, 1]");
  if (target.size() != online.size())
    throw std::invalid_argument("ema_update: list sizes differ");
  for (size_t i = 0; i < target.size(); ++i) {
    Parameter& t = *target[i];
    const Parameter& o = *online[i];
    if (t.name != o.name || !t.value.same_shape(o.value))
      throw std::invalid_argument("ema_update: misaligned parameter " + t.name +
                                  " vs " + o.name);
    double* tv = t.value.data();
    const double* ov = o.value.data();
    for (size_t k = 0; k < t.value.size(); ++k)
      tv[k] = tau * tv[k] + (1.0 - tau) * ov[k];
  }
}

}  // namespace csgrl::opt
