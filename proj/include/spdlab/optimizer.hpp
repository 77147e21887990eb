#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "spdlab/errors.hpp"
#include "spdlab/parameters.hpp"

namespace spdlab {

enum class OptKind { sgd, adam };

// Per-parameter optimizer state. Accumulator layout mirrors the parameters.
struct OptimizerState {
  OptKind kind = OptKind::adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  ParameterSet m;  // first moments (adam only)
  ParameterSet v;  // second moments (adam only)

  static OptimizerState make(OptKind kind, double lr, const ParameterSet& params) {
    if (lr <= 0.0) throw DomainError("OptimizerState: step size must be positive");
    OptimizerState s;
    s.kind = kind;
    s.lr = lr;
    if (kind == OptKind::adam) {
      s.m = params.zeros_like();
      s.v = params.zeros_like();
    }
    return s;
  }
};

// In-place descent step; bumps the parameter version.
inline void optimizer_step(ParameterSet& params, const ParameterSet& grads,
                           OptimizerState& opt) {
  params.require_same_layout(grads, "optimizer_step");
  if (!grads.all_finite()) throw NumericsError("optimizer_step: non-finite gradient");
  ++opt.step;
  if (opt.kind == OptKind::sgd) {
    params.add_scaled(grads, -opt.lr);
  } else {
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t e = 0; e < params.count(); ++e) {
      Array& p = params.value_at_mut(e);
      const Array& g = grads.value_at(e);
      Array& m = opt.m.value_at_mut(e);
      Array& v = opt.v.value_at_mut(e);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
        v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
      }
    }
  }
  if (!params.all_finite()) throw NumericsError("optimizer_step: parameters became non-finite");
  params.bump_version();
}

// target <- tau * online + (1 - tau) * target, entrywise.
inline void soft_update(ParameterSet& target, const ParameterSet& online, double tau) {
  if (tau < 0.0 || tau > 1.0)
    throw DomainError("soft_update: tau = " + std::to_string(tau) + " outside [0,1]");
  target.require_same_layout(online, "soft_update");
  for (std::size_t e = 0; e < target.count(); ++e) {
    Array& t = target.value_at_mut(e);
    const Array& o = online.value_at(e);
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = tau * o[i] + (1.0 - tau) * t[i];
  }
  target.bump_version();
}

}  // namespace spdlab
