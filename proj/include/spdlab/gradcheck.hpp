#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "spdlab/network.hpp"
#include "spdlab/parameters.hpp"

namespace spdlab {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = true;
  std::string worst_param;
  std::size_t worst_index = 0;
};

inline double grad_rel_err(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

// Central-difference comparison of `analytic` against the loss closure,
// parameter by parameter. The closure must recompute the full loss from the
// current contents of `params`; params are restored before returning.
inline GradCheckReport check_gradients_against(ParameterSet& params,
                                               const std::function<double()>& loss,
                                               const ParameterSet& analytic,
                                               double h, double tolerance) {
  params.require_same_layout(analytic, "check_gradients_against");
  GradCheckReport report;
  for (std::size_t e = 0; e < params.count(); ++e) {
    Array& p = params.value_at_mut(e);
    const Array& g = analytic.value_at(e);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double up = loss();
      p[i] = saved - h;
      const double down = loss();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = grad_rel_err(g[i], numeric);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params.name_at(e);
        report.worst_index = i;
      }
    }
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

// Scalar loss on the network output: returns (loss value, dL/d(output)).
using OutputLoss = std::function<std::pair<double, Array>(const Array& output)>;

// Verifies Network::backward against central differences (h defaults 1e-5).
inline GradCheckReport gradient_check(Network& net, const OutputLoss& loss,
                                      const Array& input, double tolerance,
                                      double h = 1e-5) {
  Tape tape;
  const Array out = net.forward(input, &tape);
  const Array upstream = loss(out).second;
  const ParameterSet analytic = net.backward(tape, upstream);
  auto scalar_loss = [&]() { return loss(net.forward(input)).first; };
  return check_gradients_against(net.params_mut(), scalar_loss, analytic, h, tolerance);
}

}  // namespace spdlab
