#pragma once

#include <algorithm>
#include <cmath>

#include "spdlab/array.hpp"
#include "spdlab/errors.hpp"

namespace spdlab {

inline constexpr double kProbClamp = 1e-7;

inline double clamp_probability(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

// Two-class cross entropy with per-class weights. p1 is the predicted
// probability of label 1; it is clamped to [1e-7, 1-1e-7] before the log.
inline double weighted_binary_cross_entropy(double p1, int label, double w1, double w2) {
  if (p1 < 0.0 || p1 > 1.0)
    throw DomainError("weighted_binary_cross_entropy: p1 = " + std::to_string(p1) +
                      " outside [0,1]");
  if (label != 0 && label != 1)
    throw DomainError("weighted_binary_cross_entropy: label must be 0 or 1");
  if (w1 <= 0.0 || w2 <= 0.0)
    throw DomainError("weighted_binary_cross_entropy: weights must be positive");
  const double p = clamp_probability(p1);
  return -(w1 * label * std::log(p) + w2 * (1 - label) * std::log(1.0 - p));
}

// d(loss)/d(p1); zero in the clamped region, matching the flat loss there.
inline double weighted_binary_cross_entropy_grad(double p1, int label, double w1, double w2) {
  if (p1 <= kProbClamp || p1 >= 1.0 - kProbClamp) return 0.0;
  return -w1 * label / p1 + w2 * (1 - label) / (1.0 - p1);
}

inline double mse(const Array& pred, const Array& target) {
  if (!pred.same_shape(target)) throw DimensionError("mse: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

inline Array mse_grad(const Array& pred, const Array& target) {
  Array g(pred.shape());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
  return g;
}

}  // namespace spdlab
