#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace illab {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

inline double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// In-place softmax with max subtraction. Entries where mask (if nonempty) is
// zero are forced to probability 0 and excluded from the normalization.
inline void softmax_inplace(std::span<double> logits,
                            std::span<const std::uint8_t> mask = {}) {
  double hi = -HUGE_VAL;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask.empty() || mask[i]) hi = std::max(hi, logits[i]);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask.empty() || mask[i]) {
      logits[i] = std::exp(logits[i] - hi);
      z += logits[i];
    } else {
      logits[i] = 0.0;
    }
  }
  for (double& v : logits) v /= z;
}

}  // namespace illab
