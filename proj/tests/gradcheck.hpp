#pragma once

// Central finite-difference oracle for gradient tests. Test-side only and
// independent of the backward implementations it checks: it re-runs the
// forward pass at perturbed inputs and compares slopes.

#include <cmath>
#include <functional>

#include "invlab/tensor.hpp"

namespace gradcheck {

inline double rel_err(double analytic, double numeric, double guard = 1e-8) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), guard});
  return std::abs(analytic - numeric) / denom;
}

/// Max relative error between `analytic` d(loss)/d(param) and central finite
/// differences of `loss()` while perturbing `param` in place.
inline double max_rel_error(invlab::TensorT<double>& param,
                            const invlab::TensorT<double>& analytic,
                            const std::function<double()>& loss, double h = 1e-6,
                            double guard = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double keep = param[i];
    param[i] = keep + h;
    const double fp = loss();
    param[i] = keep - h;
    const double fm = loss();
    param[i] = keep;
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[i], fd, guard));
  }
  return worst;
}

/// Deterministic pseudo-random fill for test fixtures.
inline void fill_random(invlab::TensorT<double>& t, std::uint64_t seed, double scale = 1.0) {
  std::uint64_t s = seed;
  for (std::size_t i = 0; i < t.size(); ++i) {
    s = invlab::splitmix64(s);
    t[i] = scale * (2.0 * (static_cast<double>(s >> 11) * 0x1.0p-53) - 1.0);
  }
}

}  // namespace gradcheck
