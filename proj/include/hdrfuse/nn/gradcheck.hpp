#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace hdr::nn {

inline constexpr double kFiniteDifferenceStep = 1e-3;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double max_abs_error = 0.0;
};

/// Compares `analytic` against central differences of `objective` taken by
/// perturbing `values` in place (restored afterwards). The error is scaled by
/// the largest gradient magnitude seen on either side:
///   max_i |a_i - n_i| / max(max_j |a_j|, max_j |n_j|).
/// An all-zero pair of gradients reports zero error.
GradCheckResult gradient_check(const std::function<double()>& objective, std::span<double> values,
                               std::span<const double> analytic, double h = kFiniteDifferenceStep);

}  // namespace hdr::nn
