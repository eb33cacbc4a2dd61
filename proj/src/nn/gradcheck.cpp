#include "hdrfuse/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hdrfuse/image.hpp"

namespace hdr::nn {

GradCheckResult gradient_check(const std::function<double()>& objective, std::span<double> values,
                               std::span<const double> analytic, double h) {
  if (values.size() != analytic.size()) throw ContractError("gradient_check size mismatch");
  std::vector<double> numeric(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double plus = objective();
    values[i] = saved - h;
    const double minus = objective();
    values[i] = saved;
    numeric[i] = (plus - minus) / (2.0 * h);
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  GradCheckResult r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]);
    if (err > r.max_abs_error) {
      r.max_abs_error = err;
      r.worst_index = i;
    }
  }
  r.max_rel_error = scale > 0.0 ? r.max_abs_error / scale : 0.0;
  return r;
}

}  // namespace hdr::nn
