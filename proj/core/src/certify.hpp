#pragma once

#include <algorithm>
#include <cmath>

namespace switchsynth::detail {

// The closed-form extension and the pointwise re-check round differently; walk
// `a` down until the pointwise check agrees. `holds(0)` is assumed true.
template <typename Check>
double certify_extension(double a, Check&& holds) {
  if (holds(a)) return a;
  double step = 1e-12 * (1.0 + std::abs(a));
  while (a > 0.0) {
    a = std::max(0.0, a - step);
    if (holds(a)) return a;
    step *= 2.0;
  }
  return 0.0;
}

}  // namespace switchsynth::detail
