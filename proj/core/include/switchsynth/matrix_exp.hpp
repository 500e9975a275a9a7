#pragma once

#include <Eigen/Dense>

namespace switchsynth {

// Matrix exponential by scaling and squaring: the argument is scaled by 2^-s so
// its 1-norm is at most 0.5, the Taylor series is summed to 20 terms, and the
// result is squared s times.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace switchsynth
