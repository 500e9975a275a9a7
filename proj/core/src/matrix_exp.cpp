#include "switchsynth/matrix_exp.hpp"

#include <cmath>

#include "switchsynth/errors.hpp"

namespace switchsynth {

namespace {
constexpr int kSeriesTerms = 20;
constexpr double kScaledNorm = 0.5;
}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ConfigurationError("expm: matrix must be square");
  if (!a.allFinite()) throw ConfigurationError("expm: non-finite entry");

  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > kScaledNorm) squarings = static_cast<int>(std::ceil(std::log2(norm / kScaledNorm)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);

  const Eigen::Index n = a.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= kSeriesTerms; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace switchsynth
