#include "switchsynth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "switchsynth/errors.hpp"

namespace switchsynth {

namespace {

void check_interval(const Interval& i) {
  if (std::isnan(i.lo) || std::isnan(i.hi) || !(i.lo <= i.hi)) {
    throw ConfigurationError("interval [" + std::to_string(i.lo) + ", " +
                             std::to_string(i.hi) + "] has lo > hi");
  }
}

void check_dims(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ConfigurationError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(expected) + " vs " + std::to_string(got) + ")");
  }
}

}  // namespace

Box::Box(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
  for (const auto& i : intervals_) check_interval(i);
}

Box::Box(std::span<const double> lower, std::span<const double> upper) {
  check_dims(lower.size(), upper.size(), "Box");
  intervals_.reserve(lower.size());
  for (std::size_t j = 0; j < lower.size(); ++j) {
    intervals_.push_back({lower[j], upper[j]});
    check_interval(intervals_.back());
  }
}

Eigen::VectorXd Box::lower() const {
  Eigen::VectorXd v(dims());
  for (std::size_t j = 0; j < dims(); ++j) v[j] = intervals_[j].lo;
  return v;
}

Eigen::VectorXd Box::upper() const {
  Eigen::VectorXd v(dims());
  for (std::size_t j = 0; j < dims(); ++j) v[j] = intervals_[j].hi;
  return v;
}

Eigen::VectorXd Box::center() const { return 0.5 * (lower() + upper()); }

double Box::volume() const {
  double v = 1.0;
  for (const auto& i : intervals_) v *= i.width();
  return v;
}

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dims(dims(), static_cast<std::size_t>(x.size()), "Box::contains");
  for (std::size_t j = 0; j < dims(); ++j) {
    if (!intervals_[j].contains(x[j])) return false;
  }
  return true;
}

Box Box::concat(const Box& other) const {
  std::vector<Interval> all = intervals_;
  all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
  return Box(std::move(all));
}

Box Box::slice(std::size_t start, std::size_t count) const {
  if (start + count > dims()) throw ConfigurationError("Box::slice out of range");
  return Box(std::vector<Interval>(intervals_.begin() + start,
                                   intervals_.begin() + start + count));
}

AffineMap::AffineMap(Eigen::MatrixXd m, Eigen::VectorXd c)
    : matrix(std::move(m)), offset(std::move(c)) {
  check_dims(matrix.rows(), offset.size(), "AffineMap offset");
  if (!matrix.allFinite() || !offset.allFinite()) {
    throw ConfigurationError("AffineMap: non-finite coefficient");
  }
}

AffineMap AffineMap::identity(Eigen::Index n) {
  return AffineMap(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n));
}

Eigen::VectorXd AffineMap::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dims(cols(), x.size(), "AffineMap::apply");
  return matrix * x + offset;
}

AffineMap AffineMap::row_block(Eigen::Index start, Eigen::Index count) const {
  return AffineMap(matrix.middleRows(start, count), offset.segment(start, count));
}

bool operator==(const AffineMap& lhs, const AffineMap& rhs) {
  return lhs.rows() == rhs.rows() && lhs.cols() == rhs.cols() &&
         lhs.matrix == rhs.matrix && lhs.offset == rhs.offset;
}

ParamBox::ParamBox(std::vector<ParamInterval> intervals) : intervals_(std::move(intervals)) {
  for (const auto& i : intervals_) {
    if (!i.valid()) {
      throw ConfigurationError(
          "parametric interval must satisfy lo0 <= hi0 and lo1 <= hi1 (got lo0=" +
          std::to_string(i.lo0) + " lo1=" + std::to_string(i.lo1) +
          " hi0=" + std::to_string(i.hi0) + " hi1=" + std::to_string(i.hi1) + ")");
    }
  }
}

ParamBox ParamBox::constant(const Box& box) {
  std::vector<ParamInterval> out;
  out.reserve(box.dims());
  for (const auto& i : box.intervals()) out.push_back(ParamInterval::constant(i));
  return ParamBox(std::move(out));
}

Box ParamBox::at(double a) const {
  if (!(a >= 0.0)) throw ConfigurationError("ParamBox::at requires a >= 0");
  std::vector<Interval> out;
  out.reserve(dims());
  for (const auto& i : intervals_) out.push_back(i.at(a));
  return Box(std::move(out));
}

ParamBox ParamBox::concat(const ParamBox& other) const {
  std::vector<ParamInterval> all = intervals_;
  all.insert(all.end(), other.intervals_.begin(), other.intervals_.end());
  return ParamBox(std::move(all));
}

Box image_bounds(const AffineMap& map, const Box& input) {
  check_dims(map.cols(), input.dims(), "image_bounds");
  std::vector<Interval> out(map.rows());
  for (Eigen::Index j = 0; j < map.rows(); ++j) {
    double lo = map.offset[j];
    double hi = map.offset[j];
    for (Eigen::Index k = 0; k < map.cols(); ++k) {
      const double m = map.matrix(j, k);
      const double p = m * input[k].lo;
      const double q = m * input[k].hi;
      lo += std::min(p, q);
      hi += std::max(p, q);
    }
    out[j] = {lo, hi};
  }
  return Box(std::move(out));
}

ParamBox image_bounds_param(const AffineMap& map, const ParamBox& input) {
  check_dims(map.cols(), input.dims(), "image_bounds_param");
  std::vector<ParamInterval> out(map.rows());
  for (Eigen::Index j = 0; j < map.rows(); ++j) {
    ParamInterval r{map.offset[j], 0.0, map.offset[j], 0.0};
    for (Eigen::Index k = 0; k < map.cols(); ++k) {
      const double m = map.matrix(j, k);
      const ParamInterval& x = input[k];
      if (m >= 0.0) {
        r.lo0 += m * x.lo0;
        r.lo1 += m * x.lo1;
        r.hi0 += m * x.hi0;
        r.hi1 += m * x.hi1;
      } else {
        r.lo0 += m * x.hi0;
        r.lo1 += m * x.hi1;
        r.hi0 += m * x.lo0;
        r.hi1 += m * x.lo1;
      }
    }
    out[j] = r;
  }
  return ParamBox(std::move(out));
}

AffineMap compose(const AffineMap& outer, const AffineMap& inner) {
  check_dims(outer.cols(), inner.rows(), "compose");
  return AffineMap(outer.matrix * inner.matrix, outer.matrix * inner.offset + outer.offset);
}

bool box_inclusion(const Box& inner, const Box& outer, double slack) {
  check_dims(outer.dims(), inner.dims(), "box_inclusion");
  for (std::size_t j = 0; j < inner.dims(); ++j) {
    if (inner[j].lo < outer[j].lo - slack || inner[j].hi > outer[j].hi + slack) return false;
  }
  return true;
}

void ExtensionBound::require_nonnegative(double c0, double c1) {
  if (!feasible_) return;
  if (!(c0 >= 0.0)) {
    feasible_ = false;
    return;
  }
  if (c1 < 0.0) limit_ = std::min(limit_, c0 / -c1);
}

void ExtensionBound::require_inclusion(const ParamBox& image, const ParamBox& target,
                                       double slack) {
  check_dims(target.dims(), image.dims(), "require_inclusion");
  for (std::size_t j = 0; j < image.dims(); ++j) {
    require_nonnegative(image[j].lo0 - target[j].lo0 + slack, image[j].lo1 - target[j].lo1);
    require_nonnegative(target[j].hi0 - image[j].hi0 + slack, target[j].hi1 - image[j].hi1);
  }
}

std::optional<double> ExtensionBound::max() const {
  if (!feasible_) return std::nullopt;
  return limit_;
}

std::optional<double> max_param_inclusion(const ParamBox& image, const Box& target,
                                          double slack) {
  return max_param_inclusion(image, ParamBox::constant(target), slack);
}

std::optional<double> max_param_inclusion(const ParamBox& image, const ParamBox& target,
                                          double slack) {
  ExtensionBound bound;
  bound.require_inclusion(image, target, slack);
  return bound.max();
}

}  // namespace switchsynth
