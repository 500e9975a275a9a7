#pragma once

// Boxes, affine maps and exact interval propagation of affine maps over boxes,
// including bounds that depend affinely on a scalar extension parameter `a`.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace switchsynth {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Axis-aligned box, the product of closed intervals. Zero-width intervals are
// allowed.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> intervals);
  Box(std::span<const double> lower, std::span<const double> upper);

  std::size_t dims() const { return intervals_.size(); }
  bool empty() const { return intervals_.empty(); }
  const Interval& operator[](std::size_t i) const { return intervals_[i]; }
  std::span<const Interval> intervals() const { return intervals_; }

  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  Eigen::VectorXd center() const;
  double volume() const;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // Product of this box and `other`, with this box's coordinates first.
  Box concat(const Box& other) const;
  Box slice(std::size_t start, std::size_t count) const;

  bool operator==(const Box&) const = default;

 private:
  std::vector<Interval> intervals_;
};

// x -> matrix * x + offset.
struct AffineMap {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;

  AffineMap() = default;
  AffineMap(Eigen::MatrixXd m, Eigen::VectorXd c);

  static AffineMap identity(Eigen::Index n);

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  // The map restricted to output rows [start, start + count).
  AffineMap row_block(Eigen::Index start, Eigen::Index count) const;

  friend bool operator==(const AffineMap& lhs, const AffineMap& rhs);
};

// Interval whose endpoints are affine in the extension parameter a >= 0:
//   lo(a) = lo0 + lo1 * a,  hi(a) = hi0 + hi1 * a.
// Valid when lo0 <= hi0 and lo1 <= hi1, i.e. the interval is non-empty at a = 0
// and never narrows as a grows; then lo(a) <= hi(a) for every a >= 0 and the
// endpoint an affine map selects for a coordinate does not depend on a.
struct ParamInterval {
  double lo0 = 0.0;
  double lo1 = 0.0;
  double hi0 = 0.0;
  double hi1 = 0.0;

  static ParamInterval constant(const Interval& i) { return {i.lo, 0.0, i.hi, 0.0}; }

  bool valid() const { return lo0 <= hi0 && lo1 <= hi1; }
  Interval at(double a) const { return {lo0 + lo1 * a, hi0 + hi1 * a}; }
  bool operator==(const ParamInterval&) const = default;
};

class ParamBox {
 public:
  ParamBox() = default;
  explicit ParamBox(std::vector<ParamInterval> intervals);

  static ParamBox constant(const Box& box);

  std::size_t dims() const { return intervals_.size(); }
  const ParamInterval& operator[](std::size_t i) const { return intervals_[i]; }
  ParamInterval& operator[](std::size_t i) { return intervals_[i]; }
  std::span<const ParamInterval> intervals() const { return intervals_; }

  // The box obtained by fixing the parameter; requires a >= 0.
  Box at(double a) const;
  ParamBox concat(const ParamBox& other) const;

  bool operator==(const ParamBox&) const = default;

 private:
  std::vector<ParamInterval> intervals_;
};

// Exact coordinate-wise range of {Mx + c : x in input}.
Box image_bounds(const AffineMap& map, const Box& input);

// Parametric counterpart of image_bounds. Specializing the result at any
// a >= 0 gives image_bounds of the specialized input.
ParamBox image_bounds_param(const AffineMap& map, const ParamBox& input);

// x -> outer(inner(x)).
AffineMap compose(const AffineMap& outer, const AffineMap& inner);

// True iff every coordinate interval of `inner` lies in `outer`, allowing each
// bound to overshoot by at most `slack`.
bool box_inclusion(const Box& inner, const Box& outer, double slack = 0.0);

// Largest a >= 0 such that the conjunction of affine constraints
// c0 + c1 * a >= 0 holds. Constraints are accumulated one at a time.
class ExtensionBound {
 public:
  void require_nonnegative(double c0, double c1);
  // Constrains image(a) to lie inside target(a), with per-bound slack.
  void require_inclusion(const ParamBox& image, const ParamBox& target,
                         double slack = 0.0);

  bool feasible() const { return feasible_; }
  // nullopt when infeasible at a = 0, +infinity when no constraint binds.
  std::optional<double> max() const;

 private:
  bool feasible_ = true;
  double limit_ = std::numeric_limits<double>::infinity();
};

// sup{a >= 0 : image(a) inside target}. nullopt if the inclusion fails already
// at a = 0; +infinity if no constraint ever binds.
std::optional<double> max_param_inclusion(const ParamBox& image, const Box& target,
                                          double slack = 0.0);
std::optional<double> max_param_inclusion(const ParamBox& image, const ParamBox& target,
                                          double slack = 0.0);

}  // namespace switchsynth
