#pragma once

// Switched-system model: per-mode affine dynamics, the (n1, n2) component
// split, mode sets with actuator constraints, control patterns, and exact
// discretization of continuous-time specifications.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "switchsynth/geometry.hpp"

namespace switchsynth {

enum class Component : int { first = 0, second = 1 };

constexpr int index_of(Component c) { return static_cast<int>(c); }
constexpr Component other(Component c) {
  return c == Component::first ? Component::second : Component::first;
}

// Maximum number of simultaneously active actuators. A mode label made only of
// '0'/'1' characters is read as an actuator vector; its active count is the
// number of '1's.
struct ModeConstraints {
  std::optional<int> global_max_active;
  std::array<std::optional<int>, 2> per_component_max_active;

  bool operator==(const ModeConstraints&) const = default;
};

class ModeSet {
 public:
  ModeSet() = default;
  // `labels[c]` lists every mode of component c; modes violating the
  // per-component constraint are dropped, the rest keep their relative order.
  explicit ModeSet(std::array<std::vector<std::string>, 2> labels,
                   ModeConstraints constraints = {});

  // All 2^count actuator vectors as '0'/'1' strings in counting order.
  static std::vector<std::string> binary_labels(int count);

  std::size_t size(Component c) const { return labels_[index_of(c)].size(); }
  std::size_t joint_size() const { return size(Component::first) * size(Component::second); }

  const std::string& label(Component c, int mode) const;
  std::span<const std::string> labels(Component c) const { return labels_[index_of(c)]; }
  std::optional<int> find(Component c, std::string_view label) const;
  std::string joint_label(std::size_t joint) const;

  // Joint modes are indexed canonically as m1 * N2 + m2.
  std::size_t joint_index(int m1, int m2) const;
  std::pair<int, int> split_joint(std::size_t joint) const;

  int active_count(Component c, int mode) const { return active_[index_of(c)][mode]; }
  // Whether the joint mode passes the global max-active constraint.
  bool joint_allowed(std::size_t joint) const;

  const ModeConstraints& constraints() const { return constraints_; }

  bool operator==(const ModeSet&) const = default;

 private:
  std::array<std::vector<std::string>, 2> labels_;
  std::array<std::vector<int>, 2> active_;
  ModeConstraints constraints_;
};

using ModeSequence = std::vector<int>;

// A control pattern: per-component mode sequences applied one step at a time,
// first element first. Joint patterns have equal-length sequences; a
// component-local pattern leaves the other component's sequence empty.
struct Pattern {
  ModeSequence first;
  ModeSequence second;

  std::size_t length() const { return std::max(first.size(), second.size()); }
  const ModeSequence& of(Component c) const { return c == Component::first ? first : second; }

  bool operator==(const Pattern&) const = default;
  auto operator<=>(const Pattern&) const = default;
};

enum class Scope { first, second, joint };

// Deterministic cursor over every constraint-satisfying pattern with lengths in
// [min_length, max_length]: shorter lengths first, lexicographic within a
// length. Each consumer owns its own cursor.
class PatternEnumerator {
 public:
  PatternEnumerator(const ModeSet& modes, Scope scope, int min_length, int max_length);

  std::optional<Pattern> next();

 private:
  Pattern make() const;

  const ModeSet* modes_;
  Scope scope_;
  int max_length_;
  // Per-step alphabet: mode indices (component scopes) or joint indices.
  std::vector<std::size_t> alphabet_;
  std::vector<std::size_t> digits_;
  bool done_ = false;
};

class SwitchedSystem {
 public:
  SwitchedSystem() = default;
  // `dynamics` holds one map per joint mode, indexed as ModeSet::joint_index.
  // `offset_sensitivity` is empty or holds one n-vector per joint mode.
  SwitchedSystem(std::array<int, 2> split, ModeSet modes, std::vector<AffineMap> dynamics,
                 std::vector<Eigen::VectorXd> offset_sensitivity = {},
                 double sampling_period_s = 1.0);

  int dimension() const { return split_[0] + split_[1]; }
  int dims(Component c) const { return split_[index_of(c)]; }
  int row_offset(Component c) const { return c == Component::first ? 0 : split_[0]; }
  std::array<int, 2> split() const { return split_; }
  const ModeSet& modes() const { return modes_; }
  double sampling_period() const { return sampling_period_; }

  const AffineMap& dynamics(std::size_t joint) const { return dynamics_.at(joint); }
  const AffineMap& dynamics(int m1, int m2) const { return dynamics(modes_.joint_index(m1, m2)); }
  std::span<const AffineMap> all_dynamics() const { return dynamics_; }

  // True when rows of component c depend on the joint mode only through c's
  // own mode (for both components).
  bool actuation_decoupled() const { return decoupled_; }

  // Distinct row blocks of component c's dynamics over all modes of the other
  // component, for local mode `mode`. A single map when actuation is decoupled.
  std::span<const AffineMap> component_maps(Component c, int mode) const;

  bool has_offset_sensitivity() const { return !sensitivity_.empty(); }
  const Eigen::VectorXd& offset_sensitivity(std::size_t joint) const { return sensitivity_.at(joint); }
  std::span<const Eigen::VectorXd> all_offset_sensitivity() const { return sensitivity_; }

  // x(t+1) = f(x(t), u) + E_u * w.
  Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t joint,
                       double w = 0.0) const;

  bool operator==(const SwitchedSystem&) const;

 private:
  std::array<int, 2> split_{0, 0};
  ModeSet modes_;
  std::vector<AffineMap> dynamics_;
  std::vector<Eigen::VectorXd> sensitivity_;
  double sampling_period_ = 1.0;
  bool decoupled_ = true;
  std::array<std::vector<std::vector<AffineMap>>, 2> component_maps_;
};

enum class Discretization {
  // Exact zero-order hold of the full continuous dynamics.
  exact,
  // Each component integrated exactly with the other component's state held
  // constant over the sampling period; guarantees decoupled actuation.
  component_hold,
};

// Continuous dynamics x' = A_u x + c_u for every joint mode u.
struct ContinuousSpec {
  std::array<int, 2> split{0, 0};
  ModeSet modes;
  std::vector<Eigen::MatrixXd> drift;
  std::vector<Eigen::VectorXd> offset;
  // d c_u / d w for an exogenous scalar w (e.g. outside temperature).
  std::optional<Eigen::VectorXd> offset_sensitivity;
  double tau_s = 0.0;
  Discretization method = Discretization::exact;
};

SwitchedSystem discretize(const ContinuousSpec& spec);

// Composition of the joint-mode maps along the pattern, first step innermost.
AffineMap pattern_map(const SwitchedSystem& sys, const Pattern& pattern);

}  // namespace switchsynth
