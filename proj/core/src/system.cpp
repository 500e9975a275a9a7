#include "switchsynth/system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "switchsynth/errors.hpp"
#include "switchsynth/matrix_exp.hpp"

namespace switchsynth {

namespace {

int count_active(const std::string& label) {
  if (label.empty()) return 0;
  int n = 0;
  for (char ch : label) {
    if (ch == '1') {
      ++n;
    } else if (ch != '0') {
      return -1;
    }
  }
  return n;
}

}  // namespace

ModeSet::ModeSet(std::array<std::vector<std::string>, 2> labels, ModeConstraints constraints)
    : constraints_(constraints) {
  for (int c = 0; c < 2; ++c) {
    const auto& limit = constraints_.per_component_max_active[c];
    for (auto& label : labels[c]) {
      const int active = count_active(label);
      if (limit) {
        if (active < 0) {
          throw ConfigurationError("per_component_max_active needs binary mode labels; got '" +
                                   label + "'");
        }
        if (active > *limit) continue;
      }
      if (std::find(labels_[c].begin(), labels_[c].end(), label) != labels_[c].end()) {
        throw ConfigurationError("duplicate mode label '" + label + "'");
      }
      labels_[c].push_back(std::move(label));
      active_[c].push_back(active);
    }
    if (labels_[c].empty()) {
      throw ConfigurationError("component " + std::to_string(c + 1) + " has no admissible mode");
    }
  }
  if (constraints_.global_max_active) {
    for (int c = 0; c < 2; ++c) {
      for (int a : active_[c]) {
        if (a < 0) throw ConfigurationError("global_max_active needs binary mode labels");
      }
    }
  }
}

std::vector<std::string> ModeSet::binary_labels(int count) {
  if (count < 0 || count > 20) throw ConfigurationError("actuator count must be in [0, 20]");
  std::vector<std::string> out;
  const std::size_t total = std::size_t{1} << count;
  out.reserve(total);
  for (std::size_t v = 0; v < total; ++v) {
    std::string s(count, '0');
    for (int j = 0; j < count; ++j) {
      if (v & (std::size_t{1} << (count - 1 - j))) s[j] = '1';
    }
    out.push_back(std::move(s));
  }
  return out;
}

const std::string& ModeSet::label(Component c, int mode) const {
  return labels_[index_of(c)].at(static_cast<std::size_t>(mode));
}

std::optional<int> ModeSet::find(Component c, std::string_view label) const {
  const auto& l = labels_[index_of(c)];
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (l[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string ModeSet::joint_label(std::size_t joint) const {
  const auto [m1, m2] = split_joint(joint);
  const std::string& second = label(Component::second, m2);
  if (labels_[1].size() == 1 && second.empty()) return label(Component::first, m1);
  return label(Component::first, m1) + "|" + second;
}

std::size_t ModeSet::joint_index(int m1, int m2) const {
  if (m1 < 0 || m2 < 0 || static_cast<std::size_t>(m1) >= size(Component::first) ||
      static_cast<std::size_t>(m2) >= size(Component::second)) {
    throw ConfigurationError("mode index out of range");
  }
  return static_cast<std::size_t>(m1) * size(Component::second) + static_cast<std::size_t>(m2);
}

std::pair<int, int> ModeSet::split_joint(std::size_t joint) const {
  if (joint >= joint_size()) throw ConfigurationError("joint mode index out of range");
  const std::size_t n2 = size(Component::second);
  return {static_cast<int>(joint / n2), static_cast<int>(joint % n2)};
}

bool ModeSet::joint_allowed(std::size_t joint) const {
  if (!constraints_.global_max_active) return true;
  const auto [m1, m2] = split_joint(joint);
  return active_[0][m1] + active_[1][m2] <= *constraints_.global_max_active;
}

PatternEnumerator::PatternEnumerator(const ModeSet& modes, Scope scope, int min_length,
                                     int max_length)
    : modes_(&modes), scope_(scope), max_length_(max_length) {
  if (min_length < 1) throw ConfigurationError("pattern length must be >= 1");
  switch (scope) {
    case Scope::first:
    case Scope::second: {
      const Component c = scope == Scope::first ? Component::first : Component::second;
      for (std::size_t m = 0; m < modes.size(c); ++m) alphabet_.push_back(m);
      break;
    }
    case Scope::joint:
      for (std::size_t j = 0; j < modes.joint_size(); ++j) {
        if (modes.joint_allowed(j)) alphabet_.push_back(j);
      }
      break;
  }
  done_ = alphabet_.empty() || min_length > max_length;
  digits_.assign(static_cast<std::size_t>(min_length), 0);
}

Pattern PatternEnumerator::make() const {
  Pattern p;
  for (std::size_t d : digits_) {
    const std::size_t symbol = alphabet_[d];
    switch (scope_) {
      case Scope::first:
        p.first.push_back(static_cast<int>(symbol));
        break;
      case Scope::second:
        p.second.push_back(static_cast<int>(symbol));
        break;
      case Scope::joint: {
        const auto [m1, m2] = modes_->split_joint(symbol);
        p.first.push_back(m1);
        p.second.push_back(m2);
        break;
      }
    }
  }
  return p;
}

std::optional<Pattern> PatternEnumerator::next() {
  if (done_) return std::nullopt;
  Pattern out = make();

  std::size_t pos = digits_.size();
  while (pos > 0) {
    --pos;
    if (++digits_[pos] < alphabet_.size()) return out;
    digits_[pos] = 0;
  }
  if (static_cast<int>(digits_.size()) >= max_length_) {
    done_ = true;
  } else {
    digits_.assign(digits_.size() + 1, 0);
  }
  return out;
}

SwitchedSystem::SwitchedSystem(std::array<int, 2> split, ModeSet modes,
                               std::vector<AffineMap> dynamics,
                               std::vector<Eigen::VectorXd> offset_sensitivity,
                               double sampling_period_s)
    : split_(split),
      modes_(std::move(modes)),
      dynamics_(std::move(dynamics)),
      sensitivity_(std::move(offset_sensitivity)),
      sampling_period_(sampling_period_s) {
  if (split_[0] < 0 || split_[1] < 0 || dimension() < 1) {
    throw ConfigurationError("split: component dimensions must be >= 0 and sum to >= 1");
  }
  if (!(sampling_period_ > 0.0) || !std::isfinite(sampling_period_)) {
    throw ConfigurationError("tau_s: sampling period must be positive");
  }
  if (dynamics_.size() != modes_.joint_size()) {
    throw ConfigurationError("dynamics: expected one map per joint mode (" +
                             std::to_string(modes_.joint_size()) + "), got " +
                             std::to_string(dynamics_.size()));
  }
  const Eigen::Index n = dimension();
  for (const auto& m : dynamics_) {
    if (m.rows() != n || m.cols() != n) {
      throw ConfigurationError("dynamics: every map must be " + std::to_string(n) + "x" +
                               std::to_string(n));
    }
  }
  if (!sensitivity_.empty()) {
    if (sensitivity_.size() != dynamics_.size()) {
      throw ConfigurationError("offset_sensitivity: expected one vector per joint mode");
    }
    for (const auto& e : sensitivity_) {
      if (e.size() != n || !e.allFinite()) {
        throw ConfigurationError("offset_sensitivity: bad vector");
      }
    }
  }

  for (Component c : {Component::first, Component::second}) {
    auto& per_mode = component_maps_[index_of(c)];
    per_mode.assign(modes_.size(c), {});
    for (std::size_t j = 0; j < dynamics_.size(); ++j) {
      const auto [m1, m2] = modes_.split_joint(j);
      const int own = c == Component::first ? m1 : m2;
      AffineMap rows = dynamics_[j].row_block(row_offset(c), dims(c));
      auto& bucket = per_mode[own];
      if (std::find(bucket.begin(), bucket.end(), rows) == bucket.end()) {
        bucket.push_back(std::move(rows));
      }
    }
    for (const auto& bucket : per_mode) {
      if (bucket.size() > 1) decoupled_ = false;
    }
  }
}

std::span<const AffineMap> SwitchedSystem::component_maps(Component c, int mode) const {
  return component_maps_[index_of(c)].at(static_cast<std::size_t>(mode));
}

Eigen::VectorXd SwitchedSystem::step(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     std::size_t joint, double w) const {
  Eigen::VectorXd next = dynamics(joint).apply(x);
  if (w != 0.0 && has_offset_sensitivity()) next += w * sensitivity_[joint];
  return next;
}

bool SwitchedSystem::operator==(const SwitchedSystem& other) const {
  if (split_ != other.split_ || !(modes_ == other.modes_) ||
      sampling_period_ != other.sampling_period_ || dynamics_ != other.dynamics_ ||
      sensitivity_.size() != other.sensitivity_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < sensitivity_.size(); ++i) {
    if (sensitivity_[i] != other.sensitivity_[i]) return false;
  }
  return true;
}

namespace {

// exp(tau * [[A, B], [0, 0]]) = [[e^{A tau}, (int_0^tau e^{A s} ds) B], [0, I]].
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hold_integrals(const Eigen::MatrixXd& a,
                                                           const Eigen::MatrixXd& b,
                                                           double tau) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a;
  aug.topRightCorner(n, m) = b;
  const Eigen::MatrixXd e = expm(tau * aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace

SwitchedSystem discretize(const ContinuousSpec& spec) {
  if (!(spec.tau_s > 0.0) || !std::isfinite(spec.tau_s)) {
    throw ConfigurationError("tau_s: must be a positive finite number of seconds");
  }
  const std::size_t modes = spec.modes.joint_size();
  if (spec.drift.size() != modes || spec.offset.size() != modes) {
    throw ConfigurationError("continuous: expected drift and offset per joint mode");
  }
  const Eigen::Index n = spec.split[0] + spec.split[1];
  const bool with_e = spec.offset_sensitivity.has_value();
  if (with_e && spec.offset_sensitivity->size() != n) {
    throw ConfigurationError("offset_sensitivity: length must equal the state dimension");
  }
  for (std::size_t u = 0; u < modes; ++u) {
    if (spec.drift[u].rows() != n || spec.drift[u].cols() != n || spec.offset[u].size() != n) {
      throw ConfigurationError("continuous: drift/offset dimension mismatch");
    }
    if (!spec.drift[u].allFinite() || !spec.offset[u].allFinite()) {
      throw ConfigurationError("continuous: non-finite entry");
    }
  }

  // Inputs integrated under hold: offset column, then the sensitivity column.
  const Eigen::Index extra = with_e ? 2 : 1;
  std::vector<AffineMap> maps;
  std::vector<Eigen::VectorXd> sens;
  maps.reserve(modes);

  for (std::size_t u = 0; u < modes; ++u) {
    Eigen::MatrixXd inputs(n, extra);
    inputs.col(0) = spec.offset[u];
    if (with_e) inputs.col(1) = *spec.offset_sensitivity;

    if (spec.method == Discretization::exact) {
      auto [phi, gamma_b] = hold_integrals(spec.drift[u], inputs, spec.tau_s);
      maps.emplace_back(std::move(phi), gamma_b.col(0));
      if (with_e) sens.push_back(gamma_b.col(1));
      continue;
    }

    // component_hold: rows of component c integrate x_c' = A_cc x_c + A_co x_o + c_c
    // with x_o frozen, i.e. x_o enters as a held input next to the offset.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (int ci = 0; ci < 2; ++ci) {
      const Eigen::Index start = ci == 0 ? 0 : spec.split[0];
      const Eigen::Index own = spec.split[ci];
      const Eigen::Index oth_start = ci == 0 ? spec.split[0] : 0;
      const Eigen::Index oth = spec.split[1 - ci];
      if (own == 0) continue;
      Eigen::MatrixXd b(own, oth + extra);
      b.leftCols(oth) = spec.drift[u].block(start, oth_start, own, oth);
      b.rightCols(extra) = inputs.middleRows(start, own);
      auto [phi, gamma_b] =
          hold_integrals(spec.drift[u].block(start, start, own, own), b, spec.tau_s);
      m.block(start, start, own, own) = phi;
      m.block(start, oth_start, own, oth) = gamma_b.leftCols(oth);
      c.segment(start, own) = gamma_b.col(oth);
      if (with_e) e.segment(start, own) = gamma_b.col(oth + 1);
    }
    maps.emplace_back(std::move(m), std::move(c));
    if (with_e) sens.push_back(std::move(e));
  }

  SwitchedSystem sys(spec.split, spec.modes, std::move(maps), std::move(sens), spec.tau_s);
  if (spec.method == Discretization::component_hold && !sys.actuation_decoupled()) {
    throw ConfigurationError(
        "component_hold discretization requires each component's continuous rows to depend "
        "only on that component's mode");
  }
  return sys;
}

AffineMap pattern_map(const SwitchedSystem& sys, const Pattern& pattern) {
  if (pattern.first.size() != pattern.second.size() || pattern.first.empty()) {
    throw ConfigurationError("pattern_map: joint pattern needs equal, non-zero lengths");
  }
  AffineMap result = AffineMap::identity(sys.dimension());
  for (std::size_t k = 0; k < pattern.first.size(); ++k) {
    result = compose(sys.dynamics(pattern.first[k], pattern.second[k]), result);
  }
  return result;
}

}  // namespace switchsynth
