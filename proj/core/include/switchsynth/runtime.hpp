#pragma once

// Closed-loop simulation of synthesized controllers and independent
// re-verification of their certificates.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "switchsynth/artifact.hpp"

namespace switchsynth {

// Piecewise-constant exogenous offset w(t); 0 before the first breakpoint.
class Schedule {
 public:
  Schedule() = default;
  // (first step, value) pairs; steps must be strictly increasing.
  explicit Schedule(std::vector<std::pair<long, double>> breakpoints);

  // CSV with header `step,w`.
  static Schedule from_csv(const std::filesystem::path& path);

  double at(long step) const;
  bool empty() const { return breakpoints_.empty(); }
  std::span<const std::pair<long, double>> breakpoints() const { return breakpoints_; }

 private:
  std::vector<std::pair<long, double>> breakpoints_;
};

struct TrajectoryPoint {
  long step = 0;
  Eigen::VectorXd x;
  // Joint mode applied from this state; empty on the final point.
  std::optional<std::size_t> joint;
  // Ring in charge (0 for the stability ring), and the position inside the
  // current pattern (centralized) or ring block (distributed).
  int ring = 0;
  int phase = 0;
};

enum class Outcome { captured, escaped, not_captured };

std::string to_string(Outcome outcome);

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::optional<long> capture_step;
  Outcome outcome = Outcome::not_captured;
  std::string detail;
};

// Throws OutOfDomain if x0 lies outside the capture set.
Trajectory simulate(const ControllerArtifact& artifact, const Eigen::VectorXd& x0, long max_steps,
                    const Schedule& schedule = {});

struct CertificateResult {
  std::string id;
  bool passed = false;
  std::string detail;
};

struct VerificationReport {
  std::vector<CertificateResult> entries;

  bool passed() const;
  std::size_t failures() const;
};

// Re-derives every certificate of the artifact against `sys` without reusing
// any stored image or bound.
VerificationReport verify_artifact(const SwitchedSystem& sys, const ControllerArtifact& artifact);
VerificationReport verify_artifact(const ControllerArtifact& artifact);

}  // namespace switchsynth
