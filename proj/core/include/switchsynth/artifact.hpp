#pragma once

// Synthesis configuration and the controller artifact it produces.

#include <optional>
#include <string>
#include <vector>

#include "switchsynth/centralized.hpp"
#include "switchsynth/distributed.hpp"
#include "switchsynth/geometry.hpp"
#include "switchsynth/system.hpp"

namespace switchsynth {

enum class SynthesisMode { centralized, distributed, stability };

std::string to_string(SynthesisMode mode);

struct RuntimeSettings {
  std::vector<std::vector<double>> x0;
  long max_steps = 600;
  // Offset schedule file; empty for none. Resolved against the config's
  // directory when the config is loaded.
  std::string schedule;

  bool operator==(const RuntimeSettings&) const = default;
};

struct Config {
  SwitchedSystem system;
  Box R;
  SynthesisMode mode = SynthesisMode::centralized;
  SynthesisOptions options;
  std::optional<double> epsilon;
  RuntimeSettings runtime;
  // Hash of the canonical form of the config document.
  std::string hash;
};

struct ControllerArtifact {
  std::string config_hash;
  std::string tool_version;
  SynthesisMode mode = SynthesisMode::centralized;
  SwitchedSystem system;
  Box R;
  SynthesisOptions options;
  std::optional<double> epsilon;
  RuntimeSettings runtime;

  // Centralized: rings[0] is innermost.
  std::vector<Ring> rings;
  std::optional<Ring> stability;
  std::vector<DistRing> dist_rings;
  std::optional<DistRing> dist_stability;

  StopReason stop_reason = StopReason::max_rings;
  std::string stop_detail;

  // Outermost certified box: the last ring's extended box, or R.
  Box capture_set() const;
  double total_extension() const;
  std::size_t ring_count() const;

  bool operator==(const ControllerArtifact&) const;
};

// Runs the synthesis the config asks for. Failures to build an optional
// stability ring are reported through `warnings`; a first ring that cannot be
// built throws RefinementFailure.
ControllerArtifact synthesize(const Config& config, std::vector<std::string>* warnings = nullptr);

const char* tool_version();

}  // namespace switchsynth
