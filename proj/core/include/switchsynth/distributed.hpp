#pragma once

// Distributed synthesis: each component picks its pattern from its own tile,
// certified against over-approximations of the other component's behaviour.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "switchsynth/centralized.hpp"
#include "switchsynth/geometry.hpp"
#include "switchsynth/system.hpp"
#include "switchsynth/tiling.hpp"

namespace switchsynth {

// X^0 .. X^l for one component tile under a local pattern: X^0 is the
// extended tile, X^k the image of X^(k-1) x (other base + a + eps).
struct ApproxSequence {
  Component component = Component::first;
  std::size_t tile = 0;
  ModeSequence pattern;
  std::vector<ParamBox> steps;
  Box base;
  double epsilon = 0.0;
  ExtensionSpec extension;
};

ApproxSequence approx_sequence(const SwitchedSystem& sys, Component component, const Tile& tile,
                               const ModeSequence& pattern, const Box& base,
                               const Box& other_base, double epsilon,
                               const ExtensionSpec& spec = {});

// Intermediate steps inside base + a + eps, the last one inside base.
bool prop_check(const ApproxSequence& seq, double a, double slack = 0.0);

// Largest a for which prop_check holds; nullopt if it fails at a = 0.
std::optional<double> max_extension_distributed(const ApproxSequence& seq, double slack = 0.0);

struct LocalControl {
  std::size_t tile = 0;
  ModeSequence pattern;
  double a_tile = 0.0;

  bool operator==(const LocalControl&) const = default;
};

struct ComponentRing {
  Box base;
  Box extended;
  int k = 1;
  int alpha = 1;
  Tiling tiling;
  // Ordered like tiling.leaves(); every pattern has length k.
  std::vector<LocalControl> table;

  const LocalControl& control(std::size_t tile) const;
  bool operator==(const ComponentRing&) const = default;
};

struct DistRing {
  int index = 0;
  double a = 0.0;
  double epsilon = 0.0;
  int ell = 1;
  bool stability = false;
  int max_pattern_length = 0;
  ExtensionSpec extension;
  std::array<ComponentRing, 2> components;

  const ComponentRing& component(Component c) const { return components[index_of(c)]; }
  Box base() const;
  Box extended() const;
  bool operator==(const DistRing&) const = default;
};

// Per-length best local patterns of one tile: entry k-1 holds the best
// pattern of length k, or nullopt. With `at_zero` patterns are only checked
// at a = 0 and the first admissible one of each length is kept.
struct LocalChoice {
  ModeSequence pattern;
  double a = 0.0;
};
std::vector<std::optional<LocalChoice>> best_local_patterns(
    const SwitchedSystem& sys, Component component, const Tile& tile, const Box& base,
    const Box& other_base, double epsilon, int max_length, const ExtensionSpec& spec,
    double slack = 0.0, bool at_zero = false);

DistRing macro_step_synthesis_distributed(const SwitchedSystem& sys, const Box& R1,
                                          const Box& R2, const SynthesisOptions& options,
                                          double epsilon, int index = 1);

DistRing stability_synthesis_distributed(const SwitchedSystem& sys, const Box& R1, const Box& R2,
                                         const SynthesisOptions& options, double epsilon);

struct DistIterationResult {
  std::vector<DistRing> rings;
  StopReason reason = StopReason::max_rings;
  std::string detail;
};

DistIterationResult iterate_synthesis_distributed(const SwitchedSystem& sys, const Box& R1,
                                                  const Box& R2, const SynthesisOptions& options,
                                                  double epsilon);

double total_extension(std::span<const DistRing> rings);

// Throws ConfigurationError unless the system can be controlled component by
// component: both components non-empty and any pair of local modes allowed.
void check_distributable(const SwitchedSystem& sys);

}  // namespace switchsynth
