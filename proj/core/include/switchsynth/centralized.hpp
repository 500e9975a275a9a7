#pragma once

// Centralized macro-step synthesis: per-tile pattern search, generate-and-test
// bisection, iterated rings and the stability ring.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "switchsynth/geometry.hpp"
#include "switchsynth/system.hpp"
#include "switchsynth/tiling.hpp"

namespace switchsynth {

enum class TilingStrategy { adaptive, uniform };

struct SynthesisOptions {
  int max_pattern_length = 1;  // K
  int max_depth = 0;           // D
  ExtensionSpec extension;
  double eta = 0.1;
  int max_rings = 100;
  double slack = 0.0;
  TilingStrategy strategy = TilingStrategy::adaptive;
  // Used in place of an unbounded extension.
  double max_extension = 1e6;
  // Worker threads for per-tile searches; 0 picks the hardware count.
  unsigned threads = 0;

  void validate() const;
};

struct TileControl {
  std::size_t tile = 0;
  Pattern pattern;
  double a_tile = 0.0;
  // Image of the tile extended by the ring's a under the pattern.
  Box certificate;

  bool operator==(const TileControl&) const = default;
};

struct Ring {
  int index = 0;
  Box base;
  Box extended;
  double a = 0.0;
  Tiling tiling;
  // One entry per tile, ordered like tiling.leaves().
  std::vector<TileControl> table;
  int max_pattern_length = 0;
  // Set on stability rings: the margin prefix images must stay within.
  std::optional<double> epsilon;
  ExtensionSpec extension;

  const TileControl& control(std::size_t tile) const;
  bool operator==(const Ring&) const = default;
};

// Every joint pattern of length <= K with its composed map, shortest first and
// lexicographic within a length. `parent` indexes the pattern minus its last
// step (-1 for length 1), so prefixes always precede their extensions.
class PatternLibrary {
 public:
  struct Entry {
    Pattern pattern;
    AffineMap map;
    std::ptrdiff_t parent = -1;
  };

  PatternLibrary(const SwitchedSystem& sys, int max_length);

  std::span<const Entry> entries() const { return entries_; }
  int max_length() const { return max_length_; }

 private:
  int max_length_;
  std::vector<Entry> entries_;
};

struct PatternChoice {
  Pattern pattern;
  double a = 0.0;
};

// Best pattern driving the extended tile into `target`: largest admissible a,
// then shortest, then first in enumeration order. With `prefix_margin` set the
// search runs at a = 0 and additionally requires every strict-prefix image to
// stay within target extended by the margin (faces chosen by `spec`).
std::optional<PatternChoice> best_pattern_for_tile(const PatternLibrary& library, const Tile& tile,
                                                   const Box& target, const ExtensionSpec& spec,
                                                   double slack = 0.0,
                                                   std::optional<double> prefix_margin = {});
std::optional<PatternChoice> best_pattern_for_tile(const SwitchedSystem& sys, const Tile& tile,
                                                   const Box& target, int max_length,
                                                   const ExtensionSpec& spec = {});

// One ring around `base`. Throws RefinementFailure when bad tiles remain at
// the maximal depth.
Ring macro_step_synthesis(const SwitchedSystem& sys, const Box& base,
                          const SynthesisOptions& options, int index = 1);

Ring stability_synthesis(const SwitchedSystem& sys, const Box& R, const SynthesisOptions& options,
                         double epsilon);

enum class StopReason { max_rings, below_eta, refinement_failure, no_progress };

struct IterationResult {
  std::vector<Ring> rings;
  StopReason reason = StopReason::max_rings;
  std::string detail;
};

IterationResult iterate_synthesis(const SwitchedSystem& sys, const Box& R,
                                  const SynthesisOptions& options);

double total_extension(std::span<const Ring> rings);

std::string to_string(StopReason reason);

}  // namespace switchsynth
