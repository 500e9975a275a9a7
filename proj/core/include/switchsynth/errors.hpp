#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchsynth {

// Malformed input: dimension mismatches, schema violations, bad parameters.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The loaded model cannot be used the way it was asked to be used.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bisection could not eliminate bad tiles within the depth budget. Carries the
// ids of the tiles that were still bad and the depth at which refinement
// stopped.
class RefinementFailure : public std::runtime_error {
 public:
  RefinementFailure(const std::string& what, std::vector<std::size_t> bad_tiles,
                    int depth)
      : std::runtime_error(what), bad_tiles_(std::move(bad_tiles)), depth_(depth) {}

  const std::vector<std::size_t>& bad_tiles() const { return bad_tiles_; }
  int depth() const { return depth_; }

 private:
  std::vector<std::size_t> bad_tiles_;
  int depth_;
};

// A state lies outside the region a tiling or controller is defined on.
class OutOfDomain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace switchsynth
