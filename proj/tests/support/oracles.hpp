#pragma once

// Reference computations for the tests. Everything here is written against
// plain Eigen and the public value types only, so a bug in the library cannot
// leak into its own oracle.

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "switchsynth/centralized.hpp"
#include "switchsynth/distributed.hpp"
#include "switchsynth/geometry.hpp"
#include "switchsynth/system.hpp"

namespace oracle {

using switchsynth::AffineMap;
using switchsynth::Box;

// Bounding box of the images of all 2^n vertices.
Box vertex_image(const AffineMap& map, const Box& box);

// exp(A) from a 60-term Taylor series in long double, after scaling A by an
// exact power of two.
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& a);

// Discrete map of x' = A x + c held for tau seconds, via the augmented
// matrix and expm_series.
AffineMap zoh_series(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double tau);

// Classical RK4 on x' = A x + c over [0, tau] with `steps` steps.
Eigen::VectorXd rk4(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, Eigen::VectorXd x,
                    double tau, long steps);

// Largest grid point a = i * step (i >= 0) with holds(a), assuming holds is
// monotone (true up to some threshold). nullopt if holds(0) is false;
// `cap` if it still holds there.
std::optional<double> grid_scan(const std::function<bool(double)>& holds, double step,
                                double cap);

// Box lowered by a on the lower faces (and raised on the upper faces when
// `symmetric`) wherever the flags say so.
Box push_faces(const Box& box, const std::vector<bool>& lower, const std::vector<bool>& upper,
               double a, bool symmetric);

// Every joint pattern of length 1..K as sequences of joint mode indices,
// respecting the global max-active constraint.
std::vector<std::vector<std::size_t>> joint_patterns(const switchsynth::SwitchedSystem& sys, int K);

// Exhaustive centralized synthesis of one ring: own tiling (midpoint
// bisection of tiles without any pattern at a = 0, up to depth D), own pattern
// enumeration, vertex-enumeration inclusion checks and a 1e-3 grid on a.
// Returns nullopt when refinement fails.
std::optional<double> brute_force_ring(const switchsynth::SwitchedSystem& sys, const Box& base,
                                       int K, int D, bool symmetric, double cap = 1e3);

// Sampled checks; each returns the number of violating samples.
std::size_t sample_ring(const switchsynth::SwitchedSystem& sys, const switchsynth::Ring& ring,
                        std::size_t samples, std::mt19937_64& rng);
std::size_t sample_stability_ring(const switchsynth::SwitchedSystem& sys,
                                  const switchsynth::Ring& ring, std::size_t samples,
                                  std::mt19937_64& rng);
// Joint ell-step simulation: component lookups every k_c steps, every state in
// base + a + eps, final state in base.
std::size_t sample_dist_ring(const switchsynth::SwitchedSystem& sys,
                             const switchsynth::DistRing& ring, std::size_t samples,
                             std::mt19937_64& rng);
// Component states of the first k_c steps inside X^j(A) of that component's
// over-approximation sequence.
std::size_t sample_dist_sequences(const switchsynth::SwitchedSystem& sys,
                                  const switchsynth::DistRing& ring, std::size_t samples,
                                  std::mt19937_64& rng);

Eigen::VectorXd uniform_in(const Box& box, std::mt19937_64& rng);

// Random stable 2-D systems with two binary actuators (four modes) whose
// fixed points spread around R = [0, 1]^2.
switchsynth::SwitchedSystem random_planar(std::mt19937_64& rng);

// Random 2+2 systems: weakly coupled contracting blocks, each component with
// two binary actuators acting only on its own rows.
switchsynth::SwitchedSystem random_coupled(std::mt19937_64& rng);

// x+ = 0.5 x + 10 u with u in {0, 1}.
switchsynth::SwitchedSystem toy1d();
// Two decoupled copies of toy1d as components 1 and 2.
switchsynth::SwitchedSystem toy1d_pair();

}  // namespace oracle
