#pragma once

// Rectangular tilings kept as a bisection tree, parametric extension of tiles
// towards the faces of an extended root, and point-to-tile lookup.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "switchsynth/geometry.hpp"

namespace switchsynth {

enum class ExtensionMode { lower_only, symmetric };

struct ExtensionSpec {
  ExtensionMode mode = ExtensionMode::lower_only;
  bool operator==(const ExtensionSpec&) const = default;
};

// Whether a tile touches the root's lower/upper face in one dimension.
struct FaceContact {
  bool lower = false;
  bool upper = false;
  bool operator==(const FaceContact&) const = default;
};

struct Tile {
  std::size_t id = 0;
  Box box;
  int depth = 0;
  std::vector<FaceContact> contact;

  bool operator==(const Tile&) const = default;
};

class Tiling {
 public:
  struct Node {
    Tile tile;
    std::ptrdiff_t parent = -1;
    // Children occupy ids [first_child, first_child + 2^n); 0 for leaves.
    std::size_t first_child = 0;
    bool leaf = true;

    bool operator==(const Node&) const = default;
  };

  Tiling() = default;

  static Tiling trivial(const Box& root);
  // Every dimension bisected `depth` times: 2^(n * depth) tiles.
  static Tiling uniform(const Box& root, int depth);
  // Rebuilds a tiling from serialized nodes, validating the tree.
  static Tiling from_nodes(const Box& root, std::vector<Node> nodes);

  const Box& root() const { return root_; }
  std::size_t dims() const { return root_.dims(); }
  std::span<const Node> nodes() const { return nodes_; }

  // Leaf ids in tree order; the tiles of the tiling.
  std::span<const std::size_t> leaves() const { return leaves_; }
  std::size_t size() const { return leaves_.size(); }
  const Tile& tile(std::size_t id) const { return nodes_.at(id).tile; }
  int max_depth() const;

  // Leaf owning x. Shared faces belong to the tile with larger coordinates,
  // except on the root's upper faces, which stay closed.
  std::size_t locate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Leaf owning x in the tiling extended by `a`: points outside the root but
  // inside the extended root belong to the tile whose contact face was pushed
  // out to cover them.
  std::size_t locate_extended(const Eigen::Ref<const Eigen::VectorXd>& x, double a,
                              const ExtensionSpec& spec) const;

  bool operator==(const Tiling&) const = default;

  friend Tiling bisect(const Tiling& tiling, std::span<const std::size_t> bad, int max_depth);

 private:
  void split_leaf(std::size_t id);

  Box root_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> leaves_;
};

// Replaces each bad tile by its 2^n midpoint children. Throws
// RefinementFailure (carrying the offending ids) if a bad tile is already at
// depth `max_depth`.
Tiling bisect(const Tiling& tiling, std::span<const std::size_t> bad, int max_depth);

// Root-contact faces pushed out by a: lower faces always, upper faces only in
// symmetric mode. Interior faces are unchanged.
Box extend_tile(const Tile& tile, double a, const ExtensionSpec& spec);
ParamBox extend_tile_param(const Tile& tile, const ExtensionSpec& spec);

// R + (a, a): every face of the box treated as a contact face.
Box extend_box(const Box& box, double a, const ExtensionSpec& spec);
// R + a + margin as a function of a: the faces `spec` extends are pushed out
// by a + margin.
ParamBox extend_box_param(const Box& box, const ExtensionSpec& spec, double margin = 0.0);
// Box widened by `margin` on both faces.
Box widen(const Box& box, double margin);

}  // namespace switchsynth
