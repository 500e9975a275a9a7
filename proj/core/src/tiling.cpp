#include "switchsynth/tiling.hpp"

#include <algorithm>
#include <string>

#include "switchsynth/errors.hpp"

namespace switchsynth {

namespace {


std::size_t child_count(std::size_t dims) {
  if (dims >= 20) throw ConfigurationError("bisection of more than 19 dimensions is not supported");
  return std::size_t{1} << dims;
}

}  // namespace

Tiling Tiling::trivial(const Box& root) {
  if (root.empty()) throw ConfigurationError("tiling root must have at least one dimension");
  Tiling t;
  t.root_ = root;
  Node node;
  node.tile = Tile{0, root, 0, std::vector<FaceContact>(root.dims(), FaceContact{true, true})};
  t.nodes_.push_back(std::move(node));
  t.leaves_.push_back(0);
  return t;
}

Tiling Tiling::uniform(const Box& root, int depth) {
  Tiling t = trivial(root);
  for (int d = 0; d < depth; ++d) {
    const std::vector<std::size_t> all(t.leaves_.begin(), t.leaves_.end());
    t = bisect(t, all, depth);
  }
  return t;
}

void Tiling::split_leaf(std::size_t id) {
  const std::size_t n = dims();
  const std::size_t count = child_count(n);
  const std::size_t first = nodes_.size();
  nodes_[id].leaf = false;
  nodes_[id].first_child = first;
  const Tile parent = nodes_[id].tile;

  for (std::size_t c = 0; c < count; ++c) {
    std::vector<Interval> iv(n);
    std::vector<FaceContact> contact(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Interval& p = parent.box[j];
      const double mid = p.lo + 0.5 * (p.hi - p.lo);
      const bool upper = (c >> j) & 1U;
      iv[j] = upper ? Interval{mid, p.hi} : Interval{p.lo, mid};
      contact[j] = upper ? FaceContact{false, parent.contact[j].upper}
                         : FaceContact{parent.contact[j].lower, false};
    }
    Node child;
    child.tile = Tile{first + c, Box(std::move(iv)), parent.depth + 1, std::move(contact)};
    child.parent = static_cast<std::ptrdiff_t>(id);
    nodes_.push_back(std::move(child));
  }
}

Tiling bisect(const Tiling& tiling, std::span<const std::size_t> bad, int max_depth) {
  std::vector<std::size_t> too_deep;
  for (std::size_t id : bad) {
    if (id >= tiling.nodes_.size() || !tiling.nodes_[id].leaf) {
      throw ConfigurationError("bisect: id " + std::to_string(id) + " is not a tile");
    }
    if (tiling.nodes_[id].tile.depth >= max_depth) too_deep.push_back(id);
  }
  if (!too_deep.empty()) {
    const std::string what = std::to_string(too_deep.size()) +
                             " bad tile(s) already at the maximal bisection depth " +
                             std::to_string(max_depth);
    throw RefinementFailure(what, std::move(too_deep), max_depth);
  }

  Tiling out = tiling;
  std::vector<std::size_t> sorted(bad.begin(), bad.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t id : sorted) out.split_leaf(id);

  out.leaves_.clear();
  for (const auto& node : out.nodes_) {
    if (node.leaf) out.leaves_.push_back(node.tile.id);
  }
  return out;
}

Tiling Tiling::from_nodes(const Box& root, std::vector<Node> nodes) {
  if (nodes.empty() || !(nodes[0].tile.box == root)) {
    throw ConfigurationError("tiling: first node must equal the root box");
  }
  const std::size_t count = child_count(root.dims());
  Tiling t;
  t.root_ = root;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    if (node.tile.id != i || node.tile.box.dims() != root.dims() ||
        node.tile.contact.size() != root.dims()) {
      throw ConfigurationError("tiling: malformed node " + std::to_string(i));
    }
    if (!node.leaf) {
      if (node.first_child <= i || node.first_child + count > nodes.size()) {
        throw ConfigurationError("tiling: bad child range at node " + std::to_string(i));
      }
      for (std::size_t c = 0; c < count; ++c) {
        if (nodes[node.first_child + c].parent != static_cast<std::ptrdiff_t>(i)) {
          throw ConfigurationError("tiling: parent link mismatch at node " + std::to_string(i));
        }
      }
    }
  }
  t.nodes_ = std::move(nodes);
  for (const auto& node : t.nodes_) {
    if (node.leaf) t.leaves_.push_back(node.tile.id);
  }
  return t;
}

int Tiling::max_depth() const {
  int d = 0;
  for (std::size_t id : leaves_) d = std::max(d, nodes_[id].tile.depth);
  return d;
}

std::size_t Tiling::locate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<std::size_t>(x.size()) != dims()) {
    throw ConfigurationError("locate: point dimension mismatch");
  }
  if (!root_.contains(x)) throw OutOfDomain("point lies outside the tiled region");
  std::size_t id = 0;
  while (!nodes_[id].leaf) {
    const std::size_t first = nodes_[id].first_child;
    const Box& lower_child = nodes_[first].tile.box;
    std::size_t c = 0;
    for (std::size_t j = 0; j < dims(); ++j) {
      // The lower child's upper bound is the split coordinate.
      if (x[static_cast<Eigen::Index>(j)] >= lower_child[j].hi) c |= std::size_t{1} << j;
    }
    id = first + c;
  }
  return id;
}

std::size_t Tiling::locate_extended(const Eigen::Ref<const Eigen::VectorXd>& x, double a,
                                    const ExtensionSpec& spec) const {
  if (!extend_box(root_, a, spec).contains(x)) {
    throw OutOfDomain("point lies outside the extended tiled region");
  }
  Eigen::VectorXd clamped = x;
  for (std::size_t j = 0; j < dims(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    clamped[jj] = std::clamp(clamped[jj], root_[j].lo, root_[j].hi);
  }
  return locate(clamped);
}

Box extend_tile(const Tile& tile, double a, const ExtensionSpec& spec) {
  return extend_tile_param(tile, spec).at(a);
}

ParamBox extend_tile_param(const Tile& tile, const ExtensionSpec& spec) {
  std::vector<ParamInterval> out(tile.box.dims());
  for (std::size_t j = 0; j < tile.box.dims(); ++j) {
    out[j] = ParamInterval::constant(tile.box[j]);
    if (tile.contact[j].lower) out[j].lo1 = -1.0;
    if (tile.contact[j].upper && spec.mode == ExtensionMode::symmetric) out[j].hi1 = 1.0;
  }
  return ParamBox(std::move(out));
}

Box extend_box(const Box& box, double a, const ExtensionSpec& spec) {
  return extend_box_param(box, spec).at(a);
}

ParamBox extend_box_param(const Box& box, const ExtensionSpec& spec, double margin) {
  std::vector<ParamInterval> out(box.dims());
  for (std::size_t j = 0; j < box.dims(); ++j) {
    const bool sym = spec.mode == ExtensionMode::symmetric;
    out[j] = {box[j].lo - margin, -1.0, sym ? box[j].hi + margin : box[j].hi, sym ? 1.0 : 0.0};
  }
  return ParamBox(std::move(out));
}

Box widen(const Box& box, double margin) {
  std::vector<Interval> out(box.dims());
  for (std::size_t j = 0; j < box.dims(); ++j) out[j] = {box[j].lo - margin, box[j].hi + margin};
  return Box(std::move(out));
}

}  // namespace switchsynth
