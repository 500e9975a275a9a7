#include "switchsynth/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "certify.hpp"
#include "parallel.hpp"
#include "switchsynth/errors.hpp"

namespace switchsynth {

namespace {

std::string component_name(Component c) { return c == Component::first ? "component 1" : "component 2"; }

void check_pattern(const SwitchedSystem& sys, Component c, const ModeSequence& pattern) {
  if (pattern.empty()) throw ConfigurationError("local pattern must not be empty");
  for (int m : pattern) {
    if (m < 0 || static_cast<std::size_t>(m) >= sys.modes().size(c)) {
      throw ConfigurationError(component_name(c) + ": mode index " + std::to_string(m) +
                               " out of range");
    }
  }
}

// One recursion step on flat storage. `input` holds all n coordinates; only
// the own block changes between steps. The arithmetic mirrors
// image_bounds_param followed by a coordinate-wise hull over the maps.
void step_into(std::span<const AffineMap> maps, std::span<const ParamInterval> input,
               std::span<ParamInterval> out) {
  for (std::size_t mi = 0; mi < maps.size(); ++mi) {
    const AffineMap& map = maps[mi];
    for (Eigen::Index j = 0; j < map.rows(); ++j) {
      ParamInterval r{map.offset[j], 0.0, map.offset[j], 0.0};
      for (Eigen::Index k = 0; k < map.cols(); ++k) {
        const double m = map.matrix(j, k);
        const ParamInterval& x = input[static_cast<std::size_t>(k)];
        if (m >= 0.0) {
          r.lo0 += m * x.lo0;
          r.lo1 += m * x.lo1;
          r.hi0 += m * x.hi0;
          r.hi1 += m * x.hi1;
        } else {
          r.lo0 += m * x.hi0;
          r.lo1 += m * x.hi1;
          r.hi0 += m * x.lo0;
          r.hi1 += m * x.lo1;
        }
      }
      ParamInterval& o = out[static_cast<std::size_t>(j)];
      if (mi == 0) {
        o = r;
      } else {
        o.lo0 = std::min(o.lo0, r.lo0);
        o.lo1 = std::min(o.lo1, r.lo1);
        o.hi0 = std::max(o.hi0, r.hi0);
        o.hi1 = std::max(o.hi1, r.hi1);
      }
    }
  }
}

void require(ExtensionBound& bound, std::span<const ParamInterval> image,
             std::span<const ParamInterval> target, double slack) {
  for (std::size_t j = 0; j < image.size(); ++j) {
    bound.require_nonnegative(image[j].lo0 - target[j].lo0 + slack, image[j].lo1 - target[j].lo1);
    bound.require_nonnegative(target[j].hi0 - image[j].hi0 + slack, target[j].hi1 - image[j].hi1);
  }
}

ParamBox other_box_param(const Box& other_base, double epsilon, const ExtensionSpec& spec) {
  return extend_box_param(other_base, spec, epsilon);
}

}  // namespace

ApproxSequence approx_sequence(const SwitchedSystem& sys, Component component, const Tile& tile,
                               const ModeSequence& pattern, const Box& base,
                               const Box& other_base, double epsilon, const ExtensionSpec& spec) {
  check_pattern(sys, component, pattern);
  if (!(epsilon >= 0.0)) throw ConfigurationError("epsilon must be >= 0");
  if (tile.box.dims() != static_cast<std::size_t>(sys.dims(component)) ||
      base.dims() != tile.box.dims() ||
      other_base.dims() != static_cast<std::size_t>(sys.dims(other(component)))) {
    throw ConfigurationError("approx_sequence: box dimensions do not match the component split");
  }
  const ParamBox other_param = other_box_param(other_base, epsilon, spec);

  ApproxSequence seq;
  seq.component = component;
  seq.tile = tile.id;
  seq.pattern = pattern;
  seq.base = base;
  seq.epsilon = epsilon;
  seq.extension = spec;
  seq.steps.push_back(extend_tile_param(tile, spec));
  for (int u : pattern) {
    const ParamBox& x = seq.steps.back();
    const ParamBox input =
        component == Component::first ? x.concat(other_param) : other_param.concat(x);
    std::optional<ParamBox> hull;
    for (const AffineMap& map : sys.component_maps(component, u)) {
      ParamBox img = image_bounds_param(map, input);
      if (!hull) {
        hull = std::move(img);
        continue;
      }
      for (std::size_t j = 0; j < img.dims(); ++j) {
        ParamInterval& h = (*hull)[j];
        h.lo0 = std::min(h.lo0, img[j].lo0);
        h.lo1 = std::min(h.lo1, img[j].lo1);
        h.hi0 = std::max(h.hi0, img[j].hi0);
        h.hi1 = std::max(h.hi1, img[j].hi1);
      }
    }
    seq.steps.push_back(std::move(*hull));
  }
  return seq;
}

bool prop_check(const ApproxSequence& seq, double a, double slack) {
  if (!(a >= 0.0)) throw ConfigurationError("prop_check requires a >= 0");
  const std::size_t len = seq.steps.size() - 1;
  const Box margin = extend_box_param(seq.base, seq.extension, seq.epsilon).at(a);
  for (std::size_t k = 1; k < len; ++k) {
    if (!box_inclusion(seq.steps[k].at(a), margin, slack)) return false;
  }
  return box_inclusion(seq.steps[len].at(a), seq.base, slack);
}

std::optional<double> max_extension_distributed(const ApproxSequence& seq, double slack) {
  const std::size_t len = seq.steps.size() - 1;
  const ParamBox margin = extend_box_param(seq.base, seq.extension, seq.epsilon);
  ExtensionBound bound;
  for (std::size_t k = 1; k < len; ++k) bound.require_inclusion(seq.steps[k], margin, slack);
  bound.require_inclusion(seq.steps[len], ParamBox::constant(seq.base), slack);
  return bound.max();
}

const LocalControl& ComponentRing::control(std::size_t tile) const {
  auto it = std::lower_bound(table.begin(), table.end(), tile,
                             [](const LocalControl& c, std::size_t id) { return c.tile < id; });
  if (it == table.end() || it->tile != tile) {
    throw ModelError("no local control for tile " + std::to_string(tile));
  }
  return *it;
}

Box DistRing::base() const { return components[0].base.concat(components[1].base); }
Box DistRing::extended() const { return components[0].extended.concat(components[1].extended); }

std::vector<std::optional<LocalChoice>> best_local_patterns(
    const SwitchedSystem& sys, Component component, const Tile& tile, const Box& base,
    const Box& other_base, double epsilon, int max_length, const ExtensionSpec& spec,
    double slack, bool at_zero) {
  if (max_length < 1) throw ConfigurationError("pattern length bound must be >= 1");
  const std::size_t n = static_cast<std::size_t>(sys.dimension());
  const std::size_t nc = static_cast<std::size_t>(sys.dims(component));
  const std::size_t own = static_cast<std::size_t>(sys.row_offset(component));
  const std::size_t other_off = static_cast<std::size_t>(sys.row_offset(other(component)));
  const std::size_t modes = sys.modes().size(component);

  const ParamBox other_param = other_box_param(other_base, epsilon, spec);
  const ParamBox margin = extend_box_param(base, spec, epsilon);
  const ParamBox target = ParamBox::constant(base);
  const ParamBox start = extend_tile_param(tile, spec);

  // inputs[d] is the full-state input of step d + 1.
  const auto depth_count = static_cast<std::size_t>(max_length);
  std::vector<std::vector<ParamInterval>> inputs(depth_count, std::vector<ParamInterval>(n));
  for (auto& in : inputs) {
    for (std::size_t j = 0; j < other_param.dims(); ++j) in[other_off + j] = other_param[j];
  }
  for (std::size_t j = 0; j < nc; ++j) inputs[0][own + j] = start[j];

  std::vector<std::optional<LocalChoice>> best(depth_count);
  std::vector<ParamInterval> next(nc);
  ModeSequence path;
  path.reserve(depth_count);

  // Iterative DFS over mode sequences; prefix bounds carry the intermediate
  // step constraints accumulated along the path.
  std::vector<ExtensionBound> prefix(depth_count + 1);
  std::vector<int> cursor(depth_count, 0);
  std::size_t depth = 0;
  while (true) {
    if (cursor[depth] >= static_cast<int>(modes)) {
      if (depth == 0) break;
      cursor[depth] = 0;
      --depth;
      path.pop_back();
      continue;
    }
    const int u = cursor[depth]++;
    step_into(sys.component_maps(component, u), inputs[depth], next);

    ExtensionBound final_bound = prefix[depth];
    require(final_bound, next, target.intervals(), slack);
    if (const auto a = final_bound.max()) {
      const double value = at_zero ? 0.0 : *a;
      auto& slot = best[depth];
      if (!slot || value > slot->a) {
        ModeSequence p = path;
        p.push_back(u);
        slot = LocalChoice{std::move(p), value};
      }
    }
    if (depth + 1 < depth_count) {
      ExtensionBound extended = prefix[depth];
      require(extended, next, margin.intervals(), slack);
      if (!extended.feasible()) continue;
      prefix[depth + 1] = extended;
      for (std::size_t j = 0; j < nc; ++j) inputs[depth + 1][own + j] = next[j];
      path.push_back(u);
      ++depth;
    }
  }
  return best;
}

namespace {

struct ComponentResult {
  Tiling tiling;
  int k = 1;
  double a = 0.0;
  std::map<std::size_t, LocalChoice> choice;
};

ComponentResult search_component(const SwitchedSystem& sys, Component c, const Box& base,
                                 const Box& other_base, double epsilon,
                                 const SynthesisOptions& options, bool at_zero) {
  const int K = options.max_pattern_length;
  Tiling tiling = options.strategy == TilingStrategy::uniform
                      ? Tiling::uniform(base, options.max_depth)
                      : Tiling::trivial(base);
  std::map<std::size_t, std::vector<std::optional<LocalChoice>>> cache;

  for (;;) {
    std::vector<std::size_t> pending;
    for (std::size_t id : tiling.leaves()) {
      if (!cache.contains(id)) pending.push_back(id);
    }
    std::vector<std::vector<std::optional<LocalChoice>>> results(pending.size());
    detail::parallel_for(pending.size(), options.threads, [&](std::size_t i) {
      results[i] = best_local_patterns(sys, c, tiling.tile(pending[i]), base, other_base, epsilon,
                                       K, options.extension, options.slack, at_zero);
    });
    for (std::size_t i = 0; i < pending.size(); ++i) cache.emplace(pending[i], std::move(results[i]));

    // Length selection: all tiles good, largest common extension, then the
    // shorter length.
    std::optional<int> best_k;
    double best_a = 0.0;
    std::vector<std::size_t> bad_count(static_cast<std::size_t>(K), 0);
    for (int k = 1; k <= K; ++k) {
      double a = std::numeric_limits<double>::infinity();
      for (std::size_t id : tiling.leaves()) {
        const auto& slot = cache.at(id)[static_cast<std::size_t>(k - 1)];
        if (!slot) {
          ++bad_count[static_cast<std::size_t>(k - 1)];
        } else {
          a = std::min(a, slot->a);
        }
      }
      if (bad_count[static_cast<std::size_t>(k - 1)] == 0 && (!best_k || a > best_a)) {
        best_k = k;
        best_a = a;
      }
    }
    if (best_k) {
      ComponentResult out;
      out.k = *best_k;
      out.a = best_a;
      for (std::size_t id : tiling.leaves()) {
        out.choice.emplace(id, *cache.at(id)[static_cast<std::size_t>(*best_k - 1)]);
      }
      out.tiling = std::move(tiling);
      return out;
    }

    std::vector<std::size_t> bad;
    for (std::size_t id : tiling.leaves()) {
      const auto& slots = cache.at(id);
      if (std::none_of(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); })) {
        bad.push_back(id);
      }
    }
    bool no_common_length = false;
    if (bad.empty()) {
      // Every tile has some length but none is shared: refine the tiles
      // blocking the length that is closest to working.
      no_common_length = true;
      const auto it = std::min_element(bad_count.begin(), bad_count.end());
      const std::size_t k_index = static_cast<std::size_t>(it - bad_count.begin());
      for (std::size_t id : tiling.leaves()) {
        if (!cache.at(id)[k_index]) bad.push_back(id);
      }
    }
    const std::string what = component_name(c) + (no_common_length
                                                       ? ": no pattern length shared by all tiles"
                                                       : ": tiles without any admissible pattern");
    if (options.strategy == TilingStrategy::uniform) {
      throw RefinementFailure(what + " in the uniform tiling", std::move(bad), options.max_depth);
    }
    try {
      tiling = bisect(tiling, bad, options.max_depth);
    } catch (const RefinementFailure& e) {
      throw RefinementFailure(what + " (" + e.what() + ")", e.bad_tiles(), e.depth());
    }
  }
}

DistRing build_ring(const SwitchedSystem& sys, const Box& R1, const Box& R2,
                    const SynthesisOptions& options, double epsilon, int index, bool stability) {
  options.validate();
  check_distributable(sys);
  if (!(epsilon >= 0.0)) throw ConfigurationError("synthesis.epsilon must be >= 0");
  if (R1.dims() != static_cast<std::size_t>(sys.dims(Component::first)) ||
      R2.dims() != static_cast<std::size_t>(sys.dims(Component::second))) {
    throw ConfigurationError("R: dimensions do not match the component split");
  }
  const std::array<const Box*, 2> bases{&R1, &R2};
  std::array<ComponentResult, 2> results;
  for (Component c : {Component::first, Component::second}) {
    results[index_of(c)] = search_component(sys, c, *bases[index_of(c)],
                                            *bases[index_of(other(c))], epsilon, options,
                                            stability);
  }

  double a = 0.0;
  if (!stability) {
    a = std::min(results[0].a, results[1].a);
    if (!std::isfinite(a)) a = options.max_extension;
    a = detail::certify_extension(a, [&](double trial) {
      for (Component c : {Component::first, Component::second}) {
        const auto& r = results[index_of(c)];
        for (std::size_t id : r.tiling.leaves()) {
          const ApproxSequence seq =
              approx_sequence(sys, c, r.tiling.tile(id), r.choice.at(id).pattern,
                              *bases[index_of(c)], *bases[index_of(other(c))], epsilon,
                              options.extension);
          if (!prop_check(seq, trial, options.slack)) return false;
        }
      }
      return true;
    });
  }

  DistRing ring;
  ring.index = index;
  ring.a = a;
  ring.epsilon = epsilon;
  ring.stability = stability;
  ring.max_pattern_length = options.max_pattern_length;
  ring.extension = options.extension;
  ring.ell = std::lcm(results[0].k, results[1].k);
  for (Component c : {Component::first, Component::second}) {
    auto& r = results[index_of(c)];
    ComponentRing& cr = ring.components[index_of(c)];
    cr.base = *bases[index_of(c)];
    cr.extended = extend_box(cr.base, a, options.extension);
    cr.k = r.k;
    cr.alpha = ring.ell / r.k;
    for (std::size_t id : r.tiling.leaves()) {
      auto& choice = r.choice.at(id);
      cr.table.push_back(LocalControl{id, std::move(choice.pattern), choice.a});
    }
    cr.tiling = std::move(r.tiling);
  }
  return ring;
}

}  // namespace

void check_distributable(const SwitchedSystem& sys) {
  if (sys.dims(Component::first) < 1 || sys.dims(Component::second) < 1) {
    throw ConfigurationError("split: distributed synthesis needs two non-empty components");
  }
  const ModeSet& modes = sys.modes();
  if (const auto limit = modes.constraints().global_max_active) {
    int worst = 0;
    for (Component c : {Component::first, Component::second}) {
      int m = 0;
      for (std::size_t i = 0; i < modes.size(c); ++i) {
        m = std::max(m, modes.active_count(c, static_cast<int>(i)));
      }
      worst += m;
    }
    if (worst > *limit) {
      throw ConfigurationError(
          "constraints.global_max_active: components choose modes independently, so the "
          "limit must be at least the sum of the per-component maxima (" +
          std::to_string(worst) + ")");
    }
  }
}

DistRing macro_step_synthesis_distributed(const SwitchedSystem& sys, const Box& R1,
                                          const Box& R2, const SynthesisOptions& options,
                                          double epsilon, int index) {
  return build_ring(sys, R1, R2, options, epsilon, index, false);
}

DistRing stability_synthesis_distributed(const SwitchedSystem& sys, const Box& R1, const Box& R2,
                                         const SynthesisOptions& options, double epsilon) {
  return build_ring(sys, R1, R2, options, epsilon, 0, true);
}

DistIterationResult iterate_synthesis_distributed(const SwitchedSystem& sys, const Box& R1,
                                                  const Box& R2, const SynthesisOptions& options,
                                                  double epsilon) {
  options.validate();
  DistIterationResult result;
  Box b1 = R1;
  Box b2 = R2;
  for (int i = 1; i <= options.max_rings; ++i) {
    DistRing ring;
    try {
      ring = macro_step_synthesis_distributed(sys, b1, b2, options, epsilon, i);
    } catch (const RefinementFailure& e) {
      result.reason = StopReason::refinement_failure;
      result.detail = "ring " + std::to_string(i) + ": " + e.what();
      return result;
    }
    if (!(ring.a > 0.0)) {
      result.reason = StopReason::no_progress;
      result.detail = "ring " + std::to_string(i) + " has zero extension";
      return result;
    }
    const double a = ring.a;
    b1 = ring.components[0].extended;
    b2 = ring.components[1].extended;
    result.rings.push_back(std::move(ring));
    if (a < options.eta) {
      result.reason = StopReason::below_eta;
      result.detail = "ring " + std::to_string(i) + " extension below eta";
      return result;
    }
  }
  result.reason = StopReason::max_rings;
  result.detail = "reached max_rings";
  return result;
}

double total_extension(std::span<const DistRing> rings) {
  double sum = 0.0;
  for (const auto& r : rings) sum += r.a;
  return sum;
}

}  // namespace switchsynth
