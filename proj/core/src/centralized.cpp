#include "switchsynth/centralized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "certify.hpp"
#include "parallel.hpp"
#include "switchsynth/errors.hpp"

namespace switchsynth {

void SynthesisOptions::validate() const {
  if (max_pattern_length < 1) throw ConfigurationError("synthesis.K must be >= 1");
  if (max_depth < 0) throw ConfigurationError("synthesis.D must be >= 0");
  if (!(eta > 0.0)) throw ConfigurationError("synthesis.eta must be > 0");
  if (max_rings < 1) throw ConfigurationError("synthesis.max_rings must be >= 1");
  if (!(slack >= 0.0)) throw ConfigurationError("synthesis.slack must be >= 0");
  if (!(max_extension > 0.0) || !std::isfinite(max_extension)) {
    throw ConfigurationError("synthesis.max_extension must be positive and finite");
  }
}

const TileControl& Ring::control(std::size_t tile) const {
  auto it = std::lower_bound(table.begin(), table.end(), tile,
                             [](const TileControl& c, std::size_t id) { return c.tile < id; });
  if (it == table.end() || it->tile != tile) {
    throw ModelError("ring " + std::to_string(index) + ": no control for tile " +
                     std::to_string(tile));
  }
  return *it;
}

PatternLibrary::PatternLibrary(const SwitchedSystem& sys, int max_length)
    : max_length_(max_length) {
  if (max_length < 1) throw ConfigurationError("pattern length bound must be >= 1");
  const ModeSet& modes = sys.modes();
  std::vector<std::size_t> alphabet;
  for (std::size_t j = 0; j < modes.joint_size(); ++j) {
    if (modes.joint_allowed(j)) alphabet.push_back(j);
  }
  const AffineMap identity = AffineMap::identity(sys.dimension());

  std::size_t level_begin = 0;
  for (int len = 1; len <= max_length; ++len) {
    const std::size_t level_end = entries_.size();
    const std::size_t parents = len == 1 ? 1 : level_end - level_begin;
    for (std::size_t p = 0; p < parents; ++p) {
      const std::ptrdiff_t parent = len == 1 ? -1 : static_cast<std::ptrdiff_t>(level_begin + p);
      for (std::size_t j : alphabet) {
        const auto [m1, m2] = modes.split_joint(j);
        Entry e;
        if (parent >= 0) e.pattern = entries_[static_cast<std::size_t>(parent)].pattern;
        e.pattern.first.push_back(m1);
        e.pattern.second.push_back(m2);
        const AffineMap& inner =
            parent >= 0 ? entries_[static_cast<std::size_t>(parent)].map : identity;
        e.map = compose(sys.dynamics(j), inner);
        e.parent = parent;
        entries_.push_back(std::move(e));
      }
    }
    level_begin = level_end;
  }
}

std::optional<PatternChoice> best_pattern_for_tile(const PatternLibrary& library, const Tile& tile,
                                                   const Box& target, const ExtensionSpec& spec,
                                                   double slack,
                                                   std::optional<double> prefix_margin) {
  const auto entries = library.entries();
  std::optional<PatternChoice> best;

  if (prefix_margin) {
    // Stability: everything is evaluated at a = 0; the first admissible
    // pattern wins.
    const Box widened = extend_box(target, *prefix_margin, spec);
    std::vector<char> prefix_ok(entries.size(), 0);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto& entry = entries[e];
      if (entry.parent >= 0 && !prefix_ok[static_cast<std::size_t>(entry.parent)]) continue;
      const Box image = image_bounds(entry.map, tile.box);
      if (box_inclusion(image, target, slack)) return PatternChoice{entry.pattern, 0.0};
      prefix_ok[e] = box_inclusion(image, widened, slack);
    }
    return std::nullopt;
  }

  const ParamBox extended = extend_tile_param(tile, spec);
  for (const auto& entry : entries) {
    const auto a = max_param_inclusion(image_bounds_param(entry.map, extended), target, slack);
    if (!a) continue;
    // Entries are ordered by length then lexicographically, so only a strict
    // improvement replaces the incumbent.
    if (!best || *a > best->a) best = PatternChoice{entry.pattern, *a};
  }
  return best;
}

std::optional<PatternChoice> best_pattern_for_tile(const SwitchedSystem& sys, const Tile& tile,
                                                   const Box& target, int max_length,
                                                   const ExtensionSpec& spec) {
  return best_pattern_for_tile(PatternLibrary(sys, max_length), tile, target, spec);
}

namespace {

// Generate-and-test: refine until every tile has a pattern. Results for tiles
// that survive a refinement round are reused.
std::pair<Tiling, std::map<std::size_t, PatternChoice>> refine(
    const PatternLibrary& library, const Box& base, const SynthesisOptions& options,
    std::optional<double> prefix_margin) {
  Tiling tiling = options.strategy == TilingStrategy::uniform
                      ? Tiling::uniform(base, options.max_depth)
                      : Tiling::trivial(base);
  std::map<std::size_t, PatternChoice> found;

  for (;;) {
    std::vector<std::size_t> pending;
    for (std::size_t id : tiling.leaves()) {
      if (!found.contains(id)) pending.push_back(id);
    }
    std::vector<std::optional<PatternChoice>> results(pending.size());
    detail::parallel_for(pending.size(), options.threads, [&](std::size_t i) {
      results[i] = best_pattern_for_tile(library, tiling.tile(pending[i]), base,
                                         options.extension, options.slack, prefix_margin);
    });

    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (results[i]) {
        found.emplace(pending[i], std::move(*results[i]));
      } else {
        bad.push_back(pending[i]);
      }
    }
    if (bad.empty()) break;
    if (options.strategy == TilingStrategy::uniform) {
      throw RefinementFailure(std::to_string(bad.size()) + " tile(s) of the uniform tiling have no pattern",
                              std::move(bad), options.max_depth);
    }
    tiling = bisect(tiling, bad, options.max_depth);
  }
  return {std::move(tiling), std::move(found)};
}

bool certificate_holds(const AffineMap& map, const Tile& tile, double a, const Box& base,
                       const ExtensionSpec& spec, double slack) {
  return box_inclusion(image_bounds(map, extend_tile(tile, a, spec)), base, slack);
}

}  // namespace

Ring macro_step_synthesis(const SwitchedSystem& sys, const Box& base,
                          const SynthesisOptions& options, int index) {
  options.validate();
  if (base.dims() != static_cast<std::size_t>(sys.dimension())) {
    throw ConfigurationError("R: expected " + std::to_string(sys.dimension()) + " intervals");
  }
  const PatternLibrary library(sys, options.max_pattern_length);
  auto [tiling, found] = refine(library, base, options, std::nullopt);

  double a = std::numeric_limits<double>::infinity();
  for (const auto& [id, choice] : found) a = std::min(a, choice.a);
  if (!std::isfinite(a)) a = options.max_extension;

  std::vector<AffineMap> maps;
  for (std::size_t id : tiling.leaves()) maps.push_back(pattern_map(sys, found.at(id).pattern));
  a = detail::certify_extension(a, [&](double trial) {
    for (std::size_t i = 0; i < maps.size(); ++i) {
      if (!certificate_holds(maps[i], tiling.tile(tiling.leaves()[i]), trial, base,
                             options.extension, options.slack)) {
        return false;
      }
    }
    return true;
  });

  Ring ring;
  ring.index = index;
  ring.base = base;
  ring.extended = extend_box(base, a, options.extension);
  ring.a = a;
  ring.max_pattern_length = options.max_pattern_length;
  ring.extension = options.extension;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const std::size_t id = tiling.leaves()[i];
    const Tile& tile = tiling.tile(id);
    ring.table.push_back(TileControl{id, found.at(id).pattern, found.at(id).a,
                                     image_bounds(maps[i], extend_tile(tile, a, options.extension))});
  }
  ring.tiling = std::move(tiling);
  return ring;
}

Ring stability_synthesis(const SwitchedSystem& sys, const Box& R, const SynthesisOptions& options,
                         double epsilon) {
  options.validate();
  if (!(epsilon >= 0.0)) throw ConfigurationError("synthesis.epsilon must be >= 0");
  if (R.dims() != static_cast<std::size_t>(sys.dimension())) {
    throw ConfigurationError("R: expected " + std::to_string(sys.dimension()) + " intervals");
  }
  const PatternLibrary library(sys, options.max_pattern_length);
  auto [tiling, found] = refine(library, R, options, epsilon);

  Ring ring;
  ring.index = 0;
  ring.base = R;
  ring.extended = R;
  ring.a = 0.0;
  ring.max_pattern_length = options.max_pattern_length;
  ring.epsilon = epsilon;
  ring.extension = options.extension;
  for (std::size_t id : tiling.leaves()) {
    const Pattern& p = found.at(id).pattern;
    ring.table.push_back(TileControl{id, p, 0.0, image_bounds(pattern_map(sys, p), tiling.tile(id).box)});
  }
  ring.tiling = std::move(tiling);
  return ring;
}

IterationResult iterate_synthesis(const SwitchedSystem& sys, const Box& R,
                                  const SynthesisOptions& options) {
  options.validate();
  IterationResult result;
  Box base = R;
  for (int i = 1; i <= options.max_rings; ++i) {
    Ring ring;
    try {
      ring = macro_step_synthesis(sys, base, options, i);
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
    base = ring.extended;
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

double total_extension(std::span<const Ring> rings) {
  double sum = 0.0;
  for (const auto& r : rings) sum += r.a;
  return sum;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_rings:
      return "max_rings";
    case StopReason::below_eta:
      return "below_eta";
    case StopReason::refinement_failure:
      return "refinement_failure";
    case StopReason::no_progress:
      return "no_progress";
  }
  return "unknown";
}

}  // namespace switchsynth
