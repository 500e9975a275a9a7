#include "switchsynth/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "switchsynth/errors.hpp"

namespace switchsynth {

Schedule::Schedule(std::vector<std::pair<long, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i].second)) throw ConfigurationError("schedule: non-finite value");
    if (i > 0 && breakpoints_[i].first <= breakpoints_[i - 1].first) {
      throw ConfigurationError("schedule: steps must be strictly increasing");
    }
  }
}

Schedule Schedule::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("schedule: cannot open " + path.string());
  std::string line;
  std::vector<std::pair<long, double>> points;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "step,w") {
        throw ConfigurationError("schedule " + path.string() + ": expected header 'step,w'");
      }
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const long step = std::stol(line.substr(0, comma), &used);
      const double w = std::stod(line.substr(comma + 1));
      points.emplace_back(step, w);
    } catch (const std::exception&) {
      throw ConfigurationError("schedule " + path.string() + " line " + std::to_string(line_no) +
                               ": expected '<step>,<w>'");
    }
  }
  if (!header) throw ConfigurationError("schedule " + path.string() + ": empty file");
  return Schedule(std::move(points));
}

double Schedule::at(long step) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), step,
                             [](long s, const auto& bp) { return s < bp.first; });
  if (it == breakpoints_.begin()) return 0.0;
  return std::prev(it)->second;
}

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::captured:
      return "captured";
    case Outcome::escaped:
      return "escaped";
    case Outcome::not_captured:
      return "not_captured";
  }
  return "unknown";
}

namespace {

class Recorder {
 public:
  Recorder(const ControllerArtifact& art, const Schedule& schedule, Trajectory& out)
      : art_(art), schedule_(schedule), out_(out) {}

  void apply(Eigen::VectorXd& x, long& t, std::size_t joint, int ring, int phase) {
    out_.points.push_back(TrajectoryPoint{t, x, joint, ring, phase});
    x = art_.system.step(x, joint, schedule_.at(t));
    ++t;
    mark(x, t);
  }

  void mark(const Eigen::VectorXd& x, long t) {
    if (!out_.capture_step && art_.R.contains(x)) out_.capture_step = t;
  }

  void escape(const std::string& why) {
    out_.outcome = Outcome::escaped;
    out_.detail = why;
  }

 private:
  const ControllerArtifact& art_;
  const Schedule& schedule_;
  Trajectory& out_;
};

void simulate_centralized(const ControllerArtifact& art, Eigen::VectorXd x, long max_steps,
                          Recorder& rec, Trajectory& out) {
  const ModeSet& modes = art.system.modes();
  long t = 0;
  while (t < max_steps) {
    const Ring* ring = nullptr;
    if (art.stability && art.R.contains(x)) {
      ring = &*art.stability;
    } else {
      for (const Ring& r : art.rings) {
        if (r.extended.contains(x)) {
          ring = &r;
          break;
        }
      }
    }
    if (!ring) {
      rec.escape("state left the capture set at step " + std::to_string(t));
      break;
    }
    std::size_t tile = 0;
    try {
      tile = ring->tiling.locate_extended(x, ring->a, ring->extension);
    } catch (const OutOfDomain& e) {
      rec.escape(e.what());
      break;
    }
    const Pattern& p = ring->control(tile).pattern;
    for (std::size_t k = 0; k < p.length() && t < max_steps; ++k) {
      rec.apply(x, t, modes.joint_index(p.first[k], p.second[k]), ring->index,
                static_cast<int>(k));
    }
  }
  out.points.push_back(TrajectoryPoint{t, x, std::nullopt, 0, 0});
}

void simulate_distributed(const ControllerArtifact& art, Eigen::VectorXd x, long max_steps,
                          Recorder& rec, Trajectory& out) {
  const SwitchedSystem& sys = art.system;
  std::vector<const DistRing*> blocks;
  for (auto it = art.dist_rings.rbegin(); it != art.dist_rings.rend(); ++it) blocks.push_back(&*it);
  const DistRing* loop = art.dist_stability ? &*art.dist_stability
                         : art.dist_rings.empty() ? nullptr
                                                  : &art.dist_rings.front();

  long t = 0;
  std::size_t next_block = 0;
  bool escaped = false;
  while (t < max_steps && !escaped) {
    const DistRing* ring = next_block < blocks.size() ? blocks[next_block++] : loop;
    if (!ring) break;
    std::array<ModeSequence, 2> current;
    for (int s = 0; s < ring->ell && t < max_steps; ++s) {
      std::array<int, 2> mode{};
      for (Component c : {Component::first, Component::second}) {
        const ComponentRing& cr = ring->component(c);
        if (s % cr.k == 0) {
          const Eigen::VectorXd xc = x.segment(sys.row_offset(c), sys.dims(c));
          try {
            current[index_of(c)] =
                cr.control(cr.tiling.locate_extended(xc, ring->a, ring->extension)).pattern;
          } catch (const OutOfDomain& e) {
            rec.escape(std::string(c == Component::first ? "component 1: " : "component 2: ") +
                       e.what() + " at step " + std::to_string(t));
            escaped = true;
            break;
          }
        }
        mode[index_of(c)] = current[index_of(c)][static_cast<std::size_t>(s % cr.k)];
      }
      if (escaped) break;
      rec.apply(x, t, sys.modes().joint_index(mode[0], mode[1]), ring->index, s);
    }
  }
  out.points.push_back(TrajectoryPoint{t, x, std::nullopt, 0, 0});
}

}  // namespace

Trajectory simulate(const ControllerArtifact& art, const Eigen::VectorXd& x0, long max_steps,
                    const Schedule& schedule) {
  if (x0.size() != art.system.dimension()) {
    throw ConfigurationError("x0: expected " + std::to_string(art.system.dimension()) +
                             " coordinates");
  }
  if (max_steps < 0) throw ConfigurationError("max_steps must be >= 0");
  if (!art.capture_set().contains(x0)) {
    throw OutOfDomain("initial state lies outside the capture set");
  }
  Trajectory out;
  Recorder rec(art, schedule, out);
  rec.mark(x0, 0);
  if (art.mode == SynthesisMode::distributed) {
    simulate_distributed(art, x0, max_steps, rec, out);
  } else {
    simulate_centralized(art, x0, max_steps, rec, out);
  }
  if (out.outcome != Outcome::escaped) {
    out.outcome = out.capture_step ? Outcome::captured : Outcome::not_captured;
  }
  return out;
}

bool VerificationReport::passed() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                [](const auto& e) { return !e.passed; }));
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class ReportBuilder {
 public:
  explicit ReportBuilder(VerificationReport& r) : report_(r) {}

  // Runs check(); an exception counts as a failure with its message.
  template <typename Fn>
  void add(std::string id, Fn&& check) {
    CertificateResult entry{std::move(id), false, {}};
    try {
      entry.detail = check();
      entry.passed = entry.detail.empty();
    } catch (const std::exception& e) {
      entry.detail = e.what();
    }
    report_.entries.push_back(std::move(entry));
  }

 private:
  VerificationReport& report_;
};

std::string check_table(const Tiling& tiling, std::size_t table_size,
                        const std::function<std::size_t(std::size_t)>& tile_at) {
  const auto leaves = tiling.leaves();
  if (table_size != leaves.size()) return "table has " + std::to_string(table_size) +
                                           " entries for " + std::to_string(leaves.size()) + " tiles";
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (tile_at(i) != leaves[i]) return "table entry " + std::to_string(i) + " names tile " +
                                        std::to_string(tile_at(i));
  }
  return {};
}

std::string check_joint_pattern(const SwitchedSystem& sys, const Pattern& p, int K) {
  if (p.first.size() != p.second.size() || p.first.empty()) return "malformed pattern";
  if (static_cast<int>(p.length()) > K) return "pattern longer than K";
  const ModeSet& modes = sys.modes();
  for (std::size_t k = 0; k < p.length(); ++k) {
    if (p.first[k] < 0 || p.second[k] < 0 ||
        static_cast<std::size_t>(p.first[k]) >= modes.size(Component::first) ||
        static_cast<std::size_t>(p.second[k]) >= modes.size(Component::second)) {
      return "mode index out of range";
    }
    if (!modes.joint_allowed(modes.joint_index(p.first[k], p.second[k]))) {
      return "joint mode violates the active-actuator limit";
    }
  }
  return {};
}

void verify_centralized_ring(const SwitchedSystem& sys, const Ring& ring, const Box& expected_base,
                             double slack, ReportBuilder& rb) {
  const std::string name = "ring " + std::to_string(ring.index);
  rb.add(name + " nesting", [&]() -> std::string {
    if (!(ring.base == expected_base)) return "base differs from the previous extended box";
    if (!(ring.a >= 0.0) || !std::isfinite(ring.a)) return "bad extension " + fmt(ring.a);
    if (!(ring.extended == extend_box(ring.base, ring.a, ring.extension))) {
      return "extended box is not base + a";
    }
    if (!(ring.tiling.root() == ring.base)) return "tiling root differs from base";
    return check_table(ring.tiling, ring.table.size(), [&](std::size_t i) { return ring.table[i].tile; });
  });
  for (const TileControl& tc : ring.table) {
    rb.add(name + " tile " + std::to_string(tc.tile), [&]() -> std::string {
      if (auto bad = check_joint_pattern(sys, tc.pattern, ring.max_pattern_length); !bad.empty()) {
        return bad;
      }
      const Tile& tile = ring.tiling.tile(tc.tile);
      const Box image = image_bounds(pattern_map(sys, tc.pattern), extend_tile(tile, ring.a, ring.extension));
      if (!box_inclusion(image, ring.base, slack)) return "image of the extended tile leaves the base";
      return {};
    });
  }
}

void verify_stability_ring(const SwitchedSystem& sys, const Ring& ring, const Box& R, double slack,
                           ReportBuilder& rb) {
  rb.add("stability nesting", [&]() -> std::string {
    if (!ring.epsilon) return "stability ring without epsilon";
    if (!(ring.base == R) || !(ring.extended == R) || ring.a != 0.0) return "ring must be R with a = 0";
    if (!(ring.tiling.root() == R)) return "tiling root differs from R";
    return check_table(ring.tiling, ring.table.size(), [&](std::size_t i) { return ring.table[i].tile; });
  });
  if (!ring.epsilon) return;
  const Box margin = extend_box(R, *ring.epsilon, ring.extension);
  for (const TileControl& tc : ring.table) {
    rb.add("stability tile " + std::to_string(tc.tile), [&]() -> std::string {
      if (auto bad = check_joint_pattern(sys, tc.pattern, ring.max_pattern_length); !bad.empty()) {
        return bad;
      }
      const Box& box = ring.tiling.tile(tc.tile).box;
      AffineMap map = AffineMap::identity(sys.dimension());
      const ModeSet& modes = sys.modes();
      for (std::size_t k = 0; k < tc.pattern.length(); ++k) {
        map = compose(sys.dynamics(modes.joint_index(tc.pattern.first[k], tc.pattern.second[k])), map);
        const Box image = image_bounds(map, box);
        if (k + 1 < tc.pattern.length()) {
          if (!box_inclusion(image, margin, slack)) {
            return "step " + std::to_string(k + 1) + " leaves R + epsilon";
          }
        } else if (!box_inclusion(image, R, slack)) {
          return "final image leaves R";
        }
      }
      return {};
    });
  }
}

void verify_dist_ring(const SwitchedSystem& sys, const DistRing& ring,
                      const std::array<Box, 2>& expected_base, double slack, ReportBuilder& rb) {
  const std::string name = ring.stability ? std::string("dist stability")
                                          : "dist ring " + std::to_string(ring.index);
  rb.add(name + " nesting", [&]() -> std::string {
    if (!(ring.a >= 0.0) || !std::isfinite(ring.a)) return "bad extension " + fmt(ring.a);
    if (ring.stability && ring.a != 0.0) return "stability ring must have a = 0";
    if (!(ring.epsilon >= 0.0)) return "bad epsilon";
    for (Component c : {Component::first, Component::second}) {
      const ComponentRing& cr = ring.component(c);
      const std::string cname = c == Component::first ? "component 1" : "component 2";
      if (!(cr.base == expected_base[index_of(c)])) return cname + ": base differs from the expected box";
      if (!(cr.extended == extend_box(cr.base, ring.a, ring.extension))) {
        return cname + ": extended box is not base + a";
      }
      if (!(cr.tiling.root() == cr.base)) return cname + ": tiling root differs from base";
      auto bad = check_table(cr.tiling, cr.table.size(), [&](std::size_t i) { return cr.table[i].tile; });
      if (!bad.empty()) return cname + ": " + bad;
    }
    return {};
  });
  rb.add(name + " lengths", [&]() -> std::string {
    const int k1 = ring.components[0].k;
    const int k2 = ring.components[1].k;
    if (k1 < 1 || k2 < 1 || k1 > ring.max_pattern_length || k2 > ring.max_pattern_length) {
      return "pattern length outside 1..K";
    }
    if (ring.ell != std::lcm(k1, k2)) return "ell is not lcm(k1, k2)";
    for (const ComponentRing& cr : ring.components) {
      if (cr.alpha * cr.k != ring.ell) return "alpha * k differs from ell";
      for (const LocalControl& lc : cr.table) {
        if (static_cast<int>(lc.pattern.size()) != cr.k) {
          return "tile " + std::to_string(lc.tile) + " has a pattern of length " +
                 std::to_string(lc.pattern.size()) + ", expected " + std::to_string(cr.k);
        }
      }
    }
    return {};
  });
  for (Component c : {Component::first, Component::second}) {
    const ComponentRing& cr = ring.component(c);
    const ComponentRing& other_cr = ring.component(other(c));
    const std::string cname = c == Component::first ? " c1" : " c2";
    for (const LocalControl& lc : cr.table) {
      rb.add(name + cname + " tile " + std::to_string(lc.tile), [&]() -> std::string {
        const ApproxSequence seq = approx_sequence(sys, c, cr.tiling.tile(lc.tile), lc.pattern,
                                                   cr.base, other_cr.base, ring.epsilon,
                                                   ring.extension);
        if (!prop_check(seq, ring.a, slack)) return "over-approximation leaves its margin";
        return {};
      });
    }
  }
}

}  // namespace

VerificationReport verify_artifact(const SwitchedSystem& sys, const ControllerArtifact& art) {
  VerificationReport report;
  ReportBuilder rb(report);
  const double slack = art.options.slack;

  rb.add("system", [&]() -> std::string {
    if (art.R.dims() != static_cast<std::size_t>(sys.dimension())) return "R does not match the system dimension";
    return {};
  });
  if (art.R.dims() != static_cast<std::size_t>(sys.dimension())) return report;

  Box expected = art.R;
  for (const Ring& ring : art.rings) {
    verify_centralized_ring(sys, ring, expected, slack, rb);
    expected = ring.extended;
  }
  if (art.stability) verify_stability_ring(sys, *art.stability, art.R, slack, rb);

  if (!art.dist_rings.empty() || art.dist_stability) {
    const auto n1 = static_cast<std::size_t>(sys.dims(Component::first));
    const auto n2 = static_cast<std::size_t>(sys.dims(Component::second));
    const std::array<Box, 2> r_split{art.R.slice(0, n1), art.R.slice(n1, n2)};
    std::array<Box, 2> base = r_split;
    for (const DistRing& ring : art.dist_rings) {
      verify_dist_ring(sys, ring, base, slack, rb);
      base = {ring.components[0].extended, ring.components[1].extended};
    }
    if (art.dist_stability) verify_dist_ring(sys, *art.dist_stability, r_split, slack, rb);
  }
  rb.add("mode", [&]() -> std::string {
    switch (art.mode) {
      case SynthesisMode::centralized:
        return art.rings.empty() || !art.dist_rings.empty() ? "centralized artifact needs rings only" : "";
      case SynthesisMode::distributed:
        return art.dist_rings.empty() || !art.rings.empty() ? "distributed artifact needs dist rings only" : "";
      case SynthesisMode::stability:
        return art.stability && art.rings.empty() && art.dist_rings.empty() ? "" : "stability artifact needs a stability ring only";
    }
    return "unknown mode";
  });
  return report;
}

VerificationReport verify_artifact(const ControllerArtifact& art) {
  return verify_artifact(art.system, art);
}

}  // namespace switchsynth
