#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "switchsynth/centralized.hpp"
#include "switchsynth/distributed.hpp"
#include "switchsynth/errors.hpp"
#include "switchsynth/io.hpp"

using namespace switchsynth;

namespace {

const std::string kConfigs = SWITCHSYNTH_CONFIG_DIR;
const Box kToyR(std::vector<Interval>{{18, 22}});

SynthesisOptions options(int K, int D, int rings = 100) {
  SynthesisOptions o;
  o.max_pattern_length = K;
  o.max_depth = D;
  o.max_rings = rings;
  o.threads = 1;
  return o;
}

Box hull(const Box& a, const Box& b) {
  std::vector<Interval> iv;
  for (std::size_t j = 0; j < a.dims(); ++j) {
    iv.push_back({std::min(a[j].lo, b[j].lo), std::max(a[j].hi, b[j].hi)});
  }
  return Box(iv);
}

// One interval step of component 1 of a 1+1 system: every joint mode sharing
// the local mode, vertex images of the product box, hulled.
Box step_first(const SwitchedSystem& sys, int u1, const Box& x1, const Box& x2) {
  std::optional<Box> out;
  for (std::size_t u2 = 0; u2 < sys.modes().size(Component::second); ++u2) {
    const AffineMap& f = sys.dynamics(u1, static_cast<int>(u2));
    const Box img = oracle::vertex_image(f.row_block(0, 1), x1.concat(x2));
    out = out ? hull(*out, img) : img;
  }
  return *out;
}

}  // namespace

TEST_CASE("over-approximation sequences") {
  SUBCASE("one step matches interval evaluation over the other base") {
    const Config cfg = load_config(kConfigs + "/two_room_distributed.json");
    const SwitchedSystem& sys = cfg.system;
    const Box R1 = cfg.R.slice(0, 1), R2 = cfg.R.slice(1, 1);
    const Tile tile = Tiling::trivial(R1).tile(0);
    for (double a : {0.0, 0.4}) {
      const ApproxSequence seq = approx_sequence(sys, Component::first, tile, {1}, R1, R2, 1.5);
      const Box x1 = extend_box(R1, a, {});
      const Box x2 = extend_box(R2, a + 1.5, {});
      const Box want = step_first(sys, 1, x1, x2);
      const Box got = seq.steps[1].at(a);
      CHECK(got[0].lo == doctest::Approx(want[0].lo).epsilon(1e-12));
      CHECK(got[0].hi == doctest::Approx(want[0].hi).epsilon(1e-12));
    }
  }
  SUBCASE("two-room heater-on pattern of length two at a = 0") {
    const Config cfg = load_config(kConfigs + "/two_room_distributed.json");
    const SwitchedSystem& sys = cfg.system;
    const Box R1 = cfg.R.slice(0, 1), R2 = cfg.R.slice(1, 1);
    const ApproxSequence seq =
        approx_sequence(sys, Component::first, Tiling::trivial(R1).tile(0), {1, 1}, R1, R2, 1.5);
    REQUIRE(seq.steps.size() == 3);
    // Other room ranges over [17, 22]: base lowered by eps.
    const Box x2(std::vector<Interval>{{17, 22}});
    const Box x1 = step_first(sys, 1, R1, x2);
    const Box x11 = step_first(sys, 1, x1, x2);
    CHECK(seq.steps[1].at(0)[0].lo == doctest::Approx(x1[0].lo).epsilon(1e-12));
    CHECK(seq.steps[1].at(0)[0].hi == doctest::Approx(x1[0].hi).epsilon(1e-12));
    CHECK(seq.steps[2].at(0)[0].lo == doctest::Approx(x11[0].lo).epsilon(1e-12));
    CHECK(seq.steps[2].at(0)[0].hi == doctest::Approx(x11[0].hi).epsilon(1e-12));
  }
  SUBCASE("without coupling the other component does not matter") {
    const SwitchedSystem pair = oracle::toy1d_pair();
    const Tile tile = Tiling::trivial(kToyR).tile(0);
    const ApproxSequence a = approx_sequence(pair, Component::first, tile, {1, 0, 1}, kToyR, kToyR, 0.0);
    const ApproxSequence b = approx_sequence(pair, Component::first, tile, {1, 0, 1}, kToyR,
                                             Box(std::vector<Interval>{{-100, 5}}), 7.0);
    CHECK(a.steps == b.steps);
  }
  SUBCASE("sampled states stay in the sequence") {
    std::mt19937_64 rng(3);
    const SwitchedSystem sys = oracle::random_coupled(rng);
    const Box R1(std::vector<Interval>{{0, 1}, {0, 1}}), R2 = R1;
    const Tile tile = Tiling::trivial(R1).tile(0);
    const ModeSequence pat{3, 0, 1};
    const double a = 0.3, eps = 0.2;
    const ApproxSequence seq = approx_sequence(sys, Component::first, tile, pat, R1, R2, eps);
    const Box x1box = extend_box(R1, a, {}), x2box = extend_box(R2, a + eps, {});
    std::uniform_int_distribution<int> other(0, 3);
    for (int s = 0; s < 1000; ++s) {
      Eigen::VectorXd x = oracle::uniform_in(x1box.concat(x2box), rng);
      for (std::size_t k = 0; k < pat.size(); ++k) {
        CHECK(seq.steps[k].at(a).contains(x.head(2)));
        x = sys.step(x, sys.modes().joint_index(pat[k], other(rng)));
        // Keep the other component inside the region the sequence assumes.
        x.tail(2) = oracle::uniform_in(x2box, rng);
      }
      CHECK(seq.steps.back().at(a).contains(x.head(2)));
    }
  }
}

TEST_CASE("admissibility of a local pattern") {
  const Box base(std::vector<Interval>{{0, 1}});
  ApproxSequence seq;
  seq.base = base;
  seq.epsilon = 0.5;
  seq.steps.push_back(ParamBox({ParamInterval{0, -1, 1, 0}}));

  SUBCASE("first step leaves base + a + eps") {
    seq.steps.push_back(ParamBox({ParamInterval{-0.8, -1, 0.6, 0}}));
    seq.steps.push_back(ParamBox({ParamInterval{0.2, 0, 0.8, 0}}));
    CHECK_FALSE(prop_check(seq, 0.2));
  }
  SUBCASE("excursion within the margin, final step inside the base") {
    seq.steps.push_back(ParamBox({ParamInterval{-0.3, -1, 0.6, 0}}));
    seq.steps.push_back(ParamBox({ParamInterval{0.2, 0, 0.8, 0}}));
    CHECK(prop_check(seq, 0.2));
    const auto a = max_extension_distributed(seq);
    REQUIRE(a);
    CHECK(std::isinf(*a));
  }
  SUBCASE("a single step ignores epsilon") {
    seq.steps.push_back(ParamBox({ParamInterval{0.1, 0, 0.9, 0}}));
    for (double eps : {0.0, 3.0}) {
      seq.epsilon = eps;
      CHECK(prop_check(seq, 10.0));
    }
  }
}

TEST_CASE("largest admissible extension of a local pattern") {
  SUBCASE("decoupled toy component") {
    const SwitchedSystem pair = oracle::toy1d_pair();
    const Tile tile = Tiling::trivial(kToyR).tile(0);
    const auto a = max_extension_distributed(
        approx_sequence(pair, Component::first, tile, {1}, kToyR, kToyR, 1.0));
    REQUIRE(a);
    CHECK(*a == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("infeasible at zero") {
    const SwitchedSystem pair = oracle::toy1d_pair();
    const Tile tile = Tiling::trivial(kToyR).tile(0);
    CHECK_FALSE(max_extension_distributed(
        approx_sequence(pair, Component::first, tile, {0}, kToyR, kToyR, 1.0)));
  }
  SUBCASE("threshold is tight") {
    std::mt19937_64 rng(17);
    const Box R1(std::vector<Interval>{{0, 1}, {0, 1}});
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const SwitchedSystem sys = oracle::random_coupled(rng);
      std::vector<ModeSequence> pats;
      for (int u = 0; u < 4; ++u) {
        pats.push_back({u});
        for (int v = 0; v < 4; ++v) pats.push_back({u, v});
      }
      const Tiling quarters = Tiling::uniform(R1, 1);
      for (std::size_t id : quarters.leaves()) {
        for (const ModeSequence& pat : pats) {
          const ApproxSequence seq =
              approx_sequence(sys, Component::second, quarters.tile(id), pat, R1, R1, 0.3);
          const auto a = max_extension_distributed(seq);
          if (!a || std::isinf(*a)) continue;
          ++checked;
          CHECK(prop_check(seq, std::max(0.0, *a - 1e-9)));
          CHECK_FALSE(prop_check(seq, *a + 1e-6));
          const auto scan = oracle::grid_scan([&](double x) { return prop_check(seq, x); }, 1e-4, 100);
          REQUIRE(scan);
          CHECK(std::abs(*scan - *a) <= 1e-4);
        }
      }
    }
    CHECK(checked >= 10);
  }
}

TEST_CASE("distributed rings on decoupled toy components") {
  const SwitchedSystem pair = oracle::toy1d_pair();
  SUBCASE("K = 1") {
    const DistRing r = macro_step_synthesis_distributed(pair, kToyR, kToyR, options(1, 0), 1.0);
    CHECK(r.components[0].k == 1);
    CHECK(r.components[1].k == 1);
    CHECK(r.ell == 1);
    CHECK(r.a == doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("K = 2 prefers the longer pattern with the larger extension") {
    const DistRing r = macro_step_synthesis_distributed(pair, kToyR, kToyR, options(2, 0), 10.0);
    CHECK(r.components[0].k == 2);
    CHECK(r.a == doctest::Approx(6.0).epsilon(1e-9));
  }
  SUBCASE("iteration follows the centralized doubling") {
    const DistIterationResult d = iterate_synthesis_distributed(pair, kToyR, kToyR, options(1, 0, 5), 1.0);
    const IterationResult c = iterate_synthesis(oracle::toy1d(), kToyR, options(1, 0, 5));
    REQUIRE(d.rings.size() == c.rings.size());
    for (std::size_t i = 0; i < d.rings.size(); ++i) {
      CHECK(d.rings[i].a == doctest::Approx(c.rings[i].a).epsilon(1e-9));
    }
  }
  SUBCASE("max_rings = 1") {
    const DistIterationResult d = iterate_synthesis_distributed(pair, kToyR, kToyR, options(1, 0, 1), 1.0);
    CHECK(d.rings.size() == 1);
  }
}

TEST_CASE("two-room distributed first ring") {
  const Config cfg = load_config(kConfigs + "/two_room_distributed.json");
  const Box R1 = cfg.R.slice(0, 1), R2 = cfg.R.slice(1, 1);
  SynthesisOptions o = cfg.options;
  const DistRing r = macro_step_synthesis_distributed(cfg.system, R1, R2, o, *cfg.epsilon);
  CHECK(r.a > 0.0);
  CHECK(r.a == doctest::Approx(0.2823).epsilon(1e-3));

  SUBCASE("never better than centralized with the same K") {
    SynthesisOptions same = o;
    same.max_pattern_length = 4;
    same.max_depth = 1;
    const DistRing d = macro_step_synthesis_distributed(cfg.system, R1, R2, same, *cfg.epsilon);
    const Ring c = macro_step_synthesis(cfg.system, cfg.R, same);
    CHECK(d.a <= c.a);
  }
}

TEST_CASE("fixed lengths and lcm composition") {
  const Config cfg = load_config(kConfigs + "/eleven_room_synthetic.json");
  SynthesisOptions o = cfg.options;
  o.max_rings = 6;
  const DistIterationResult res = iterate_synthesis_distributed(
      cfg.system, cfg.R.slice(0, 5), cfg.R.slice(5, 6), o, *cfg.epsilon);
  REQUIRE(res.rings.size() == 6);
  bool mixed = false;
  for (const DistRing& r : res.rings) {
    CHECK(r.ell == std::lcm(r.components[0].k, r.components[1].k));
    for (const auto& cr : r.components) {
      CHECK(cr.alpha * cr.k == r.ell);
      CHECK(cr.table.size() == cr.tiling.size());
      for (const auto& lc : cr.table) CHECK(static_cast<int>(lc.pattern.size()) == cr.k);
    }
    mixed = mixed || r.components[0].k != r.components[1].k;
  }
  CHECK(mixed);
}

TEST_CASE("distributability") {
  CHECK_THROWS_AS(check_distributable(oracle::toy1d()), ConfigurationError);
  ModeConstraints cons;
  cons.global_max_active = 1;
  ModeSet modes({ModeSet::binary_labels(1), ModeSet::binary_labels(1)}, cons);
  std::vector<AffineMap> dyn(4, AffineMap(0.5 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1)));
  const SwitchedSystem sys({1, 1}, modes, dyn);
  CHECK_THROWS_AS(check_distributable(sys), ConfigurationError);
  CHECK_NOTHROW(check_distributable(oracle::toy1d_pair()));
}
