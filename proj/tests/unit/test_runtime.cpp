#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "switchsynth/artifact.hpp"
#include "switchsynth/errors.hpp"
#include "switchsynth/io.hpp"
#include "switchsynth/runtime.hpp"

using namespace switchsynth;

namespace {

const std::string kConfigs = SWITCHSYNTH_CONFIG_DIR;

const ControllerArtifact& two_room() {
  static const ControllerArtifact art = synthesize(load_config(kConfigs + "/two_room_centralized.json"));
  return art;
}

const ControllerArtifact& toy() {
  static const ControllerArtifact art = synthesize(load_config(kConfigs + "/toy1d.json"));
  return art;
}

std::vector<std::string> failing(const VerificationReport& r) {
  std::vector<std::string> ids;
  for (const auto& e : r.entries) {
    if (!e.passed) ids.push_back(e.id);
  }
  return ids;
}

}  // namespace

TEST_CASE("schedules") {
  const Schedule s({{0, 1.0}, {10, -2.0}, {25, 0.5}});
  CHECK(s.at(-1) == 0.0);
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(9) == 1.0);
  CHECK(s.at(10) == -2.0);
  CHECK(s.at(1000) == 0.5);
  CHECK(Schedule().at(5) == 0.0);
  CHECK_THROWS_AS(Schedule({{5, 1.0}, {5, 2.0}}), ConfigurationError);

  const auto dir = std::filesystem::temp_directory_path();
  {
    std::ofstream f(dir / "switchsynth_sched_ok.csv");
    f << "# comment\nstep,w\n0,1.5\n12,-3\n";
  }
  const Schedule loaded = Schedule::from_csv(dir / "switchsynth_sched_ok.csv");
  CHECK(loaded.at(11) == 1.5);
  CHECK(loaded.at(12) == -3.0);
  {
    std::ofstream f(dir / "switchsynth_sched_bad.csv");
    f << "t,value\n0,1\n";
  }
  CHECK_THROWS_AS(Schedule::from_csv(dir / "switchsynth_sched_bad.csv"), ConfigurationError);
  CHECK_THROWS_AS(Schedule::from_csv(dir / "does_not_exist.csv"), ConfigurationError);

  SUBCASE("bundled schedules parse") {
    for (const char* name : {"soft_winter.csv", "spring.csv"}) {
      const Schedule b = Schedule::from_csv(std::filesystem::path(kConfigs) / "schedules" / name);
      CHECK_FALSE(b.empty());
    }
  }
}

TEST_CASE("verification") {
  SUBCASE("fresh artifacts pass") {
    CHECK(verify_artifact(toy()).passed());
    CHECK(verify_artifact(two_room()).passed());
  }
  SUBCASE("a corrupted pattern fails exactly its own certificate") {
    ControllerArtifact art = two_room();
    Ring& ring = art.rings.at(2);
    TileControl& tc = ring.table.back();
    // All heaters off cannot bring the lower tiles back up.
    tc.pattern = Pattern{{0}, {0}};
    const auto ids = failing(verify_artifact(art));
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == "ring 3 tile " + std::to_string(tc.tile));
  }
  SUBCASE("an inflated extension fails the binding tile") {
    ControllerArtifact art = toy();
    art.rings.resize(1);
    Ring& r = art.rings[0];
    r.a += 0.1;
    r.extended = extend_box(r.base, r.a, r.extension);
    const auto ids = failing(verify_artifact(art));
    REQUIRE(ids.size() == 1);
    CHECK(ids[0] == "ring 1 tile 0");
  }
  SUBCASE("broken nesting") {
    ControllerArtifact art = toy();
    art.rings[1].base = art.R;
    CHECK_FALSE(verify_artifact(art).passed());
  }
  SUBCASE("checked against another system") {
    const Config cfg = load_config(kConfigs + "/toy1d.json");
    ModeSet modes({std::vector<std::string>{"0", "1"}, {""}});
    std::vector<AffineMap> dyn{AffineMap(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::VectorXd::Zero(1)),
                               AffineMap(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::VectorXd::Constant(1, 9))};
    const SwitchedSystem weaker({1, 0}, modes, dyn);
    CHECK_FALSE(verify_artifact(weaker, toy()).passed());
  }
}

TEST_CASE("centralized closed loop on the two-room model") {
  const ControllerArtifact& art = two_room();
  for (const Eigen::Vector2d& x0 : {Eigen::Vector2d(12, 12), Eigen::Vector2d(12, 19), Eigen::Vector2d(22, 12)}) {
    const Trajectory t = simulate(art, x0, 600);
    CHECK(t.outcome == Outcome::captured);
    REQUIRE(t.capture_step);
    CHECK(*t.capture_step <= 60);
    // After capture, every macro-step boundary is back in R.
    for (const auto& p : t.points) {
      if (p.step > *t.capture_step && p.phase == 0 && p.joint) CHECK(art.R.contains(p.x));
    }
    CHECK(t.points.size() == 601);
  }
  SUBCASE("determinism") {
    const Trajectory a = simulate(art, Eigen::Vector2d(5, 14), 300);
    const Trajectory b = simulate(art, Eigen::Vector2d(5, 14), 300);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].x == b.points[i].x);
      CHECK(a.points[i].joint == b.points[i].joint);
    }
  }
  SUBCASE("outside the capture set") {
    CHECK_THROWS_AS(simulate(art, Eigen::Vector2d(-40, 20), 10), OutOfDomain);
    CHECK_THROWS_AS(simulate(art, Eigen::Vector3d(20, 20, 20), 10), ConfigurationError);
  }
}

TEST_CASE("sampled attainability") {
  std::mt19937_64 rng(31);
  for (const ControllerArtifact* art : {&toy(), &two_room()}) {
    const long bound = static_cast<long>(art->rings.size()) * art->options.max_pattern_length;
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd x0 = oracle::uniform_in(art->capture_set(), rng);
      const Trajectory t = simulate(*art, x0, bound);
      CHECK(t.outcome == Outcome::captured);
      if (t.capture_step) CHECK(*t.capture_step <= bound);
    }
  }
}

TEST_CASE("stability-only controller keeps R + eps") {
  Config cfg = load_config(kConfigs + "/toy1d.json");
  cfg.mode = SynthesisMode::stability;
  const ControllerArtifact art = synthesize(cfg);
  REQUIRE(art.stability);
  CHECK(art.rings.empty());
  const Box margin = extend_box(art.R, *cfg.epsilon, cfg.options.extension);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Trajectory t = simulate(art, oracle::uniform_in(art.R, rng), 200);
    for (const auto& p : t.points) CHECK(margin.contains(p.x));
  }
}

TEST_CASE("offset schedules perturb the closed loop") {
  const ControllerArtifact& art = two_room();
  for (const char* name : {"soft_winter.csv", "spring.csv"}) {
    const Schedule s = Schedule::from_csv(std::filesystem::path(kConfigs) / "schedules" / name);
    const Trajectory t = simulate(art, Eigen::Vector2d(12, 12), 600, s);
    const Trajectory calm = simulate(art, Eigen::Vector2d(12, 12), 600);
    CHECK(t.points.back().x != calm.points.back().x);
    std::size_t outside = 0;
    const Box margin = extend_box(art.R, *art.epsilon, art.options.extension);
    for (const auto& p : t.points) {
      if (t.capture_step && p.step > *t.capture_step && !margin.contains(p.x)) ++outside;
    }
    MESSAGE(std::string(name) << ": " << to_string(t.outcome) << ", " << outside
                 << " post-capture states outside R + eps");
  }
}

TEST_CASE("distributed closed loop") {
  const ControllerArtifact art = synthesize(load_config(kConfigs + "/two_room_distributed.json"));
  REQUIRE(verify_artifact(art).passed());
  const Box S = art.capture_set();
  const Box margin = extend_box(art.R, *art.epsilon, art.options.extension);
  std::mt19937_64 rng(5);
  long bound = 0;
  for (const auto& r : art.dist_rings) bound += r.ell;
  for (int i = 0; i < 1000; ++i) {
    const Trajectory t = simulate(art, oracle::uniform_in(S, rng), bound + 200);
    REQUIRE(t.capture_step);
    CHECK(*t.capture_step <= bound);
    for (const auto& p : t.points) {
      if (p.step >= bound) CHECK(margin.contains(p.x));
    }
  }
}
