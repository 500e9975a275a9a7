#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "switchsynth/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kConfigs = SWITCHSYNTH_CONFIG_DIR;

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "switchsynth");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = switchsynth::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "switchsynth_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synth, verify and simulate") {
  const fs::path art = scratch() / "two_room.json";
  const Run s = cli({"synth", kConfigs + "/two_room_centralized.json", "-o", art.string()});
  REQUIRE(s.code == switchsynth::cli::kOk);
  CHECK(s.out.find("rings: 15") != std::string::npos);
  CHECK(s.out.find("sum a: ") != std::string::npos);
  CHECK(fs::exists(art));

  const Run v = cli({"verify", art.string()});
  CHECK(v.code == switchsynth::cli::kOk);
  CHECK(v.out.find("FAIL") == std::string::npos);

  const fs::path traj = scratch() / "traj.csv";
  const fs::path geo = scratch() / "geo.csv";
  const Run m = cli({"simulate", art.string(), "--x0", "12,12", "--steps", "50", "-o", traj.string(),
                     "--geometry", geo.string()});
  CHECK(m.code == switchsynth::cli::kOk);
  CHECK(m.err.find("captured") != std::string::npos);
  std::ifstream f(traj);
  std::string header;
  std::getline(f, header);
  CHECK(header == "step,time_s,x_1,x_2,mode_label,ring,phase");
  CHECK(fs::file_size(geo) > 0);

  SUBCASE("x0 outside the capture set") {
    const Run out = cli({"simulate", art.string(), "--x0", "-60,20", "--steps", "10"});
    CHECK(out.code == switchsynth::cli::kDomainFailure);
    CHECK(out.err.find("x0 #1") != std::string::npos);
  }
  SUBCASE("malformed x0") {
    CHECK(cli({"simulate", art.string(), "--x0", "12,abc"}).code == switchsynth::cli::kUsageError);
    CHECK(cli({"simulate", art.string(), "--x0", "12"}).code == switchsynth::cli::kUsageError);
  }
  SUBCASE("a corrupted artifact is rejected and the failure listed") {
    switchsynth::ControllerArtifact a = switchsynth::load_artifact(art);
    a.rings.at(0).table.at(0).pattern = switchsynth::Pattern{{0}, {0}};
    const fs::path bad = scratch() / "corrupt.json";
    switchsynth::save_artifact(a, bad);
    const Run r = cli({"verify", bad.string(), "--csv", (scratch() / "report.csv").string()});
    CHECK(r.code == switchsynth::cli::kDomainFailure);
    CHECK(r.out.find("FAIL ring 1 tile ") != std::string::npos);
    CHECK(cli({"simulate", bad.string()}).code == switchsynth::cli::kDomainFailure);
  }
  SUBCASE("verify against a different config warns") {
    const Run r = cli({"verify", art.string(), "--config", kConfigs + "/two_room_distributed.json"});
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(r.code == switchsynth::cli::kOk);
  }
}

TEST_CASE("usage and schema errors") {
  CHECK(cli({}).code == switchsynth::cli::kUsageError);
  CHECK(cli({"frobnicate"}).code == switchsynth::cli::kUsageError);
  CHECK(cli({"synth"}).code == switchsynth::cli::kUsageError);
  CHECK(cli({"verify", "/nonexistent.json"}).code == switchsynth::cli::kUsageError);

  const fs::path cfg = scratch() / "bad.json";
  std::ofstream(cfg) << R"({"system": {"split": [1, 0]}, "R": [[0, 1]], "colour": 3})";
  const Run r = cli({"synth", cfg.string()});
  CHECK(r.code == switchsynth::cli::kUsageError);
  CHECK(r.err.find("error: ") != std::string::npos);

  const Run help = cli({"--help"});
  CHECK(help.code == switchsynth::cli::kOk);
  CHECK(help.out.find("synth") != std::string::npos);
}

TEST_CASE("synthesis failure is a domain failure") {
  const fs::path cfg = scratch() / "away.json";
  std::ofstream(cfg) << R"({
    "system": {"split": [1, 0], "modes": [{"labels": ["away"]}],
               "discrete": {"tau_s": 1, "modes": [{"mode": "away", "M": [[0.5]], "offset": [40]}]}},
    "R": [[18, 22]],
    "synthesis": {"K": 2, "D": 1}
  })";
  const Run r = cli({"synth", cfg.string(), "-o", (scratch() / "away_ctrl.json").string()});
  CHECK(r.code == switchsynth::cli::kDomainFailure);
  CHECK(r.err.find("bad tiles at depth 1") != std::string::npos);
}
