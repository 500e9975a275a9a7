#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "switchsynth/errors.hpp"
#include "switchsynth/io.hpp"

using namespace switchsynth;

namespace {

const std::string kConfigs = SWITCHSYNTH_CONFIG_DIR;

std::string read(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

// The error message of parsing `text`, or "" if it parses.
std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigurationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("bundled configs load") {
  for (const char* name : {"toy1d.json", "two_room_centralized.json", "two_room_distributed.json",
                           "eleven_room_synthetic.json"}) {
    CAPTURE(name);
    const Config cfg = load_config(kConfigs + "/" + name);
    CHECK(cfg.R.dims() == static_cast<std::size_t>(cfg.system.dimension()));
    CHECK(cfg.hash.size() == 16);
  }
  const Config toy = load_config(kConfigs + "/toy1d.json");
  CHECK(toy.options.max_pattern_length == 1);
  CHECK(toy.options.max_rings == 5);
  CHECK(toy.epsilon == 1.0);
  CHECK(toy.runtime.x0.size() == 3);
}

TEST_CASE("config errors name the field") {
  const std::string toy = read(kConfigs + "/toy1d.json");
  CHECK(error_of(toy).empty());
  CHECK(error_of("{").find("invalid JSON") != std::string::npos);
  CHECK(error_of(replace(toy, "\"K\": 1", "\"K\": 0")).rfind("synthesis.K:", 0) == 0);
  CHECK(error_of(replace(toy, "\"K\": 1", "\"K\": \"one\"")).rfind("synthesis.K:", 0) == 0);
  CHECK(error_of(replace(toy, "\"eta\": 0.5", "\"eta\": -1")).rfind("synthesis.eta:", 0) == 0);
  CHECK(error_of(replace(toy, "\"eta\": 0.5", "\"etta\": 0.5")).rfind("synthesis.etta:", 0) == 0);
  CHECK(error_of(replace(toy, "[[18, 22]]", "[[22, 18]]")).find("R") == 0);
  CHECK(error_of(replace(toy, "[[18, 22]]", "[[18, 22], [0, 1]]")).rfind("R:", 0) == 0);
  CHECK(error_of(replace(toy, "\"lower\"", "\"upper\"")).rfind("synthesis.extension:", 0) == 0);
  CHECK(error_of(replace(toy, "\"tau_s\": 1", "\"tau_s\": 0")).find("tau_s") != std::string::npos);
  CHECK(error_of(replace(toy, "\"epsilon\": 1,", "")).empty());
  CHECK(error_of(replace(replace(toy, "\"epsilon\": 1,", ""), "\"centralized\"", "\"stability\""))
            .rfind("synthesis.epsilon:", 0) == 0);
  // The toy system has a single component.
  CHECK(error_of(replace(toy, "\"centralized\"", "\"distributed\"")).rfind("system:", 0) == 0);
}

TEST_CASE("config hash") {
  const std::string toy = read(kConfigs + "/toy1d.json");
  CHECK(parse_config(toy).hash == parse_config(toy).hash);
  // Formatting does not matter, content does.
  CHECK(parse_config(replace(toy, "\"K\": 1", "\"K\":      1")).hash == parse_config(toy).hash);
  CHECK(parse_config(replace(toy, "\"eta\": 0.5", "\"eta\": 0.25")).hash != parse_config(toy).hash);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("artifact round trip") {
  for (const char* name : {"toy1d.json", "two_room_centralized.json", "two_room_distributed.json"}) {
    CAPTURE(name);
    const Config cfg = load_config(kConfigs + "/" + name);
    const ControllerArtifact art = synthesize(cfg);
    CHECK(art.config_hash == cfg.hash);
    const std::string text = artifact_to_json(art);
    const ControllerArtifact back = artifact_from_json(text);
    CHECK(back == art);
    CHECK(artifact_to_json(back) == text);

    const auto path = std::filesystem::temp_directory_path() / (std::string("switchsynth_rt_") + name);
    save_artifact(art, path);
    CHECK(load_artifact(path) == art);
  }
  SUBCASE("infinite bounds survive") {
    ControllerArtifact art = synthesize(load_config(kConfigs + "/toy1d.json"));
    art.rings[0].table[0].a_tile = std::numeric_limits<double>::infinity();
    const std::string text = artifact_to_json(art);
    CHECK(text.find("\"inf\"") != std::string::npos);
    CHECK(artifact_from_json(text) == art);
  }
  SUBCASE("not an artifact") {
    CHECK_THROWS_AS(artifact_from_json("{\"format\": \"other\"}"), ConfigurationError);
    CHECK_THROWS_AS(artifact_from_json("[1, 2"), ConfigurationError);
    CHECK_THROWS_AS(load_artifact("/nonexistent/controller.json"), ConfigurationError);
  }
}

TEST_CASE("csv outputs") {
  const ControllerArtifact art = synthesize(load_config(kConfigs + "/two_room_centralized.json"));
  std::ostringstream traj, geo, rep;
  write_trajectory_csv(traj, simulate(art, Eigen::Vector2d(12, 12), 5), art.system);
  write_geometry_csv(geo, art);
  write_report_csv(rep, verify_artifact(art));

  std::string line;
  std::istringstream t(traj.str());
  std::getline(t, line);
  CHECK(line == "step,time_s,x_1,x_2,mode_label,ring,phase");
  std::size_t rows = 0;
  while (std::getline(t, line)) ++rows;
  CHECK(rows == 6);

  CHECK(geo.str().rfind("kind,ring,component,tile,dim,lo,hi\n", 0) == 0);
  CHECK(rep.str().rfind("id,passed,detail\n", 0) == 0);
  CHECK(rep.str().find("ring 1 tile") != std::string::npos);
}
