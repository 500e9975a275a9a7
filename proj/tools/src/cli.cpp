#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchsynth/artifact.hpp"
#include "switchsynth/errors.hpp"
#include "switchsynth/io.hpp"
#include "switchsynth/runtime.hpp"

namespace switchsynth::cli {

namespace {

namespace fs = std::filesystem;

std::string box_string(const Box& b) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (std::size_t i = 0; i < b.dims(); ++i) {
    if (i) s << " x ";
    s << '[' << b[i].lo << ", " << b[i].hi << ']';
  }
  return s.str();
}

std::vector<double> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigurationError("--x0: cannot parse '" + item + "' as a number");
    }
  }
  return v;
}

void print_summary(std::ostream& out, const ControllerArtifact& art, double seconds,
                   const std::vector<std::string>& warnings) {
  out << std::setprecision(10);
  out << "mode: " << to_string(art.mode) << '\n';
  for (const auto& r : art.rings) {
    out << "ring " << r.index << ": a = " << r.a << ", tiles = " << r.tiling.size() << '\n';
  }
  for (const auto& r : art.dist_rings) {
    out << "ring " << r.index << ": a = " << r.a << ", k1 = " << r.components[0].k
        << ", k2 = " << r.components[1].k << ", ell = " << r.ell
        << ", tiles = " << r.components[0].tiling.size() << "+" << r.components[1].tiling.size()
        << '\n';
  }
  if (art.stability) {
    out << "stability ring: epsilon = " << *art.stability->epsilon
        << ", tiles = " << art.stability->tiling.size() << '\n';
  }
  if (art.dist_stability) {
    const auto& r = *art.dist_stability;
    out << "stability ring: epsilon = " << r.epsilon << ", k1 = " << r.components[0].k
        << ", k2 = " << r.components[1].k << ", ell = " << r.ell << '\n';
  }
  out << "rings: " << art.ring_count() << '\n';
  out << "sum a: " << art.total_extension() << '\n';
  out << "S: " << box_string(art.capture_set()) << '\n';
  out << "stopped: " << to_string(art.stop_reason) << " (" << art.stop_detail << ")\n";
  for (const auto& w : warnings) out << "warning: " << w << '\n';
  out << "wall time: " << std::setprecision(3) << seconds << " s\n";
}

int cmd_synth(const std::string& config_path, const std::string& out_path, int threads,
              std::ostream& out, std::ostream& err) {
  Config cfg = load_config(config_path);
  if (threads >= 0) cfg.options.threads = static_cast<unsigned>(threads);
  std::vector<std::string> warnings;
  const auto start = std::chrono::steady_clock::now();
  ControllerArtifact art;
  try {
    art = synthesize(cfg, &warnings);
  } catch (const RefinementFailure& e) {
    err << "synthesis failed: " << e.what() << '\n';
    if (!e.bad_tiles().empty()) {
      err << "bad tiles at depth " << e.depth() << ":";
      for (auto id : e.bad_tiles()) err << ' ' << id;
      err << '\n';
    }
    return kDomainFailure;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path target = out_path.empty()
                              ? fs::path(fs::path(config_path).stem().string() + ".controller.json")
                              : fs::path(out_path);
  save_artifact(art, target);
  print_summary(out, art, seconds, warnings);
  out << "artifact: " << target.string() << '\n';
  return kOk;
}

int cmd_simulate(const std::string& artifact_path, const std::vector<std::string>& x0_args,
                 long steps, const std::string& schedule_path, const std::string& geometry_path,
                 const std::string& out_path, std::ostream& out, std::ostream& err) {
  const ControllerArtifact art = load_artifact(artifact_path);
  const VerificationReport report = verify_artifact(art);
  if (!report.passed()) {
    err << "artifact does not verify (" << report.failures() << " failing certificates)\n";
    return kDomainFailure;
  }

  std::vector<std::vector<double>> starts;
  for (const auto& s : x0_args) starts.push_back(parse_point(s));
  if (starts.empty()) starts = art.runtime.x0;
  if (starts.empty()) throw ConfigurationError("--x0: no initial state given and none in the artifact");
  if (steps < 0) steps = art.runtime.max_steps;

  Schedule schedule;
  const std::string sched = schedule_path.empty() ? art.runtime.schedule : schedule_path;
  if (!sched.empty()) schedule = Schedule::from_csv(sched);

  if (!geometry_path.empty()) {
    std::ofstream g(geometry_path);
    if (!g) throw ConfigurationError("--geometry: cannot write " + geometry_path);
    write_geometry_csv(g, art);
  }

  int status = kOk;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(
        starts[i].data(), static_cast<Eigen::Index>(starts[i].size()));
    if (x0.size() != art.system.dimension()) {
      throw ConfigurationError("--x0: expected " + std::to_string(art.system.dimension()) +
                               " comma-separated values");
    }
    Trajectory traj;
    try {
      traj = simulate(art, x0, steps, schedule);
    } catch (const OutOfDomain& e) {
      err << "x0 #" << i + 1 << ": " << e.what() << '\n';
      status = kDomainFailure;
      continue;
    }
    err << "x0 #" << i + 1 << ": " << to_string(traj.outcome);
    if (traj.capture_step) {
      err << " at step " << *traj.capture_step << " (t = "
          << static_cast<double>(*traj.capture_step) * art.system.sampling_period() << " s)";
    }
    if (!traj.detail.empty()) err << ", " << traj.detail;
    err << '\n';
    if (traj.outcome == Outcome::escaped) status = kDomainFailure;

    if (out_path.empty()) {
      if (starts.size() == 1) write_trajectory_csv(out, traj, art.system);
      continue;
    }
    fs::path target(out_path);
    if (starts.size() > 1) {
      target = target.parent_path() /
               (target.stem().string() + "_" + std::to_string(i + 1) + target.extension().string());
    }
    std::ofstream f(target);
    if (!f) throw ConfigurationError("--out: cannot write " + target.string());
    write_trajectory_csv(f, traj, art.system);
  }
  return status;
}

int cmd_verify(const std::string& artifact_path, const std::string& config_path,
               const std::string& csv_path, std::ostream& out, std::ostream& err) {
  const ControllerArtifact art = load_artifact(artifact_path);
  const SwitchedSystem* sys = &art.system;
  Config cfg;
  if (!config_path.empty()) {
    cfg = load_config(config_path);
    if (cfg.hash != art.config_hash || !(cfg.system == art.system)) {
      err << "warning: artifact was not produced from this config; re-checking against the "
             "config's system\n";
    }
    sys = &cfg.system;
  }
  const VerificationReport report = verify_artifact(*sys, art);
  for (const auto& e : report.entries) {
    if (!e.passed) out << "FAIL " << e.id << ": " << e.detail << '\n';
  }
  out << report.entries.size() - report.failures() << "/" << report.entries.size()
      << " certificates pass\n";
  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw ConfigurationError("--csv: cannot write " + csv_path);
    write_report_csv(f, report);
  }
  return report.passed() ? kOk : kDomainFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correct-by-design controller synthesis for switched affine systems"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string config_path, out_path, artifact_path, schedule_path, geometry_path, csv_path;
  std::vector<std::string> x0_args;
  long steps = -1;
  int threads = -1;

  auto* synth = app.add_subcommand("synth", "Synthesize a controller from a config file");
  synth->add_option("config", config_path, "Config file (JSON)")->required();
  synth->add_option("--out,-o", out_path, "Artifact path (default: <config>.controller.json)");
  synth->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* sim = app.add_subcommand("simulate", "Simulate the closed loop of an artifact");
  sim->add_option("artifact", artifact_path, "Controller artifact")->required();
  sim->add_option("--x0", x0_args, "Initial state v1,...,vn (repeatable)");
  sim->add_option("--steps", steps, "Number of steps");
  sim->add_option("--schedule", schedule_path, "Offset schedule CSV (step,w)");
  sim->add_option("--geometry", geometry_path, "Write ring and tile boxes to this CSV");
  sim->add_option("--out,-o", out_path, "Trajectory CSV (default: stdout)");

  auto* ver = app.add_subcommand("verify", "Re-check every certificate of an artifact");
  ver->add_option("artifact", artifact_path, "Controller artifact")->required();
  ver->add_option("--config", config_path, "Config to check the artifact against");
  ver->add_option("--csv", csv_path, "Write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*synth) return cmd_synth(config_path, out_path, threads, out, err);
    if (*sim) {
      return cmd_simulate(artifact_path, x0_args, steps, schedule_path, geometry_path, out_path,
                          out, err);
    }
    if (*ver) return cmd_verify(artifact_path, config_path, csv_path, out, err);
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const OutOfDomain& e) {
    err << "error: " << e.what() << '\n';
    return kDomainFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainFailure;
  }
  return kUsageError;
}

}  // namespace switchsynth::cli
