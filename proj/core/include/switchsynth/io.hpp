#pragma once

// Config and artifact files (JSON) and CSV outputs.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "switchsynth/artifact.hpp"
#include "switchsynth/runtime.hpp"

namespace switchsynth {

// Relative schedule paths are resolved against `base_dir`. Throws
// ConfigurationError naming the offending field.
Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

std::string artifact_to_json(const ControllerArtifact& artifact);
ControllerArtifact artifact_from_json(std::string_view text);
void save_artifact(const ControllerArtifact& artifact, const std::filesystem::path& path);
ControllerArtifact load_artifact(const std::filesystem::path& path);

// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

// step,time_s,x_1..x_n,mode_label,ring,phase
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const SwitchedSystem& sys);
// One row per box and dimension: kind,ring,component,tile,dim,lo,hi
void write_geometry_csv(std::ostream& out, const ControllerArtifact& artifact);
// id,passed,detail
void write_report_csv(std::ostream& out, const VerificationReport& report);

}  // namespace switchsynth
