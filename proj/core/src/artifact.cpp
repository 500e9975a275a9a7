#include "switchsynth/artifact.hpp"

#include "switchsynth/errors.hpp"

#ifndef SWITCHSYNTH_VERSION
#define SWITCHSYNTH_VERSION "0.0.0"
#endif

namespace switchsynth {

std::string to_string(SynthesisMode mode) {
  switch (mode) {
    case SynthesisMode::centralized:
      return "centralized";
    case SynthesisMode::distributed:
      return "distributed";
    case SynthesisMode::stability:
      return "stability";
  }
  return "unknown";
}

const char* tool_version() { return SWITCHSYNTH_VERSION; }

Box ControllerArtifact::capture_set() const {
  if (!rings.empty()) return rings.back().extended;
  if (!dist_rings.empty()) return dist_rings.back().extended();
  return R;
}

double ControllerArtifact::total_extension() const {
  return switchsynth::total_extension(std::span<const Ring>(rings)) +
         switchsynth::total_extension(std::span<const DistRing>(dist_rings));
}

std::size_t ControllerArtifact::ring_count() const { return rings.size() + dist_rings.size(); }

bool ControllerArtifact::operator==(const ControllerArtifact& o) const {
  const auto same_options = [](const SynthesisOptions& a, const SynthesisOptions& b) {
    return a.max_pattern_length == b.max_pattern_length && a.max_depth == b.max_depth &&
           a.extension == b.extension && a.eta == b.eta && a.max_rings == b.max_rings &&
           a.slack == b.slack && a.strategy == b.strategy && a.max_extension == b.max_extension;
  };
  return config_hash == o.config_hash && tool_version == o.tool_version && mode == o.mode &&
         system == o.system && R == o.R && same_options(options, o.options) &&
         epsilon == o.epsilon && runtime == o.runtime && rings == o.rings &&
         stability == o.stability && dist_rings == o.dist_rings &&
         dist_stability == o.dist_stability && stop_reason == o.stop_reason &&
         stop_detail == o.stop_detail;
}

ControllerArtifact synthesize(const Config& config, std::vector<std::string>* warnings) {
  const auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  const SwitchedSystem& sys = config.system;
  if (config.R.dims() != static_cast<std::size_t>(sys.dimension())) {
    throw ConfigurationError("R: expected " + std::to_string(sys.dimension()) + " intervals");
  }

  ControllerArtifact art;
  art.config_hash = config.hash;
  art.tool_version = tool_version();
  art.mode = config.mode;
  art.system = sys;
  art.R = config.R;
  art.options = config.options;
  art.epsilon = config.epsilon;
  art.runtime = config.runtime;

  switch (config.mode) {
    case SynthesisMode::centralized: {
      IterationResult it = iterate_synthesis(sys, config.R, config.options);
      if (it.rings.empty()) {
        // Rebuild the first ring to surface its bad tiles.
        macro_step_synthesis(sys, config.R, config.options);
        throw RefinementFailure("no ring could be synthesized: " + it.detail, {},
                                config.options.max_depth);
      }
      art.rings = std::move(it.rings);
      art.stop_reason = it.reason;
      art.stop_detail = it.detail;
      if (config.epsilon) {
        try {
          art.stability = stability_synthesis(sys, config.R, config.options, *config.epsilon);
        } catch (const RefinementFailure& e) {
          warn(std::string("no stability ring: ") + e.what());
        }
      }
      break;
    }
    case SynthesisMode::distributed: {
      if (!config.epsilon) throw ConfigurationError("synthesis.epsilon is required for distributed mode");
      check_distributable(sys);
      const int n1 = sys.dims(Component::first);
      const Box R1 = config.R.slice(0, static_cast<std::size_t>(n1));
      const Box R2 = config.R.slice(static_cast<std::size_t>(n1),
                                    static_cast<std::size_t>(sys.dims(Component::second)));
      DistIterationResult it =
          iterate_synthesis_distributed(sys, R1, R2, config.options, *config.epsilon);
      if (it.rings.empty()) {
        macro_step_synthesis_distributed(sys, R1, R2, config.options, *config.epsilon);
        throw RefinementFailure("no ring could be synthesized: " + it.detail, {},
                                config.options.max_depth);
      }
      art.dist_rings = std::move(it.rings);
      art.stop_reason = it.reason;
      art.stop_detail = it.detail;
      try {
        art.dist_stability =
            stability_synthesis_distributed(sys, R1, R2, config.options, *config.epsilon);
      } catch (const RefinementFailure& e) {
        warn(std::string("no stability ring: ") + e.what());
      }
      break;
    }
    case SynthesisMode::stability: {
      if (!config.epsilon) throw ConfigurationError("synthesis.epsilon is required for stability mode");
      art.stability = stability_synthesis(sys, config.R, config.options, *config.epsilon);
      art.stop_reason = StopReason::max_rings;
      art.stop_detail = "stability ring only";
      break;
    }
  }
  return art;
}

}  // namespace switchsynth
