#pragma once

#include <cstdint>
#include <string>

#include "nesslab/dynamics.hpp"
#include "nesslab/kmp.hpp"
#include "nesslab/lattice.hpp"
#include "nesslab/thermostats.hpp"
#include "nesslab/transport.hpp"

namespace nesslab {

enum class StudyKind { Run, Sweep, Oracle, GreenKubo, Ldf, Kmp };

std::string study_name(StudyKind kind);
StudyKind study_from_name(const std::string& name);

struct RunParams {
  int replicas = 1;
  int blocks = 32;
};

struct GreenKuboParams {
  double temperature = 0.0;  // 0 selects the mean reservoir temperature
  GreenKuboOptions options;
};

struct KmpParams {
  KmpSpec spec;
  KmpOptions options;
};

/// Full experiment description.  Every field has a default, and serialization
/// echoes all of them, so a parsed config round-trips byte for byte.
struct ExperimentConfig {
  StudyKind study = StudyKind::Run;
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 defers to NESSLAB_JOBS, then to one worker
  std::string output = "out";
  LatticeSpec lattice;
  ReservoirSpec reservoir;
  IntegratorSpec integrator;  // integrator.seed is overwritten by the top-level seed
  RunParams run;
  ScanOptions sweep;  // seed/jobs/use_oracle are filled in at dispatch time
  GreenKuboParams gk;
  LdfOptions ldf;
  KmpParams kmp;

  /// Structural checks beyond what parsing enforces; throws SpecError.
  void validate() const;
};

/// Parse a UTF-8 JSON document.  Unknown keys anywhere are rejected with a
/// path-qualified message; value errors carry the object path as well.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

/// JSON with every default explicit, keys sorted, two-space indent.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the serialized form with the output directory and worker
/// count blanked, so the hash identifies the result-determining fields only.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace nesslab
