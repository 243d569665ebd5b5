#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesslab/config.hpp"

namespace nesslab {

/// Tabular result, written as <name>.csv with one header row.  Headers name
/// the quantity and its unit convention (k_B = 1 throughout).
struct ResultTable {
  std::string name;
  std::vector<std::string> headers;
  std::vector<std::vector<double>> rows;
};

struct ResultRecord {
  std::string schema = "nesslab-1";
  std::uint64_t hash = 0;
  std::string study;
  std::string summary;  // contents of summary.json
  std::vector<ResultTable> tables;
  bool failed = false;  // set when every replica of a run study failed
  bool complete = true;  // false when a replica cap left work pending
  double wall_seconds = 0.0;
  std::string output;
};

struct RunnerOptions {
  // Stop after this many newly computed replicas (run study only); -1 is
  // unlimited.  Lets tests exercise checkpoint resumption.
  int max_new_replicas = -1;
};

/// config.jobs when positive, else NESSLAB_JOBS, else one worker.
int resolve_jobs(const ExperimentConfig& config);

/// Dispatches the selected study, writes config.json, summary.json, the CSV
/// tables, meta.json (wall clock; the only non-reproducible file), and for
/// replicated studies a checkpoint enabling resumption at the last completed
/// replica.  Specification problems throw SpecError; numerical failures of
/// single-shot studies throw NumericsError; per-replica failures of a run
/// study are recorded in the summary instead.
ResultRecord run_experiment(const ExperimentConfig& config, const RunnerOptions& options = {});

}  // namespace nesslab
