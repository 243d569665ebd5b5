#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "nesslab/runner.hpp"

using namespace nesslab;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_SUITE_BEGIN("runner");

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (const char c : text)
    if (c == '\n') ++n;
  return n;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("runner_scratch") / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig short_run_config(const std::string& out, int replicas) {
  ExperimentConfig c;
  c.study = StudyKind::Run;
  c.seed = 404;
  c.output = out;
  c.lattice.n1 = 6;
  c.lattice.pair = PairPotential::harmonic(1.0);
  c.reservoir = ReservoirSpec::langevin(1.2, 0.8, 1.0, 1.0);
  c.integrator.steps = 6000;
  c.integrator.burn_in = 1000;
  c.integrator.stride = 5;
  c.integrator.dt = 0.05;
  c.run.replicas = replicas;
  c.run.blocks = 8;
  return c;
}

std::set<std::string> keys(const json& j) {
  std::set<std::string> out;
  for (const auto& item : j.items()) out.insert(item.key());
  return out;
}

}  // namespace

TEST_CASE("jobs resolution order: config, environment, fallback") {
  ExperimentConfig c;
  c.jobs = 3;
  setenv("NESSLAB_JOBS", "2", 1);
  CHECK(resolve_jobs(c) == 3);
  c.jobs = 0;
  CHECK(resolve_jobs(c) == 2);
  setenv("NESSLAB_JOBS", "junk", 1);
  CHECK(resolve_jobs(c) == 1);
  unsetenv("NESSLAB_JOBS");
  CHECK(resolve_jobs(c) == 1);
}

TEST_CASE("oracle study emits the ballistic-chain observables") {
  const fs::path dir = fresh_dir("oracle");
  ExperimentConfig c;
  c.study = StudyKind::Oracle;
  c.output = dir.string();
  c.lattice.n1 = 8;
  c.reservoir = ReservoirSpec::langevin(1.2, 0.8, 1.0, 1.0);
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  CHECK_FALSE(rec.failed);

  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s.at("study") == "oracle");
  CHECK(s.at("observables").at("flux").at("mean").get<double>() ==
        doctest::Approx(0.1).epsilon(1e-9));
  CHECK(s.at("observables").at("kappa").at("mean").get<double>() ==
        doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.at("observables").at("sigma").at("mean").get<double>() > 0.0);
  const auto prof = s.at("observables").at("profile").at("values");
  REQUIRE(prof.size() == 8);
  CHECK(prof[0].get<double>() == doctest::Approx(1.1).epsilon(1e-9));
  CHECK(prof[7].get<double>() == doctest::Approx(0.9).epsilon(1e-9));

  const std::string csv = slurp(dir / "profile.csv");
  CHECK(line_count(csv) == 9);
  CHECK(csv.find("kB=1") != std::string::npos);
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "meta.json"));
}

TEST_CASE("sweep over three lengths emits three table rows") {
  const fs::path dir = fresh_dir("sweep");
  ExperimentConfig c;
  c.study = StudyKind::Sweep;
  c.seed = 11;
  c.output = dir.string();
  c.lattice.n1 = 4;
  c.reservoir = ReservoirSpec::langevin(1.2, 0.8, 1.0, 1.0);
  c.integrator.steps = 4000;
  c.integrator.burn_in = 500;
  c.integrator.stride = 5;
  c.integrator.dt = 0.05;
  c.sweep.lengths = {4, 6, 8};
  c.sweep.replicas = 1;
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  const std::string csv = slurp(dir / "kappa_scaling.csv");
  CHECK(line_count(csv) == 4);
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s.at("details").at("table").size() == 3);
  CHECK(s.at("observables").contains("alpha"));
}

TEST_CASE("run study files are byte identical across reruns") {
  const fs::path dir = fresh_dir("rerun");
  const ExperimentConfig c = short_run_config(dir.string(), 2);
  run_experiment(c);
  const std::string summary1 = slurp(dir / "summary.json");
  const std::string profile1 = slurp(dir / "profile.csv");
  const std::string series1 = slurp(dir / "series_replica_0.csv");
  const std::string checkpoint1 = slurp(dir / "checkpoint.json");

  fs::remove_all(dir);
  run_experiment(c);
  CHECK(slurp(dir / "summary.json") == summary1);
  CHECK(slurp(dir / "profile.csv") == profile1);
  CHECK(slurp(dir / "series_replica_0.csv") == series1);
  CHECK(slurp(dir / "checkpoint.json") == checkpoint1);

  const json s = json::parse(summary1);
  CHECK(s.at("details").at("replicas_done") == 2);
  CHECK(s.at("observables").at("flux").at("mean").get<double>() != 0.0);
  const int rows = line_count(series1) - 1;
  CHECK(rows == (6000 - 1000) / 5);
}

TEST_CASE("interrupted run resumes from the checkpoint with identical output") {
  const fs::path full_dir = fresh_dir("resume_full");
  const fs::path part_dir = fresh_dir("resume_part");
  const ExperimentConfig full = short_run_config(full_dir.string(), 3);
  run_experiment(full);

  ExperimentConfig partial = short_run_config(part_dir.string(), 3);
  RunnerOptions cap;
  cap.max_new_replicas = 1;
  const ResultRecord first = run_experiment(partial, cap);
  CHECK_FALSE(first.complete);
  CHECK_FALSE(fs::exists(part_dir / "summary.json"));
  CHECK(fs::exists(part_dir / "checkpoint.json"));
  const json ck = json::parse(slurp(part_dir / "checkpoint.json"));
  CHECK(ck.at("replicas").size() == 1);
  CHECK(ck.at("replicas").at("0").at("state").at("q").size() == 6);

  const ResultRecord second = run_experiment(partial);
  CHECK(second.complete);
  CHECK(slurp(part_dir / "summary.json") == slurp(full_dir / "summary.json"));
  CHECK(slurp(part_dir / "checkpoint.json") == slurp(full_dir / "checkpoint.json"));
  CHECK(slurp(part_dir / "profile.csv") == slurp(full_dir / "profile.csv"));
  CHECK(slurp(part_dir / "series_replica_2.csv") == slurp(full_dir / "series_replica_2.csv"));
}

TEST_CASE("blow-up is recorded as a failed replica, not a crash") {
  const fs::path dir = fresh_dir("blowup");
  ExperimentConfig c = short_run_config(dir.string(), 1);
  c.integrator.dt = 3.0;  // far beyond the stability limit
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  CHECK(rec.failed);
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s.at("details").at("replicas_failed") == 1);
  const auto& rep = s.at("details").at("replicas").at(0);
  CHECK(rep.at("status") == "failed");
  CHECK(rep.at("message").get<std::string>().find("non-finite") != std::string::npos);
}

TEST_CASE("oracle and run summaries share a schema") {
  const fs::path run_dir = fresh_dir("schema_run");
  const fs::path oracle_dir = fresh_dir("schema_oracle");
  ExperimentConfig rc = short_run_config(run_dir.string(), 1);
  run_experiment(rc);
  ExperimentConfig oc;
  oc.study = StudyKind::Oracle;
  oc.output = oracle_dir.string();
  oc.lattice = rc.lattice;
  oc.reservoir = rc.reservoir;
  run_experiment(oc);

  const json run_summary = json::parse(slurp(run_dir / "summary.json"));
  const json oracle_summary = json::parse(slurp(oracle_dir / "summary.json"));
  CHECK(keys(run_summary) == keys(oracle_summary));
  CHECK(keys(run_summary.at("observables")) == keys(oracle_summary.at("observables")));
  CHECK(run_summary.at("observables").at("profile").at("values").size() ==
        oracle_summary.at("observables").at("profile").at("values").size());
}

TEST_CASE("green-kubo study writes the correlation table") {
  const fs::path dir = fresh_dir("gk");
  ExperimentConfig c;
  c.study = StudyKind::GreenKubo;
  c.seed = 9;
  c.output = dir.string();
  c.lattice.n1 = 6;
  c.lattice.onsite = OnsitePotential::pinned(1.0);
  c.gk.temperature = 1.0;
  c.gk.options.t_max = 2.0;
  c.gk.options.replicas = 2;
  c.integrator.steps = 3000;
  c.integrator.burn_in = 500;
  c.integrator.stride = 5;
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s.at("observables").at("c0").at("mean").get<double>() > 0.0);
  const std::string csv = slurp(dir / "gk_correlation.csv");
  CHECK(line_count(csv) >= 3);
}

TEST_CASE("ldf study writes the bin table") {
  const fs::path dir = fresh_dir("ldf");
  ExperimentConfig c;
  c.study = StudyKind::Ldf;
  c.seed = 21;
  c.output = dir.string();
  c.lattice.n1 = 4;
  c.reservoir = ReservoirSpec::langevin(1.3, 0.7, 1.0, 1.0);
  c.integrator.dt = 0.05;
  c.integrator.burn_in = 500;
  c.integrator.stride = 4;
  c.integrator.steps = 1;  // resized by segments
  c.ldf.segment_time = 2.0;
  c.ldf.segments = 200;
  c.ldf.bins = 12;
  c.ldf.min_count = 5;
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  const std::string csv = slurp(dir / "ldf_bins.csv");
  CHECK(line_count(csv) == 13);
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s.at("observables").at("sigma_mean").at("mean").get<double>() > 0.0);
}

TEST_CASE("kmp study reports the bulk conductivity") {
  const fs::path dir = fresh_dir("kmp");
  ExperimentConfig c;
  c.study = StudyKind::Kmp;
  c.seed = 33;
  c.output = dir.string();
  c.kmp.spec.sites = 12;
  c.kmp.options.events = 300000;
  c.kmp.options.burn_in_events = 30000;
  const ResultRecord rec = run_experiment(c);
  CHECK(rec.complete);
  const json s = json::parse(slurp(dir / "summary.json"));
  const double kb = s.at("observables").at("kappa_bulk").at("mean").get<double>();
  const double kb_err = s.at("observables").at("kappa_bulk").at("err").get<double>();
  CHECK(std::abs(kb - 0.5) < 5.0 * kb_err);
  const std::string csv = slurp(dir / "kmp_profile.csv");
  CHECK(line_count(csv) == 13);
}

TEST_SUITE_END();
