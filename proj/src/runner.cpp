#include "nesslab/runner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "nesslab/harmonic_exact.hpp"
#include "nesslab/parallel.hpp"

namespace nesslab {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint32_t kRunStudyTag = 5u << 24;
constexpr const char* kSummarySchema = "nesslab-summary-1";
constexpr const char* kCheckpointSchema = "nesslab-checkpoint-1";

std::string hex_hash(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SpecError("cannot write " + path.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string render_csv(const ResultTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.headers.size(); ++i)
    out << (i ? "," : "") << table.headers[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_value(row[i]);
    out << "\n";
  }
  return out.str();
}

json array_json(const Eigen::ArrayXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::ArrayXd array_from_json(const json& a) {
  Eigen::ArrayXd v(static_cast<int>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

json scalar_json(double mean, double err) {
  return json{{"mean", mean}, {"err", err}};
}

json state_json(const SystemState& s) {
  json j;
  j["q"] = array_json(s.q);
  j["p"] = array_json(s.p);
  j["aux_left"] = s.aux_left;
  j["aux_right"] = s.aux_right;
  j["has_aux"] = s.has_aux;
  j["time"] = s.time;
  return j;
}

SystemState state_from_json(const json& j) {
  SystemState s;
  s.q = array_from_json(j.at("q"));
  s.p = array_from_json(j.at("p"));
  s.aux_left = j.at("aux_left").get<double>();
  s.aux_right = j.at("aux_right").get<double>();
  s.has_aux = j.at("has_aux").get<bool>();
  s.time = j.at("time").get<double>();
  return s;
}

std::string iso_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- run study -------------------------------------------------------------

struct ReplicaOutcome {
  int index = 0;
  bool failed = false;
  std::string message;
  std::uint64_t run_seed = 0;
  double dt = 0.0;
  std::int64_t steps = 0;
  double flux = 0.0, flux_err = 0.0;  // per unit cross-section area
  double heat_left = 0.0, heat_left_err = 0.0;
  double heat_right = 0.0, heat_right_err = 0.0;
  double sigma = 0.0, sigma_err = 0.0;
  Eigen::ArrayXd profile, profile_err, plane_current, plane_current_err;
  SystemState state;
};

json outcome_json(const ReplicaOutcome& o) {
  json j;
  j["status"] = o.failed ? "failed" : "done";
  j["message"] = o.message;
  j["seed"] = o.run_seed;
  j["dt"] = o.dt;
  j["steps"] = o.steps;
  if (!o.failed) {
    j["flux"] = scalar_json(o.flux, o.flux_err);
    j["heat_left"] = scalar_json(o.heat_left, o.heat_left_err);
    j["heat_right"] = scalar_json(o.heat_right, o.heat_right_err);
    j["sigma"] = scalar_json(o.sigma, o.sigma_err);
    j["profile"] = array_json(o.profile);
    j["profile_err"] = array_json(o.profile_err);
    j["plane_current"] = array_json(o.plane_current);
    j["plane_current_err"] = array_json(o.plane_current_err);
    j["state"] = state_json(o.state);
    j["rng"] = {{"seed", o.run_seed},
                {"initial_stream", 0},
                {"trajectory_stream", 1},
                {"steps_used", o.steps}};
  }
  return j;
}

ReplicaOutcome outcome_from_json(const json& j, int index) {
  ReplicaOutcome o;
  o.index = index;
  o.failed = j.at("status").get<std::string>() == "failed";
  o.message = j.value("message", "");
  o.run_seed = j.at("seed").get<std::uint64_t>();
  o.dt = j.at("dt").get<double>();
  o.steps = j.at("steps").get<std::int64_t>();
  if (!o.failed) {
    o.flux = j.at("flux").at("mean").get<double>();
    o.flux_err = j.at("flux").at("err").get<double>();
    o.heat_left = j.at("heat_left").at("mean").get<double>();
    o.heat_left_err = j.at("heat_left").at("err").get<double>();
    o.heat_right = j.at("heat_right").at("mean").get<double>();
    o.heat_right_err = j.at("heat_right").at("err").get<double>();
    o.sigma = j.at("sigma").at("mean").get<double>();
    o.sigma_err = j.at("sigma").at("err").get<double>();
    o.profile = array_from_json(j.at("profile"));
    o.profile_err = array_from_json(j.at("profile_err"));
    o.plane_current = array_from_json(j.at("plane_current"));
    o.plane_current_err = array_from_json(j.at("plane_current_err"));
    o.state = state_from_json(j.at("state"));
  }
  return o;
}

ReplicaOutcome compute_replica(const ExperimentConfig& config, int index, ResultTable* series) {
  ReplicaOutcome o;
  o.index = index;
  o.run_seed = derive_key(config.seed, kRunStudyTag + static_cast<std::uint32_t>(index));
  const Lattice lat(config.lattice);
  IntegratorSpec integ = config.integrator;
  integ.seed = o.run_seed;
  const double area = lat.spec().cross_section();
  try {
    CounterRng rng(o.run_seed, 0);
    const double t0 = 0.5 * (config.reservoir.t_left + config.reservoir.t_right);
    const SystemState init = sample_gibbs(lat, t0, rng);
    SimulationOptions sopt;
    sopt.blocks = config.run.blocks;
    const SimulationResult sim = simulate(lat, config.reservoir, integ, init, sopt);
    o.dt = sim.dt;
    o.steps = sim.steps;
    o.flux = sim.current.mean / area;
    o.flux_err = sim.current.stderr_ / area;
    o.heat_left = sim.heat_left.mean;
    o.heat_left_err = sim.heat_left.stderr_;
    o.heat_right = sim.heat_right.mean;
    o.heat_right_err = sim.heat_right.stderr_;
    o.sigma = sim.sigma.mean;
    o.sigma_err = sim.sigma.stderr_;
    o.profile = sim.profile;
    o.profile_err = sim.profile_err;
    o.plane_current = sim.plane_current;
    o.plane_current_err = sim.plane_current_err;
    o.state = sim.final_state;
    if (series) {
      series->name = "series_replica_" + std::to_string(index);
      series->headers = {"time (kB=1 units)", "heat_current_per_area (kB=1 units)",
                         "heat_into_left_bath (kB=1 units)",
                         "heat_into_right_bath (kB=1 units)", "entropy_rate (kB=1 units)"};
      const std::size_t n = sim.current.values.size();
      const bool heats = sim.heat_left.values.size() == n && sim.sigma.values.size() == n;
      for (std::size_t i = 0; i < n; ++i) {
        series->rows.push_back({sim.current.times[i], sim.current.values[i] / area,
                                heats ? sim.heat_left.values[i] : 0.0,
                                heats ? sim.heat_right.values[i] : 0.0,
                                heats ? sim.sigma.values[i] : 0.0});
      }
    }
  } catch (const NumericsError& e) {
    o.failed = true;
    o.message = e.what();
  }
  return o;
}

void write_checkpoint(const fs::path& path, std::uint64_t hash,
                      const std::vector<ReplicaOutcome>& outcomes,
                      const std::vector<bool>& have) {
  json ck;
  ck["schema"] = kCheckpointSchema;
  ck["config_hash"] = hex_hash(hash);
  json reps = json::object();
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (have[i]) reps[std::to_string(i)] = outcome_json(outcomes[i]);
  ck["replicas"] = reps;
  atomic_write(path, ck.dump(2) + "\n");
}

void pool_profiles(const std::vector<const Eigen::ArrayXd*>& means,
                   const std::vector<const Eigen::ArrayXd*>& errs, Eigen::ArrayXd& mean_out,
                   Eigen::ArrayXd& err_out) {
  const int n = static_cast<int>(means[0]->size());
  const double r = static_cast<double>(means.size());
  mean_out = Eigen::ArrayXd::Zero(n);
  err_out = Eigen::ArrayXd::Zero(n);
  for (std::size_t k = 0; k < means.size(); ++k) {
    mean_out += *means[k];
    err_out += errs[k]->square();
  }
  mean_out /= r;
  err_out = err_out.sqrt() / r;
}

void run_study(const ExperimentConfig& config, const RunnerOptions& options,
               const fs::path& dir, std::uint64_t hash, ResultRecord& record) {
  const int total = config.run.replicas;
  std::vector<ReplicaOutcome> outcomes(total);
  std::vector<bool> have(total, false);

  const fs::path ckpath = dir / "checkpoint.json";
  if (fs::exists(ckpath)) {
    try {
      std::ifstream in(ckpath);
      const json ck = json::parse(in);
      if (ck.value("schema", "") == kCheckpointSchema &&
          ck.value("config_hash", "") == hex_hash(hash)) {
        for (const auto& item : ck.at("replicas").items()) {
          const int idx = std::stoi(item.key());
          if (idx >= 0 && idx < total) {
            outcomes[idx] = outcome_from_json(item.value(), idx);
            have[idx] = true;
          }
        }
      }
    } catch (...) {
      // unreadable or mismatched checkpoint: recompute from scratch
      std::fill(have.begin(), have.end(), false);
    }
  }

  std::vector<int> pending;
  for (int i = 0; i < total; ++i)
    if (!have[i]) pending.push_back(i);
  int budget = options.max_new_replicas < 0
                   ? static_cast<int>(pending.size())
                   : std::min<int>(options.max_new_replicas, static_cast<int>(pending.size()));
  const int jobs = resolve_jobs(config);

  std::size_t next = 0;
  while (budget > 0) {
    const int chunk = std::min(budget, jobs);
    std::vector<ReplicaOutcome> fresh(chunk);
    std::vector<ResultTable> series(chunk);
    parallel_for(chunk, jobs, [&](int k) {
      fresh[k] = compute_replica(config, pending[next + k], &series[k]);
    });
    for (int k = 0; k < chunk; ++k) {
      const int idx = pending[next + k];
      outcomes[idx] = std::move(fresh[k]);
      have[idx] = true;
      if (!outcomes[idx].failed)
        atomic_write(dir / (series[k].name + ".csv"), render_csv(series[k]));
    }
    next += chunk;
    budget -= chunk;
    write_checkpoint(ckpath, hash, outcomes, have);
  }

  for (int i = 0; i < total; ++i)
    if (!have[i]) {
      record.complete = false;
      return;
    }

  std::vector<int> done;
  for (int i = 0; i < total; ++i)
    if (!outcomes[i].failed) done.push_back(i);
  record.failed = done.empty();

  json obs;
  const double t_l = config.reservoir.t_left;
  const double t_r = config.reservoir.t_right;
  const bool driven = config.reservoir.kind != ReservoirKind::None;
  obs["mean_t"] = 0.5 * (t_l + t_r);
  obs["delta_t"] = driven ? t_l - t_r : 0.0;
  if (!done.empty()) {
    auto pooled = [&](double ReplicaOutcome::*mean, double ReplicaOutcome::*err) {
      std::vector<double> m, e;
      for (const int i : done) {
        m.push_back(outcomes[i].*mean);
        e.push_back(outcomes[i].*err);
      }
      double mo = 0.0, eo = 0.0;
      pool_estimates(m, e, mo, eo);
      return scalar_json(mo, eo);
    };
    obs["flux"] = pooled(&ReplicaOutcome::flux, &ReplicaOutcome::flux_err);
    obs["heat_left"] = pooled(&ReplicaOutcome::heat_left, &ReplicaOutcome::heat_left_err);
    obs["heat_right"] = pooled(&ReplicaOutcome::heat_right, &ReplicaOutcome::heat_right_err);
    obs["sigma"] = pooled(&ReplicaOutcome::sigma, &ReplicaOutcome::sigma_err);
    const double delta_t = obs["delta_t"].get<double>();
    if (driven && delta_t != 0.0) {
      const double scale = config.lattice.n1 / delta_t;
      obs["kappa"] = scalar_json(obs["flux"]["mean"].get<double>() * scale,
                                 obs["flux"]["err"].get<double>() * std::abs(scale));
    } else {
      obs["kappa"] = scalar_json(0.0, 0.0);
    }

    std::vector<const Eigen::ArrayXd*> pm, pe, cm, ce;
    for (const int i : done) {
      pm.push_back(&outcomes[i].profile);
      pe.push_back(&outcomes[i].profile_err);
      cm.push_back(&outcomes[i].plane_current);
      ce.push_back(&outcomes[i].plane_current_err);
    }
    Eigen::ArrayXd prof, prof_err, cur, cur_err;
    pool_profiles(pm, pe, prof, prof_err);
    pool_profiles(cm, ce, cur, cur_err);
    obs["profile"] = {{"values", array_json(prof)}, {"err", array_json(prof_err)}};

    ResultTable profile_table;
    profile_table.name = "profile";
    profile_table.headers = {"plane (index)", "temperature (kB=1 units)",
                             "std_error (kB=1 units)"};
    for (int i = 0; i < prof.size(); ++i)
      profile_table.rows.push_back({static_cast<double>(i), prof[i], prof_err[i]});
    record.tables.push_back(std::move(profile_table));

    const double area = config.lattice.n2;
    ResultTable current_table;
    current_table.name = "plane_current";
    current_table.headers = {"plane (index)", "heat_current_per_area (kB=1 units)",
                             "std_error (kB=1 units)"};
    for (int i = 0; i < cur.size(); ++i)
      current_table.rows.push_back({static_cast<double>(i), cur[i] / area, cur_err[i] / area});
    record.tables.push_back(std::move(current_table));
  } else {
    obs["flux"] = scalar_json(0.0, 0.0);
    obs["heat_left"] = scalar_json(0.0, 0.0);
    obs["heat_right"] = scalar_json(0.0, 0.0);
    obs["sigma"] = scalar_json(0.0, 0.0);
    obs["kappa"] = scalar_json(0.0, 0.0);
    obs["profile"] = {{"values", json::array()}, {"err", json::array()}};
  }

  json reps = json::array();
  for (int i = 0; i < total; ++i) {
    const ReplicaOutcome& o = outcomes[i];
    json r;
    r["index"] = i;
    r["status"] = o.failed ? "failed" : "done";
    r["message"] = o.message;
    r["seed"] = o.run_seed;
    if (!o.failed) {
      r["flux"] = scalar_json(o.flux, o.flux_err);
      r["sigma"] = scalar_json(o.sigma, o.sigma_err);
    }
    reps.push_back(std::move(r));
  }
  json details;
  details["replicas"] = std::move(reps);
  details["replicas_done"] = static_cast<int>(done.size());
  details["replicas_failed"] = total - static_cast<int>(done.size());
  details["dt"] = done.empty() ? 0.0 : outcomes[done.front()].dt;
  details["steps"] = config.integrator.steps;
  details["blocks"] = config.run.blocks;

  json s;
  s["schema"] = kSummarySchema;
  s["config_hash"] = hex_hash(hash);
  s["study"] = "run";
  s["observables"] = std::move(obs);
  s["details"] = std::move(details);
  record.summary = s.dump(2) + "\n";
}

// --- single-shot studies ---------------------------------------------------

json summary_envelope(std::uint64_t hash, const std::string& study, json obs, json details) {
  json s;
  s["schema"] = kSummarySchema;
  s["config_hash"] = hex_hash(hash);
  s["study"] = study;
  s["observables"] = std::move(obs);
  s["details"] = std::move(details);
  return s;
}

ResultTable scan_table(const ConductivityScan& scan) {
  ResultTable t;
  t.name = "kappa_scaling";
  t.headers = {"length (sites)",         "flux_per_area (kB=1 units)",
               "flux_err (kB=1 units)",  "kappa (kB=1 units)",
               "kappa_err (kB=1 units)", "replicas_used (count)",
               "in_fit (0 or 1)"};
  for (const auto& p : scan.table)
    t.rows.push_back({static_cast<double>(p.length), p.flux, p.flux_err, p.kappa,
                      p.kappa_err, static_cast<double>(p.replicas_used),
                      p.in_fit ? 1.0 : 0.0});
  return t;
}

json fit_json(const ExponentFit& fit) {
  return json{{"alpha", fit.alpha},
              {"alpha_err", fit.alpha_err},
              {"log_prefactor", fit.log_prefactor},
              {"points", fit.points}};
}

bool sweep_lengths_usable(const ExperimentConfig& config) {
  return config.sweep.lengths.size() >= 3;
}

json scan_points_json(const ConductivityScan& scan) {
  json rows = json::array();
  for (const auto& p : scan.table) {
    json r;
    r["length"] = p.length;
    r["flux"] = scalar_json(p.flux, p.flux_err);
    r["kappa"] = scalar_json(p.kappa, p.kappa_err);
    r["replicas_used"] = p.replicas_used;
    r["in_fit"] = p.in_fit;
    r["flag"] = p.flag;
    rows.push_back(std::move(r));
  }
  return rows;
}

void oracle_study(const ExperimentConfig& config, const fs::path&, std::uint64_t hash,
                  ResultRecord& record) {
  const Lattice lat(config.lattice);
  const LinearSDEModel model = build_linear_model(config.lattice, config.reservoir);
  const StationaryCovariance cov = stationary_covariance(model);
  const ExactObservables exact = exact_observables(model, cov);

  const double area = config.lattice.n2;
  const double t_l = config.reservoir.t_left;
  const double t_r = config.reservoir.t_right;
  const double delta_t = t_l - t_r;
  const double flux_area = exact.flux / area;

  json obs;
  obs["mean_t"] = 0.5 * (t_l + t_r);
  obs["delta_t"] = delta_t;
  obs["flux"] = scalar_json(flux_area, 0.0);
  obs["heat_left"] = scalar_json(-exact.flux, 0.0);
  obs["heat_right"] = scalar_json(exact.flux, 0.0);
  obs["sigma"] = scalar_json(exact.flux * (1.0 / t_r - 1.0 / t_l), 0.0);
  obs["kappa"] = scalar_json(delta_t != 0.0 ? flux_area * config.lattice.n1 / delta_t : 0.0, 0.0);

  Eigen::ArrayXd prof(config.lattice.n1);
  for (int j = 0; j < config.lattice.n1; ++j) {
    double acc = 0.0;
    const auto sites = lat.plane_sites(j);
    for (const int s : sites) acc += exact.profile[s];
    prof[j] = acc / static_cast<double>(sites.size());
  }
  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(prof.size());
  obs["profile"] = {{"values", array_json(prof)}, {"err", array_json(zero)}};

  ResultTable profile_table;
  profile_table.name = "profile";
  profile_table.headers = {"plane (index)", "temperature (kB=1 units)",
                           "std_error (kB=1 units)"};
  for (int i = 0; i < prof.size(); ++i)
    profile_table.rows.push_back({static_cast<double>(i), prof[i], 0.0});
  record.tables.push_back(std::move(profile_table));

  json details;
  details["method"] = "stationary covariance";
  details["lyapunov_residual"] = cov.residual;
  if (sweep_lengths_usable(config)) {
    ScanOptions sopt = config.sweep;
    sopt.seed = config.seed;
    sopt.jobs = resolve_jobs(config);
    sopt.use_oracle = true;
    const ConductivityScan scan =
        conductivity_scan(config.lattice, config.reservoir, config.integrator, sopt);
    record.tables.push_back(scan_table(scan));
    details["fit"] = fit_json(scan.fit);
    details["table"] = scan_points_json(scan);
  }

  record.summary = summary_envelope(hash, "oracle", std::move(obs), std::move(details)).dump(2) + "\n";
}

void sweep_study(const ExperimentConfig& config, std::uint64_t hash, ResultRecord& record) {
  ScanOptions sopt = config.sweep;
  sopt.seed = config.seed;
  sopt.jobs = resolve_jobs(config);
  sopt.use_oracle = false;
  const ConductivityScan scan =
      conductivity_scan(config.lattice, config.reservoir, config.integrator, sopt);

  json obs;
  obs["mean_t"] = scan.mean_t;
  obs["delta_t"] = scan.delta_t;
  obs["alpha"] = scalar_json(scan.fit.alpha, scan.fit.alpha_err);

  json details;
  details["fit"] = fit_json(scan.fit);
  details["table"] = scan_points_json(scan);
  details["replicas"] = config.sweep.replicas;

  record.tables.push_back(scan_table(scan));
  record.summary = summary_envelope(hash, "sweep", std::move(obs), std::move(details)).dump(2) + "\n";
}

void gk_study(const ExperimentConfig& config, std::uint64_t hash, ResultRecord& record) {
  const double temperature =
      config.gk.temperature > 0.0
          ? config.gk.temperature
          : 0.5 * (config.reservoir.t_left + config.reservoir.t_right);
  GreenKuboOptions gopt = config.gk.options;
  gopt.jobs = resolve_jobs(config);
  IntegratorSpec integ = config.integrator;
  integ.seed = config.seed;
  const GreenKuboResult gk = green_kubo(config.lattice, temperature, integ, gopt);

  json obs;
  obs["temperature"] = temperature;
  obs["kappa"] = scalar_json(gk.kappa, gk.kappa_err);
  obs["c0"] = scalar_json(gk.c0, gk.c0_err);
  obs["phi_variance"] = scalar_json(gk.phi_variance, gk.phi_variance_err);

  json details;
  details["plateau"] = gk.plateau;
  details["t_max"] = gk.t_max;
  details["truncated"] = gk.truncated;
  details["replicas"] = gk.replicas;

  ResultTable t;
  t.name = "gk_correlation";
  t.headers = {"time (kB=1 units)", "flux_autocorrelation (kB=1 units)",
               "kappa_running (kB=1 units)"};
  for (std::size_t i = 0; i < gk.times.size(); ++i)
    t.rows.push_back({gk.times[i], gk.correlation[i], gk.kappa_of_t[i]});
  record.tables.push_back(std::move(t));

  record.summary = summary_envelope(hash, "gk", std::move(obs), std::move(details)).dump(2) + "\n";
}

void ldf_study(const ExperimentConfig& config, std::uint64_t hash, ResultRecord& record) {
  IntegratorSpec integ = config.integrator;
  integ.seed = config.seed;
  const LdfResult ldf = entropy_ldf(config.lattice, config.reservoir, integ, config.ldf);

  json obs;
  obs["sigma_mean"] = scalar_json(ldf.sigma_mean, ldf.sigma_mean_err);
  obs["segment_mean"] = scalar_json(ldf.segment_mean, ldf.segment_mean_err);
  obs["odd_slope"] = scalar_json(ldf.odd_slope, ldf.odd_slope_err);

  json details;
  details["segment_time"] = ldf.segment_time;
  details["segments"] = ldf.segments;
  details["odd_pairs"] = ldf.odd_pairs;
  details["odd_slope_defined"] = ldf.odd_slope_defined;
  details["normalized"] = ldf.normalized;
  details["bins"] = static_cast<int>(ldf.bins.size());

  ResultTable t;
  t.name = "ldf_bins";
  t.headers = {"segment_rate_p (kB=1 units)", "count (segments)", "density (per unit p)",
               "rate_function (1 per time)", "in_fit (0 or 1)"};
  for (const auto& b : ldf.bins)
    t.rows.push_back({b.p, static_cast<double>(b.count), b.density, b.rate,
                      b.in_fit ? 1.0 : 0.0});
  record.tables.push_back(std::move(t));

  record.summary = summary_envelope(hash, "ldf", std::move(obs), std::move(details)).dump(2) + "\n";
}

void kmp_study(const ExperimentConfig& config, std::uint64_t hash, ResultRecord& record) {
  KmpOptions kopt = config.kmp.options;
  kopt.seed = config.seed;
  const KmpResult res = kmp_run(config.kmp.spec, kopt);

  json obs;
  obs["mean_t"] = 0.5 * (config.kmp.spec.t_left + config.kmp.spec.t_right);
  obs["delta_t"] = config.kmp.spec.t_left - config.kmp.spec.t_right;
  obs["flux"] = scalar_json(res.flux, res.flux_err);
  obs["kappa"] = scalar_json(res.kappa, res.kappa_err);
  obs["kappa_bulk"] = scalar_json(res.kappa_bulk, res.kappa_bulk_err);
  obs["heat_left"] = scalar_json(res.heat_left, 0.0);
  obs["heat_right"] = scalar_json(res.heat_right, 0.0);
  obs["profile"] = {{"values", array_json(res.profile)}, {"err", array_json(res.profile_err)}};

  json details;
  details["events"] = res.events;
  details["total_time"] = res.total_time;
  details["gamma_exchange"] = config.kmp.spec.gamma_exchange;
  details["gamma_boundary"] = config.kmp.spec.gamma_boundary;
  details["sites"] = config.kmp.spec.sites;
  details["blocks"] = config.kmp.options.blocks;

  ResultTable t;
  t.name = "kmp_profile";
  t.headers = {"site (index)", "energy (kB=1 units)", "std_error (kB=1 units)"};
  for (int i = 0; i < res.profile.size(); ++i)
    t.rows.push_back({static_cast<double>(i), res.profile[i], res.profile_err[i]});
  record.tables.push_back(std::move(t));

  record.summary = summary_envelope(hash, "kmp", std::move(obs), std::move(details)).dump(2) + "\n";
}

}  // namespace

int resolve_jobs(const ExperimentConfig& config) {
  if (config.jobs > 0) return config.jobs;
  if (const char* env = std::getenv("NESSLAB_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return 1;
}

ResultRecord run_experiment(const ExperimentConfig& config, const RunnerOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  const std::uint64_t hash = config_hash(config);

  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SpecError("cannot create output directory " + dir.string());

  ResultRecord record;
  record.hash = hash;
  record.study = study_name(config.study);
  record.output = dir.string();

  atomic_write(dir / "config.json", serialize_config(config));

  switch (config.study) {
    case StudyKind::Run:
      run_study(config, options, dir, hash, record);
      break;
    case StudyKind::Sweep:
      sweep_study(config, hash, record);
      break;
    case StudyKind::Oracle:
      oracle_study(config, dir, hash, record);
      break;
    case StudyKind::GreenKubo:
      gk_study(config, hash, record);
      break;
    case StudyKind::Ldf:
      ldf_study(config, hash, record);
      break;
    case StudyKind::Kmp:
      kmp_study(config, hash, record);
      break;
  }

  if (record.complete) {
    atomic_write(dir / "summary.json", record.summary);
    for (const auto& t : record.tables) atomic_write(dir / (t.name + ".csv"), render_csv(t));
  }

  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  json meta;
  meta["schema"] = "nesslab-meta-1";
  meta["wall_seconds"] = record.wall_seconds;
  meta["finished_at"] = iso_now();
  meta["complete"] = record.complete;
  atomic_write(dir / "meta.json", meta.dump(2) + "\n");
  return record;
}

}  // namespace nesslab
