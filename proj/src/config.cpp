#include "nesslab/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"

namespace nesslab {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw SpecError(path + ": " + what);
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail(path, "unknown key \"" + item.key() + "\"");
  }
}

double number_field(const json& j, const std::string& path, const char* key,
                    double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) fail(path + "." + key, "expected a number");
  return it->get<double>();
}

std::int64_t integer_field(const json& j, const std::string& path, const char* key,
                           std::int64_t fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
  return it->get<std::int64_t>();
}

std::uint64_t unsigned_field(const json& j, const std::string& path, const char* key,
                             std::uint64_t fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() &&
                                   it->get<std::int64_t>() < 0))
    fail(path + "." + key, "expected a nonnegative integer");
  return it->get<std::uint64_t>();
}

bool bool_field(const json& j, const std::string& path, const char* key, bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string string_field(const json& j, const std::string& path, const char* key,
                         const std::string& fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<int> int_list_field(const json& j, const std::string& path, const char* key,
                                std::vector<int> fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array()) fail(path + "." + key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& v : *it) {
    if (!v.is_number_integer()) fail(path + "." + key, "expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

// --- potentials -----------------------------------------------------------

PairPotential parse_pair(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string type = string_field(j, path, "type", "harmonic");
  if (type == "harmonic") {
    check_keys(j, path, {"type", "k"});
    return PairPotential::harmonic(number_field(j, path, "k", 1.0));
  }
  if (type == "fpu") {
    check_keys(j, path, {"type", "k2", "k4"});
    return PairPotential::fpu_beta(number_field(j, path, "k2", 1.0),
                                   number_field(j, path, "k4", 1.0));
  }
  if (type == "rotator") {
    check_keys(j, path, {"type", "j"});
    return PairPotential::rotator(number_field(j, path, "j", 1.0));
  }
  fail(path + ".type", "unknown pair potential \"" + type + "\"");
}

json pair_json(const PairPotential& p) {
  json j;
  switch (p.kind) {
    case PairKind::Harmonic:
      j["type"] = "harmonic";
      j["k"] = p.k;
      break;
    case PairKind::FpuBeta:
      j["type"] = "fpu";
      j["k2"] = p.k2;
      j["k4"] = p.k4;
      break;
    case PairKind::Rotator:
      j["type"] = "rotator";
      j["j"] = p.j;
      break;
  }
  return j;
}

std::optional<OnsitePotential> parse_onsite(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  expect_object(j, path);
  const std::string type = string_field(j, path, "type", "pinned");
  if (type == "pinned") {
    check_keys(j, path, {"type", "omega2"});
    return OnsitePotential::pinned(number_field(j, path, "omega2", 1.0));
  }
  if (type == "quartic") {
    check_keys(j, path, {"type", "a2", "a4"});
    return OnsitePotential::quartic(number_field(j, path, "a2", 0.0),
                                    number_field(j, path, "a4", 1.0));
  }
  fail(path + ".type", "unknown on-site potential \"" + type + "\"");
}

json onsite_json(const std::optional<OnsitePotential>& u) {
  if (!u) return nullptr;
  json j;
  if (u->kind == OnsiteKind::PinnedQuadratic) {
    j["type"] = "pinned";
    j["omega2"] = u->omega2;
  } else {
    j["type"] = "quartic";
    j["a2"] = u->a2;
    j["a4"] = u->a4;
  }
  return j;
}

// --- lattice --------------------------------------------------------------

TransverseBc parse_transverse_bc(const std::string& name, const std::string& path) {
  if (name == "free") return TransverseBc::Free;
  if (name == "periodic") return TransverseBc::Periodic;
  fail(path, "unknown boundary condition \"" + name + "\"");
}

EndBc parse_end_bc(const std::string& name, const std::string& path) {
  if (name == "free") return EndBc::Free;
  if (name == "fixed") return EndBc::Fixed;
  if (name == "periodic") return EndBc::Periodic;
  fail(path, "unknown boundary condition \"" + name + "\"");
}

LatticeSpec parse_lattice(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path,
             {"dimension", "n1", "n2", "mass", "nu", "pair", "onsite", "transverse_bc",
              "end_bc"});
  LatticeSpec s;
  s.dimension = static_cast<int>(integer_field(j, path, "dimension", s.dimension));
  s.n1 = static_cast<int>(integer_field(j, path, "n1", s.n1));
  s.n2 = static_cast<int>(integer_field(j, path, "n2", s.n2));
  s.mass = number_field(j, path, "mass", s.mass);
  s.nu = static_cast<int>(integer_field(j, path, "nu", s.nu));
  if (j.contains("pair")) s.pair = parse_pair(j.at("pair"), path + ".pair");
  if (j.contains("onsite")) s.onsite = parse_onsite(j.at("onsite"), path + ".onsite");
  s.transverse_bc = parse_transverse_bc(
      string_field(j, path, "transverse_bc", "free"), path + ".transverse_bc");
  s.end_bc = parse_end_bc(string_field(j, path, "end_bc", "free"), path + ".end_bc");
  return s;
}

json lattice_json(const LatticeSpec& s) {
  json j;
  j["dimension"] = s.dimension;
  j["n1"] = s.n1;
  j["n2"] = s.n2;
  j["mass"] = s.mass;
  j["nu"] = s.nu;
  j["pair"] = pair_json(s.pair);
  j["onsite"] = onsite_json(s.onsite);
  j["transverse_bc"] = s.transverse_bc == TransverseBc::Free ? "free" : "periodic";
  j["end_bc"] = s.end_bc == EndBc::Free     ? "free"
                : s.end_bc == EndBc::Fixed  ? "fixed"
                                            : "periodic";
  return j;
}

// --- reservoir ------------------------------------------------------------

ReservoirSpec parse_reservoir(const json& j, const std::string& path) {
  expect_object(j, path);
  const std::string type = string_field(j, path, "type", "none");
  ReservoirSpec r;
  if (type == "none") {
    check_keys(j, path, {"type"});
    return r;
  }
  const auto temps = [&](ReservoirSpec& res) {
    res.t_left = number_field(j, path, "t_left", res.t_left);
    res.t_right = number_field(j, path, "t_right", res.t_right);
  };
  const auto sites = [&](ReservoirSpec& res) {
    res.left_sites = int_list_field(j, path, "left_sites", {});
    res.right_sites = int_list_field(j, path, "right_sites", {});
  };
  if (type == "langevin") {
    check_keys(j, path,
               {"type", "t_left", "t_right", "lambda_left", "lambda_right", "left_sites",
                "right_sites"});
    r.kind = ReservoirKind::Langevin;
    temps(r);
    r.lambda_left = number_field(j, path, "lambda_left", r.lambda_left);
    r.lambda_right = number_field(j, path, "lambda_right", r.lambda_right);
    sites(r);
    return r;
  }
  if (type == "extended") {
    check_keys(j, path,
               {"type", "t_left", "t_right", "lambda_left", "lambda_right", "gamma_left",
                "gamma_right"});
    r.kind = ReservoirKind::Extended;
    temps(r);
    r.lambda_left = number_field(j, path, "lambda_left", r.lambda_left);
    r.lambda_right = number_field(j, path, "lambda_right", r.lambda_right);
    r.gamma_left = number_field(j, path, "gamma_left", r.gamma_left);
    r.gamma_right = number_field(j, path, "gamma_right", r.gamma_right);
    return r;
  }
  if (type == "nose_hoover") {
    check_keys(j, path,
               {"type", "t_left", "t_right", "theta", "g_left", "g_right", "left_sites",
                "right_sites"});
    r.kind = ReservoirKind::NoseHoover;
    temps(r);
    r.theta = number_field(j, path, "theta", r.theta);
    r.g_left = number_field(j, path, "g_left", r.g_left);
    r.g_right = number_field(j, path, "g_right", r.g_right);
    sites(r);
    return r;
  }
  if (type == "gaussian") {
    check_keys(j, path,
               {"type", "t_left", "t_right", "g_left", "g_right", "left_sites",
                "right_sites"});
    r.kind = ReservoirKind::GaussianIso;
    temps(r);
    r.g_left = number_field(j, path, "g_left", r.g_left);
    r.g_right = number_field(j, path, "g_right", r.g_right);
    sites(r);
    return r;
  }
  fail(path + ".type", "unknown reservoir \"" + type + "\"");
}

json reservoir_json(const ReservoirSpec& r) {
  json j;
  const auto temps = [&] {
    j["t_left"] = r.t_left;
    j["t_right"] = r.t_right;
  };
  const auto sites = [&] {
    j["left_sites"] = r.left_sites;
    j["right_sites"] = r.right_sites;
  };
  switch (r.kind) {
    case ReservoirKind::None:
      j["type"] = "none";
      break;
    case ReservoirKind::Langevin:
      j["type"] = "langevin";
      temps();
      j["lambda_left"] = r.lambda_left;
      j["lambda_right"] = r.lambda_right;
      sites();
      break;
    case ReservoirKind::Extended:
      j["type"] = "extended";
      temps();
      j["lambda_left"] = r.lambda_left;
      j["lambda_right"] = r.lambda_right;
      j["gamma_left"] = r.gamma_left;
      j["gamma_right"] = r.gamma_right;
      break;
    case ReservoirKind::NoseHoover:
      j["type"] = "nose_hoover";
      temps();
      j["theta"] = r.theta;
      j["g_left"] = r.g_left;
      j["g_right"] = r.g_right;
      sites();
      break;
    case ReservoirKind::GaussianIso:
      j["type"] = "gaussian";
      temps();
      j["g_left"] = r.g_left;
      j["g_right"] = r.g_right;
      sites();
      break;
  }
  return j;
}

// --- integrator and study parameters --------------------------------------

IntegratorSpec parse_integrator(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"dt", "scheme", "steps", "burn_in", "stride"});
  IntegratorSpec s;
  s.dt = number_field(j, path, "dt", s.dt);
  s.scheme = string_field(j, path, "scheme", s.scheme);
  s.steps = integer_field(j, path, "steps", s.steps);
  s.burn_in = integer_field(j, path, "burn_in", s.burn_in);
  s.stride = integer_field(j, path, "stride", s.stride);
  return s;
}

json integrator_json(const IntegratorSpec& s) {
  json j;
  j["dt"] = s.dt;
  j["scheme"] = s.scheme;
  j["steps"] = s.steps;
  j["burn_in"] = s.burn_in;
  j["stride"] = s.stride;
  return j;
}

RunParams parse_run(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"replicas", "blocks"});
  RunParams p;
  p.replicas = static_cast<int>(integer_field(j, path, "replicas", p.replicas));
  p.blocks = static_cast<int>(integer_field(j, path, "blocks", p.blocks));
  return p;
}

ScanOptions parse_sweep(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"lengths", "replicas", "drop_smallest"});
  ScanOptions p;
  p.lengths = int_list_field(j, path, "lengths", {});
  p.replicas = static_cast<int>(integer_field(j, path, "replicas", p.replicas));
  p.drop_smallest = bool_field(j, path, "drop_smallest", p.drop_smallest);
  return p;
}

GreenKuboParams parse_gk(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"temperature", "t_max", "replicas", "plateau_tol", "truncated"});
  GreenKuboParams p;
  p.temperature = number_field(j, path, "temperature", p.temperature);
  p.options.t_max = number_field(j, path, "t_max", p.options.t_max);
  p.options.replicas =
      static_cast<int>(integer_field(j, path, "replicas", p.options.replicas));
  p.options.plateau_tol = number_field(j, path, "plateau_tol", p.options.plateau_tol);
  p.options.truncated = bool_field(j, path, "truncated", p.options.truncated);
  return p;
}

LdfOptions parse_ldf(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path, {"segment_time", "segments", "bins", "min_count", "normalize"});
  LdfOptions p;
  p.segment_time = number_field(j, path, "segment_time", p.segment_time);
  p.segments = static_cast<int>(integer_field(j, path, "segments", p.segments));
  p.bins = static_cast<int>(integer_field(j, path, "bins", p.bins));
  p.min_count = integer_field(j, path, "min_count", p.min_count);
  p.normalize = bool_field(j, path, "normalize", p.normalize);
  return p;
}

KmpParams parse_kmp(const json& j, const std::string& path) {
  expect_object(j, path);
  check_keys(j, path,
             {"sites", "t_left", "t_right", "gamma_exchange", "gamma_boundary", "events",
              "burn_in_events", "blocks"});
  KmpParams p;
  p.spec.sites = static_cast<int>(integer_field(j, path, "sites", p.spec.sites));
  p.spec.t_left = number_field(j, path, "t_left", p.spec.t_left);
  p.spec.t_right = number_field(j, path, "t_right", p.spec.t_right);
  p.spec.gamma_exchange =
      number_field(j, path, "gamma_exchange", p.spec.gamma_exchange);
  p.spec.gamma_boundary =
      number_field(j, path, "gamma_boundary", p.spec.gamma_boundary);
  p.options.events = integer_field(j, path, "events", p.options.events);
  p.options.burn_in_events =
      integer_field(j, path, "burn_in_events", p.options.burn_in_events);
  p.options.blocks = static_cast<int>(integer_field(j, path, "blocks", p.options.blocks));
  return p;
}

}  // namespace

std::string study_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::Run: return "run";
    case StudyKind::Sweep: return "sweep";
    case StudyKind::Oracle: return "oracle";
    case StudyKind::GreenKubo: return "gk";
    case StudyKind::Ldf: return "ldf";
    case StudyKind::Kmp: return "kmp";
  }
  return "run";
}

StudyKind study_from_name(const std::string& name) {
  if (name == "run") return StudyKind::Run;
  if (name == "sweep") return StudyKind::Sweep;
  if (name == "oracle") return StudyKind::Oracle;
  if (name == "gk") return StudyKind::GreenKubo;
  if (name == "ldf") return StudyKind::Ldf;
  if (name == "kmp") return StudyKind::Kmp;
  throw SpecError("study: unknown study \"" + name + "\"");
}

void ExperimentConfig::validate() const {
  lattice.validate();
  IntegratorSpec integ_check = integrator;
  if (study == StudyKind::Ldf && ldf.segments > 0)
    integ_check.steps = integrator.burn_in + integrator.stride;  // resized from segments later
  integ_check.validate();
  if (reservoir.kind != ReservoirKind::None) reservoir.validate(lattice);
  if (jobs < 0) throw SpecError("jobs: must be nonnegative");
  if (output.empty()) throw SpecError("output: must not be empty");
  switch (study) {
    case StudyKind::Run:
      if (run.replicas < 1) throw SpecError("run.replicas: must be at least 1");
      if (run.blocks < 2) throw SpecError("run.blocks: must be at least 2");
      break;
    case StudyKind::Sweep:
      if (reservoir.kind == ReservoirKind::None)
        throw SpecError("sweep: needs a reservoir");
      if (sweep.lengths.size() < 3)
        throw SpecError("sweep.lengths: needs at least three lengths");
      break;
    case StudyKind::Oracle:
      if (reservoir.kind == ReservoirKind::None)
        throw SpecError("oracle: needs a reservoir");
      if (!sweep.lengths.empty() && sweep.lengths.size() < 3)
        throw SpecError("sweep.lengths: needs at least three lengths, or none");
      break;
    case StudyKind::GreenKubo:
      if (gk.temperature < 0) throw SpecError("gk.temperature: must be nonnegative");
      if (gk.options.replicas < 1) throw SpecError("gk.replicas: must be at least 1");
      break;
    case StudyKind::Ldf:
      if (reservoir.kind == ReservoirKind::None)
        throw SpecError("ldf: needs a reservoir");
      break;
    case StudyKind::Kmp:
      kmp.spec.validate();
      break;
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("config: invalid JSON: ") + e.what());
  }
  expect_object(j, "config");
  check_keys(j, "config",
             {"study", "seed", "jobs", "output", "lattice", "reservoir", "integrator",
              "run", "sweep", "gk", "ldf", "kmp"});

  ExperimentConfig c;
  c.study = study_from_name(string_field(j, "config", "study", "run"));
  c.seed = unsigned_field(j, "config", "seed", c.seed);
  c.jobs = static_cast<int>(integer_field(j, "config", "jobs", c.jobs));
  c.output = string_field(j, "config", "output", c.output);
  if (j.contains("lattice")) c.lattice = parse_lattice(j.at("lattice"), "lattice");
  if (j.contains("reservoir"))
    c.reservoir = parse_reservoir(j.at("reservoir"), "reservoir");
  if (j.contains("integrator"))
    c.integrator = parse_integrator(j.at("integrator"), "integrator");
  if (j.contains("run")) c.run = parse_run(j.at("run"), "run");
  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"), "sweep");
  if (j.contains("gk")) c.gk = parse_gk(j.at("gk"), "gk");
  if (j.contains("ldf")) c.ldf = parse_ldf(j.at("ldf"), "ldf");
  if (j.contains("kmp")) c.kmp = parse_kmp(j.at("kmp"), "kmp");
  c.integrator.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  json j;
  j["study"] = study_name(config.study);
  j["seed"] = config.seed;
  j["jobs"] = config.jobs;
  j["output"] = config.output;
  j["lattice"] = lattice_json(config.lattice);
  j["reservoir"] = reservoir_json(config.reservoir);
  j["integrator"] = integrator_json(config.integrator);
  j["run"] = {{"replicas", config.run.replicas}, {"blocks", config.run.blocks}};
  j["sweep"] = {{"lengths", config.sweep.lengths},
                {"replicas", config.sweep.replicas},
                {"drop_smallest", config.sweep.drop_smallest}};
  j["gk"] = {{"temperature", config.gk.temperature},
             {"t_max", config.gk.options.t_max},
             {"replicas", config.gk.options.replicas},
             {"plateau_tol", config.gk.options.plateau_tol},
             {"truncated", config.gk.options.truncated}};
  j["ldf"] = {{"segment_time", config.ldf.segment_time},
              {"segments", config.ldf.segments},
              {"bins", config.ldf.bins},
              {"min_count", config.ldf.min_count},
              {"normalize", config.ldf.normalize}};
  j["kmp"] = {{"sites", config.kmp.spec.sites},
              {"t_left", config.kmp.spec.t_left},
              {"t_right", config.kmp.spec.t_right},
              {"gamma_exchange", config.kmp.spec.gamma_exchange},
              {"gamma_boundary", config.kmp.spec.gamma_boundary},
              {"events", config.kmp.options.events},
              {"burn_in_events", config.kmp.options.burn_in_events},
              {"blocks", config.kmp.options.blocks}};
  return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // Output location and worker count do not affect results, so equal
  // experiments hash equally regardless of where or how wide they ran.
  ExperimentConfig keyed = config;
  keyed.output = "";
  keyed.jobs = 0;
  const std::string text = serialize_config(keyed);
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace nesslab
