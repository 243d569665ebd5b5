#include "nesslab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>

#include "nesslab/parallel.hpp"
#include "nesslab/rng.hpp"

namespace nesslab {

namespace {

constexpr std::uint64_t kScanTag = 1u << 24;
constexpr std::uint64_t kGreenKuboTag = 2u << 24;
constexpr std::uint64_t kResponseTag = 3u << 24;
constexpr std::uint64_t kLdfTag = 4u << 24;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw NumericsError("degenerate fit: no spread in the abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ss += r * r;
    }
    f.slope_err = std::sqrt(ss / ((n - 2) * sxx));
  }
  return f;
}

/// Weighted least squares of y = slope * x; err assumes w = 1 / var(y).
void fit_through_origin(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w, double& slope, double& err) {
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  if (sxx <= 0.0) throw NumericsError("degenerate fit: no spread in the abscissa");
  slope = sxy / sxx;
  err = 1.0 / std::sqrt(sxx);
}

/// Largest per-plane deviation from the mean current in standard errors.
double plane_spread_sigmas(const SimulationResult& sim) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < sim.plane_current.size(); ++j) {
    const double err = std::max(sim.plane_current_err[j], 1e-300);
    worst = std::max(worst, std::abs(sim.plane_current[j] - sim.current.mean) / err);
  }
  return worst;
}

std::string spread_flag(double sigmas) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "non-stationary: plane currents spread %.1f standard errors",
                sigmas);
  return buf;
}

std::vector<double> autocorrelation(const Eigen::VectorXd& w, int lags) {
  const Eigen::Index n = w.size();
  std::vector<double> c(static_cast<std::size_t>(lags) + 1);
  for (int k = 0; k <= lags; ++k)
    c[k] = w.head(n - k).dot(w.tail(n - k)) / static_cast<double>(n - k);
  return c;
}

std::vector<double> running_integral(const std::vector<double>& c, double dt) {
  std::vector<double> out(c.size(), 0.0);
  for (std::size_t j = 1; j < c.size(); ++j)
    out[j] = out[j - 1] + 0.5 * (c[j - 1] + c[j]) * dt;
  return out;
}

SystemState gibbs_start(const Lattice& lat, double temperature, std::uint64_t run_seed) {
  CounterRng rng(run_seed, 0);
  return sample_gibbs(lat, temperature, rng);
}

/// Standard error of the mean from the sample spread.
double spread_error(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / (n - 1) / n);
}

}  // namespace

ConductivityScan conductivity_scan(const LatticeSpec& lattice, const ReservoirSpec& reservoir,
                                   const IntegratorSpec& integrator, const ScanOptions& options) {
  lattice.validate();
  if (options.lengths.size() < 3)
    throw SpecError("conductivity scan needs at least three lengths");
  for (int l : options.lengths)
    if (l < 4) throw SpecError("conductivity scan lengths must be at least 4");
  if (options.replicas < 1) throw SpecError("conductivity scan needs at least one replica");
  if (reservoir.kind == ReservoirKind::None)
    throw SpecError("conductivity scan needs reservoirs attached");
  const double delta_t = reservoir.t_left - reservoir.t_right;
  if (delta_t == 0.0) throw SpecError("conductivity scan needs unequal reservoir temperatures");
  const double mean_t = 0.5 * (reservoir.t_left + reservoir.t_right);
  const double area = lattice.cross_section();

  ConductivityScan out;
  out.mean_t = mean_t;
  out.delta_t = delta_t;
  out.oracle = options.use_oracle;
  const int n_len = static_cast<int>(options.lengths.size());
  const int reps = options.replicas;
  out.table.resize(n_len);

  Eigen::MatrixXd flux, err;
  std::vector<std::vector<bool>> included;

  if (options.use_oracle) {
    for (int li = 0; li < n_len; ++li) {
      LatticeSpec spec = lattice;
      spec.n1 = options.lengths[li];
      LinearSDEModel model = build_linear_model(spec, reservoir);
      ExactObservables obs = exact_observables(model, stationary_covariance(model));
      KappaPoint& pt = out.table[li];
      pt.length = spec.n1;
      pt.flux = obs.flux / area;
      pt.kappa = pt.flux * pt.length / delta_t;
    }
  } else {
    integrator.validate();
    flux.resize(n_len, reps);
    err.resize(n_len, reps);
    Eigen::MatrixXd spread(n_len, reps);
    parallel_for(n_len * reps, options.jobs, [&](int idx) {
      const int li = idx / reps;
      LatticeSpec spec = lattice;
      spec.n1 = options.lengths[li];
      Lattice lat(spec);
      const std::uint64_t run_seed = derive_key(options.seed, kScanTag + idx);
      IntegratorSpec integ = integrator;
      integ.seed = run_seed;
      SimulationResult sim = simulate(lat, reservoir, integ, gibbs_start(lat, mean_t, run_seed));
      flux(li, idx % reps) = sim.current.mean / area;
      err(li, idx % reps) = sim.current.stderr_ / area;
      spread(li, idx % reps) = plane_spread_sigmas(sim);
    });

    included.assign(n_len, std::vector<bool>(reps, false));
    for (int li = 0; li < n_len; ++li) {
      KappaPoint& pt = out.table[li];
      pt.length = options.lengths[li];
      std::vector<double> means, errs;
      double worst = 0.0;
      for (int r = 0; r < reps; ++r) {
        if (spread(li, r) > 5.0) {
          worst = std::max(worst, spread(li, r));
          continue;
        }
        included[li][r] = true;
        means.push_back(flux(li, r));
        errs.push_back(err(li, r));
      }
      pt.replicas_used = static_cast<int>(means.size());
      if (pt.replicas_used == 0) {
        pt.in_fit = false;
        pt.flag = spread_flag(worst);
        continue;
      }
      if (pt.replicas_used < reps) pt.flag = spread_flag(worst);
      pool_estimates(means, errs, pt.flux, pt.flux_err);
      pt.kappa = pt.flux * pt.length / delta_t;
      pt.kappa_err = std::abs(pt.length / delta_t) * pt.flux_err;
    }
  }

  if (options.drop_smallest) {
    int smallest = 0;
    for (int li = 1; li < n_len; ++li)
      if (out.table[li].length < out.table[smallest].length) smallest = li;
    out.table[smallest].in_fit = false;
    if (out.table[smallest].flag.empty()) out.table[smallest].flag = "held out of the fit";
  }
  for (KappaPoint& pt : out.table)
    if (pt.in_fit && !(pt.kappa > 0.0)) {
      pt.in_fit = false;
      if (pt.flag.empty()) pt.flag = "nonpositive conductivity";
    }

  std::vector<double> xs, ys;
  for (const KappaPoint& pt : out.table)
    if (pt.in_fit) {
      xs.push_back(std::log(static_cast<double>(pt.length)));
      ys.push_back(std::log(pt.kappa));
    }
  if (xs.size() < 2)
    throw NumericsError("conductivity exponent fit needs at least two usable lengths");
  LineFit base = fit_line(xs, ys);
  out.fit.alpha = base.slope;
  out.fit.log_prefactor = base.intercept;
  out.fit.points = static_cast<int>(xs.size());
  out.fit.alpha_err = base.slope_err;

  // Jackknife over replicas: refit with one replica removed everywhere.  The
  // residual-based error above stays as the fallback when a subsample loses
  // too many points.
  if (!options.use_oracle && reps > 1) {
    std::vector<double> alphas;
    bool usable = true;
    for (int r = 0; r < reps && usable; ++r) {
      std::vector<double> jx, jy;
      for (int li = 0; li < n_len; ++li) {
        if (!out.table[li].in_fit) continue;
        double sum = 0.0;
        int cnt = 0;
        for (int rr = 0; rr < reps; ++rr)
          if (rr != r && included[li][rr]) {
            sum += flux(li, rr);
            ++cnt;
          }
        if (cnt == 0) continue;
        const double kappa = (sum / cnt) * out.table[li].length / delta_t;
        if (!(kappa > 0.0)) continue;
        jx.push_back(std::log(static_cast<double>(out.table[li].length)));
        jy.push_back(std::log(kappa));
      }
      if (jx.size() < 2) {
        usable = false;
        break;
      }
      alphas.push_back(fit_line(jx, jy).slope);
    }
    if (usable) {
      double am = 0.0;
      for (double a : alphas) am += a;
      am /= alphas.size();
      double ss = 0.0;
      for (double a : alphas) ss += (a - am) * (a - am);
      out.fit.alpha_err = std::sqrt(ss * (alphas.size() - 1.0) / alphas.size());
    }
  }

  return out;
}

GreenKuboResult green_kubo(const LatticeSpec& lattice, double temperature,
                           const IntegratorSpec& integrator, const GreenKuboOptions& options) {
  lattice.validate();
  integrator.validate();
  if (temperature <= 0.0) throw SpecError("green_kubo needs a positive temperature");
  if (options.t_max < 0.0) throw SpecError("green_kubo t_max must be nonnegative");
  if (options.replicas < 1) throw SpecError("green_kubo needs at least one replica");
  const bool confined = lattice.end_bc == EndBc::Periodic || lattice.end_bc == EndBc::Fixed ||
                        lattice.onsite.has_value();
  if (!confined)
    throw SpecError(
        "green_kubo evolves the isolated lattice; use periodic ends, fixed walls, or an "
        "on-site potential");

  IntegratorSpec integ = integrator;
  if (integ.dt <= 0.0) integ.dt = default_time_step(lattice, temperature);
  const double sample_dt = integ.dt * integ.stride;
  const std::int64_t n = (integ.steps - integ.burn_in) / integ.stride;
  if (n < 16) throw SpecError("green_kubo needs at least 16 flux samples");
  const int lags = static_cast<int>(std::llround(options.t_max / sample_dt));
  if (lags > n / 2)
    throw SpecError("green_kubo t_max exceeds half the sampled span; lengthen the run");

  Lattice lat(lattice);
  const int reps = options.replicas;
  Eigen::MatrixXd corr(reps, lags + 1), curve(reps, lags + 1);
  Eigen::VectorXd vars(reps);

  parallel_for(reps, options.jobs, [&](int r) {
    const std::uint64_t run_seed = derive_key(integ.seed, kGreenKuboTag + r);
    SystemState state = gibbs_start(lat, temperature, run_seed);
    if (lattice.translation_invariant()) {
      const int nu = lattice.nu;
      for (int c = 0; c < nu; ++c) {
        double mean = 0.0;
        for (int s = 0; s < lat.site_count(); ++s) mean += state.p[s * nu + c];
        mean /= lat.site_count();
        for (int s = 0; s < lat.site_count(); ++s) state.p[s * nu + c] -= mean;
      }
    }
    IntegratorSpec local = integ;
    local.seed = run_seed;
    Stepper stepper(lat, ReservoirSpec::none(), local);
    stepper.prepare(state);
    Eigen::VectorXd phi(n);
    std::int64_t idx = 0;
    for (std::int64_t k = 0; k < local.steps; ++k) {
      stepper.step(state, k, k > 0);
      if ((k & 2047) == 0) check_finite(state, k);
      if (k < local.burn_in) continue;
      if ((k - local.burn_in + 1) % local.stride == 0 && idx < n)
        phi[idx++] = mean_heat_current(lat, state);
    }
    const double mean = phi.mean();
    vars[r] = (phi.array() - mean).square().sum() / n;
    Eigen::VectorXd w = options.truncated ? (phi.array() - mean).matrix().eval() : phi;
    const std::vector<double> c = autocorrelation(w, lags);
    const std::vector<double> integral = running_integral(c, sample_dt);
    for (int k = 0; k <= lags; ++k) {
      corr(r, k) = c[k];
      curve(r, k) = integral[k];
    }
  });

  const double prefactor =
      lattice.n1 / (lattice.cross_section() * temperature * temperature);
  GreenKuboResult out;
  out.t_max = lags * sample_dt;
  out.truncated = options.truncated;
  out.replicas = reps;
  out.times.resize(lags + 1);
  out.correlation.resize(lags + 1);
  out.kappa_of_t.resize(lags + 1);
  for (int k = 0; k <= lags; ++k) {
    out.times[k] = k * sample_dt;
    out.correlation[k] = corr.col(k).mean();
    out.kappa_of_t[k] = prefactor * curve.col(k).mean();
  }
  out.kappa = out.kappa_of_t[lags];
  out.kappa_err = prefactor * spread_error(curve.col(lags));
  out.c0 = out.correlation[0];
  out.c0_err = spread_error(corr.col(0));
  out.phi_variance = vars.mean();
  out.phi_variance_err = spread_error(vars);
  if (lags >= 2) {
    const double drift = std::abs(out.kappa - out.kappa_of_t[lags / 2]);
    out.plateau = out.kappa > 0.0 && drift <= options.plateau_tol * std::abs(out.kappa);
  }
  return out;
}

LinearResponseResult linear_response_check(const LatticeSpec& lattice,
                                           const ReservoirSpec& reservoir,
                                           const IntegratorSpec& integrator,
                                           const LinearResponseOptions& options) {
  lattice.validate();
  integrator.validate();
  if (reservoir.kind == ReservoirKind::None)
    throw SpecError("linear response needs reservoirs attached");
  if (options.delta_ts.size() < 2)
    throw SpecError("linear response needs at least two delta T values");
  const double t0 = 0.5 * (reservoir.t_left + reservoir.t_right);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double d : options.delta_ts) {
    if (d == 0.0) throw SpecError("delta T values must be nonzero");
    if (std::abs(d) >= 2.0 * t0)
      throw SpecError("a delta T value drives a reservoir temperature nonpositive");
    lo = std::min(lo, std::abs(d));
    hi = std::max(hi, std::abs(d));
  }
  if (hi < 4.0 * lo * (1.0 - 1e-12))
    throw SpecError("delta T magnitudes must span at least a factor of four");

  const int n_pts = static_cast<int>(options.delta_ts.size());
  const double area = lattice.cross_section();
  Lattice lat(lattice);

  LinearResponseResult out;
  out.points.resize(n_pts);
  parallel_for(n_pts, options.jobs, [&](int i) {
    const double d = options.delta_ts[i];
    ReservoirSpec res = reservoir;
    res.t_left = t0 + 0.5 * d;
    res.t_right = t0 - 0.5 * d;
    const std::uint64_t run_seed = derive_key(options.seed, kResponseTag + i);
    IntegratorSpec integ = integrator;
    integ.seed = run_seed;
    SimulationResult sim = simulate(lat, res, integ, gibbs_start(lat, t0, run_seed));
    ResponsePoint& pt = out.points[i];
    pt.delta_t = d;
    pt.flux = sim.current.mean / area;
    pt.flux_err = sim.current.stderr_ / area;
    pt.in_fit = plane_spread_sigmas(sim) <= 5.0;
  });

  auto refit = [&] {
    std::vector<double> xs, ys, ws;
    for (const ResponsePoint& pt : out.points)
      if (pt.in_fit) {
        xs.push_back(pt.delta_t);
        ys.push_back(pt.flux);
        const double e = std::max(pt.flux_err, 1e-300);
        ws.push_back(1.0 / (e * e));
      }
    if (xs.empty()) throw NumericsError("no usable linear-response points");
    fit_through_origin(xs, ys, ws, out.slope, out.slope_err);
  };
  refit();

  for (const ResponsePoint& pt : out.points) {
    if (!pt.in_fit) continue;
    const double e = std::max(pt.flux_err, 1e-300);
    if (std::abs(pt.flux - out.slope * pt.delta_t) / e > options.nonlinear_tol) {
      out.nonlinear = true;
      break;
    }
  }
  if (out.nonlinear) {
    int widest = -1;
    for (int i = 0; i < n_pts; ++i)
      if (out.points[i].in_fit &&
          (widest < 0 ||
           std::abs(out.points[i].delta_t) > std::abs(out.points[widest].delta_t)))
        widest = i;
    if (widest >= 0) out.points[widest].in_fit = false;
    refit();
  }

  for (int i = 0; i < n_pts; ++i)
    for (int j = i + 1; j < n_pts; ++j) {
      const ResponsePoint& a = out.points[i];
      const ResponsePoint& b = out.points[j];
      if (std::abs(a.delta_t + b.delta_t) > 1e-9 * std::abs(a.delta_t)) continue;
      const double tol = 3.0 * std::sqrt(a.flux_err * a.flux_err + b.flux_err * b.flux_err);
      if (std::abs(a.flux + b.flux) > std::max(tol, 1e-12)) out.odd_consistent = false;
    }

  if (options.correlation_window > 0.0) {
    ReservoirSpec res = reservoir;
    res.t_left = res.t_right = t0;
    const std::uint64_t run_seed = derive_key(options.seed, kResponseTag + 0x10000);
    IntegratorSpec integ = integrator;
    integ.seed = run_seed;
    SimulationResult sim = simulate(lat, res, integ, gibbs_start(lat, t0, run_seed));
    const double sample_dt = sim.dt * integ.stride;
    const auto& v = sim.current.values;
    const std::int64_t n = static_cast<std::int64_t>(v.size());
    const int lags = static_cast<int>(std::llround(options.correlation_window / sample_dt));
    const int chunks = lags >= 1 ? static_cast<int>(std::min<std::int64_t>(8, n / (2 * lags))) : 0;
    if (chunks < 2)
      throw SpecError("correlation window too long for the equal-temperature run");
    const std::int64_t len = n / chunks;
    const double gm =
        Eigen::Map<const Eigen::VectorXd>(v.data(), n).mean();
    Eigen::VectorXd integrals(chunks);
    for (int c = 0; c < chunks; ++c) {
      const Eigen::VectorXd w =
          (Eigen::Map<const Eigen::VectorXd>(v.data() + c * len, len).array() - gm).matrix();
      integrals[c] = running_integral(autocorrelation(w, lags), sample_dt).back();
    }
    const double scale = 1.0 / (area * t0 * t0);
    out.equal_t_slope = scale * integrals.mean();
    out.equal_t_slope_err = scale * spread_error(integrals);
    out.has_equal_t_slope = true;
  }

  return out;
}

LdfResult entropy_ldf(const LatticeSpec& lattice, const ReservoirSpec& reservoir,
                      const IntegratorSpec& integrator, const LdfOptions& options) {
  lattice.validate();
  if (reservoir.kind == ReservoirKind::None)
    throw SpecError("entropy_ldf needs reservoirs attached");
  if (options.segment_time <= 0.0) throw SpecError("entropy_ldf segment_time must be positive");
  if (options.bins < 2 || options.bins % 2 != 0)
    throw SpecError("entropy_ldf bins must be even and at least 2");
  if (options.min_count < 1) throw SpecError("entropy_ldf min_count must be at least 1");

  IntegratorSpec integ = integrator;
  if (integ.dt <= 0.0)
    integ.dt = default_time_step(lattice, std::max(reservoir.t_left, reservoir.t_right));
  const double sample_dt = integ.dt * integ.stride;
  const std::int64_t windows =
      std::max<std::int64_t>(1, std::llround(options.segment_time / sample_dt));
  const double tau = windows * sample_dt;
  if (options.segments > 0)
    integ.steps = integ.burn_in + options.segments * windows * integ.stride;
  integ.validate();

  Lattice lat(lattice);
  const double mean_t = 0.5 * (reservoir.t_left + reservoir.t_right);
  const std::uint64_t run_seed = derive_key(integ.seed, kLdfTag);
  SimulationResult sim = simulate(lat, reservoir, integ, gibbs_start(lat, mean_t, run_seed));

  const auto& vals = sim.sigma.values;
  const std::int64_t n = static_cast<std::int64_t>(vals.size());
  const std::int64_t segs = n / windows;
  if (segs < 8)
    throw SpecError("entropy_ldf needs at least 8 segments; lengthen the run or shorten "
                    "segment_time");

  LdfResult out;
  out.segment_time = tau;
  out.segments = static_cast<int>(segs);
  out.sigma_mean = sim.sigma.mean;
  out.sigma_mean_err = sim.sigma.stderr_;
  out.normalized = options.normalize;

  std::vector<double> seg(segs);
  for (std::int64_t j = 0; j < segs; ++j) {
    double s = 0.0;
    for (std::int64_t k = 0; k < windows; ++k) s += vals[j * windows + k];
    seg[j] = s / windows;
  }
  double sm = 0.0;
  for (double s : seg) sm += s;
  sm /= segs;
  double ss = 0.0;
  for (double s : seg) ss += (s - sm) * (s - sm);
  out.segment_mean = sm;
  out.segment_mean_err = std::sqrt(ss / (segs - 1.0) / segs);

  double scale = 1.0;
  if (options.normalize) {
    if (!(sm > 0.0))
      throw NumericsError("entropy_ldf cannot normalize by a nonpositive mean");
    scale = sm;
  }

  double limit = 0.0;
  for (double& s : seg) {
    s /= scale;
    limit = std::max(limit, std::abs(s));
  }
  if (limit <= 0.0) throw NumericsError("entropy production segments are all zero");
  limit *= 1.0 + 1e-12;
  const int bins = options.bins;
  const double width = 2.0 * limit / bins;

  out.bins.assign(bins, {});
  for (double s : seg) {
    int b = static_cast<int>((s + limit) / width);
    b = std::clamp(b, 0, bins - 1);
    ++out.bins[b].count;
  }
  for (int b = 0; b < bins; ++b) {
    LdfBin& bin = out.bins[b];
    bin.p = -limit + (b + 0.5) * width;
    bin.density = static_cast<double>(bin.count) / (segs * width);
    if (bin.count > 0) bin.rate = -std::log(bin.density) / tau;
    bin.in_fit = bin.count >= options.min_count;
  }

  std::vector<double> xs, ys, ws;
  for (int b = bins / 2; b < bins; ++b) {
    const LdfBin& pos = out.bins[b];
    const LdfBin& neg = out.bins[bins - 1 - b];
    if (!pos.in_fit || !neg.in_fit) continue;
    xs.push_back(pos.p);
    ys.push_back(pos.rate - neg.rate);
    const double var =
        (1.0 / pos.count + 1.0 / neg.count) / (tau * tau);
    ws.push_back(1.0 / var);
  }
  out.odd_pairs = static_cast<int>(xs.size());
  if (out.odd_pairs >= 1) {
    fit_through_origin(xs, ys, ws, out.odd_slope, out.odd_slope_err);
    out.odd_slope_defined = true;
  }

  return out;
}

}  // namespace nesslab
