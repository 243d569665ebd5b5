#include "nesslab/harmonic_exact.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

namespace nesslab {

namespace {

// Full-coordinate drift/noise for dX = A X dt + B dW, X = (q, p).
void assemble_full(const Lattice& lat, const Eigen::ArrayXd& lambda_dof,
                   const Eigen::ArrayXd& temp_dof, Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
  const int n = lat.dof();
  const double m = lat.mass();
  a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  b = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::MatrixXd k = stiffness_matrix(lat);
  for (int i = 0; i < n; ++i) a(i, n + i) = 1.0 / m;
  a.block(n, 0, n, n) = -k;
  for (int i = 0; i < n; ++i) {
    a(n + i, n + i) = -lambda_dof[i] / m;
    b(n + i, n + i) = std::sqrt(2.0 * lambda_dof[i] * temp_dof[i]);
  }
}

// Stretch-momentum coordinates X = (s_1..s_{N-1}, p_1..p_N) for a free
// translation-invariant chain; removes the neutral uniform-shift mode.
void assemble_reduced(const LatticeSpec& spec, const Eigen::ArrayXd& lambda_site,
                      const Eigen::ArrayXd& temp_site, Eigen::MatrixXd& a, Eigen::MatrixXd& b) {
  const int n = spec.n1;
  const int po = n - 1;
  const int dim = 2 * n - 1;
  const double m = spec.mass;
  const double k = spec.pair.stiffness();
  a = Eigen::MatrixXd::Zero(dim, dim);
  b = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j + 1 < n; ++j) {
    a(j, po + j + 1) = 1.0 / m;
    a(j, po + j) = -1.0 / m;
  }
  for (int i = 0; i < n; ++i) {
    if (i <= n - 2) a(po + i, i) += k;
    if (i >= 1) a(po + i, i - 1) -= k;
    a(po + i, po + i) = -lambda_site[i] / m;
    b(po + i, po + i) = std::sqrt(2.0 * lambda_site[i] * temp_site[i]);
  }
}

struct ChainLayout {
  bool reduced = false;
  int n = 0;
  int po = 0;  // p block offset
};

// mu(J(i)) for bond (i, i+1) of a harmonic chain, J positive toward +i1.
double exact_bond_current(const Eigen::MatrixXd& c, const ChainLayout& lo, double k, double m,
                          int i) {
  double psi;
  if (lo.reduced) {
    psi = 0.5 * k * (c(i, lo.po + i) + c(i, lo.po + i + 1));
  } else {
    psi = 0.5 * k *
          (c(i + 1, lo.po + i) + c(i + 1, lo.po + i + 1) - c(i, lo.po + i) - c(i, lo.po + i + 1));
  }
  return -psi / m;
}

Eigen::MatrixXd lyapunov_backsolve(const Eigen::MatrixXcd& t, const Eigen::MatrixXcd& u,
                                   const Eigen::MatrixXd& q) {
  using Mat = Eigen::MatrixXcd;
  const int n = static_cast<int>(t.rows());
  Mat r = -(u.adjoint() * q.cast<std::complex<double>>() * u);
  Mat y = Mat::Zero(n, n);
  // T y_j + conj(T_jj) y_j = r_j - sum_{k>j} conj(T_jk) y_k, solved j = n-1..0.
  for (int j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = r.col(j);
    for (int k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    Mat tj = t;
    tj.diagonal().array() += std::conj(t(j, j));
    y.col(j) = tj.triangularView<Eigen::Upper>().solve(rhs);
  }
  const Eigen::MatrixXd c = (u * y * u.adjoint()).real();
  return 0.5 * (c + c.transpose());
}

}  // namespace

LinearSDEModel build_linear_model(const LatticeSpec& lattice, const ReservoirSpec& reservoir) {
  lattice.validate();
  reservoir.validate(lattice);
  if (!lattice.quadratic())
    throw SpecError("linear model requires quadratic potentials");
  if (reservoir.kind != ReservoirKind::Langevin && reservoir.kind != ReservoirKind::Extended)
    throw SpecError("linear model supports langevin or extended reservoirs");

  LinearSDEModel model;
  model.lattice = lattice;
  model.reservoir = reservoir;
  const Lattice lat(lattice);
  const ReservoirSites sites = resolve_sites(reservoir, lat);

  if (reservoir.kind == ReservoirKind::Langevin) {
    const bool reduced = lattice.dimension == 1 && lattice.nu == 1 &&
                         lattice.end_bc == EndBc::Free && lattice.translation_invariant();
    if (reduced) {
      Eigen::ArrayXd lam = Eigen::ArrayXd::Zero(lattice.n1);
      Eigen::ArrayXd tmp = Eigen::ArrayXd::Ones(lattice.n1);
      for (int s : sites.left) {
        lam[s] = reservoir.lambda_left;
        tmp[s] = reservoir.t_left;
      }
      for (int s : sites.right) {
        lam[s] = reservoir.lambda_right;
        tmp[s] = reservoir.t_right;
      }
      assemble_reduced(lattice, lam, tmp, model.a, model.b);
      model.reduced = true;
      model.q_dim = lattice.n1 - 1;
      model.p_dim = lattice.n1;
      return model;
    }
    Eigen::ArrayXd lam = Eigen::ArrayXd::Zero(lat.dof());
    Eigen::ArrayXd tmp = Eigen::ArrayXd::Ones(lat.dof());
    const int nu = lattice.nu;
    for (int s : sites.left)
      for (int c = 0; c < nu; ++c) {
        lam[s * nu + c] = reservoir.lambda_left;
        tmp[s * nu + c] = reservoir.t_left;
      }
    for (int s : sites.right)
      for (int c = 0; c < nu; ++c) {
        lam[s * nu + c] = reservoir.lambda_right;
        tmp[s * nu + c] = reservoir.t_right;
      }
    assemble_full(lat, lam, tmp, model.a, model.b);
    model.q_dim = lat.dof();
    model.p_dim = lat.dof();
    return model;
  }

  // Extended: (q, p, r_L, r_R); the lambda^2 q_end^2 terms act as end pinning,
  // so the full coordinates are already Hurwitz.
  const int n = lat.dof();
  Eigen::MatrixXd a0, b0;
  assemble_full(lat, Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Ones(n), a0, b0);
  const int dim = 2 * n + 2;
  model.a = Eigen::MatrixXd::Zero(dim, dim);
  model.b = Eigen::MatrixXd::Zero(dim, dim);
  model.a.topLeftCorner(2 * n, 2 * n) = a0;
  const int rl = 2 * n, rr = 2 * n + 1;
  model.a(n, rl) = 1.0;          // dp_1 gains r_L
  model.a(2 * n - 1, rr) = 1.0;  // dp_N gains r_R
  model.a(rl, rl) = -reservoir.gamma_left;
  model.a(rl, 0) = reservoir.gamma_left * reservoir.lambda_left * reservoir.lambda_left;
  model.a(rr, rr) = -reservoir.gamma_right;
  model.a(rr, n - 1) = reservoir.gamma_right * reservoir.lambda_right * reservoir.lambda_right;
  model.b(rl, rl) =
      reservoir.lambda_left * std::sqrt(2.0 * reservoir.gamma_left * reservoir.t_left);
  model.b(rr, rr) =
      reservoir.lambda_right * std::sqrt(2.0 * reservoir.gamma_right * reservoir.t_right);
  model.q_dim = n;
  model.p_dim = n;
  model.aux_dim = 2;
  return model;
}

bool is_hurwitz(const Eigen::MatrixXd& a, double* max_real_part) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) throw SpecError("eigenvalue computation failed");
  const double mr = es.eigenvalues().real().maxCoeff();
  if (max_real_part) *max_real_part = mr;
  return mr < -1e-9;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw SpecError("schur decomposition failed");
  return lyapunov_backsolve(schur.matrixT(), schur.matrixU(), q);
}

StationaryCovariance stationary_covariance(const LinearSDEModel& model) {
  double max_real = 0.0;
  if (!is_hurwitz(model.a, &max_real))
    throw SpecError("drift matrix is not Hurwitz (spectral abscissa " +
                    std::to_string(max_real) + "); no stationary covariance");
  const Eigen::MatrixXd q = model.b * model.b.transpose();
  StationaryCovariance out;
  out.c = solve_lyapunov(model.a, q);
  const double qn = std::max(q.norm(), 1e-300);
  out.residual = (model.a * out.c + out.c * model.a.transpose() + q).norm() / qn;
  if (out.residual > 1e-10)
    throw SpecError("lyapunov solve residual " + std::to_string(out.residual) +
                    " exceeds certification bound");
  return out;
}

ExactObservables exact_observables(const LinearSDEModel& model, const StationaryCovariance& cov) {
  if (model.lattice.dimension != 1 || model.lattice.nu != 1)
    throw SpecError("exact observables are implemented for 1d chains");
  const int n = model.lattice.n1;
  const double m = model.lattice.mass;
  const double k = model.lattice.pair.stiffness();
  const ChainLayout lo{model.reduced, n, model.p_offset()};

  ExactObservables out;
  out.bond_fluxes = Eigen::ArrayXd::Zero(n - 1);
  for (int i = 0; i + 1 < n; ++i)
    out.bond_fluxes[i] = exact_bond_current(cov.c, lo, k, m, i);
  out.flux = out.bond_fluxes.size() ? out.bond_fluxes.mean() : 0.0;
  out.profile = Eigen::ArrayXd::Zero(n);
  for (int i = 0; i < n; ++i) out.profile[i] = cov.c(lo.po + i, lo.po + i) / m;
  const double dt_res = model.reservoir.t_left - model.reservoir.t_right;
  out.kappa = dt_res != 0.0 ? out.flux * n / dt_res : 0.0;
  return out;
}

SelfConsistentResult self_consistent_profile(const LatticeSpec& lattice, double t_left,
                                             double t_right, double tolerance,
                                             double lambda_bulk, int max_iterations) {
  lattice.validate();
  if (lattice.dimension != 1 || lattice.nu != 1 || !lattice.quadratic())
    throw SpecError("self-consistent profile requires a quadratic 1d chain");
  if (t_left <= 0 || t_right <= 0) throw SpecError("temperatures must be positive");
  if (lambda_bulk <= 0) throw SpecError("lambda_bulk must be positive");
  const int n = lattice.n1;
  if (n < 3) throw SpecError("self-consistent profile needs at least 3 sites");

  const bool reduced = lattice.end_bc == EndBc::Free && lattice.translation_invariant();
  const double m = lattice.mass;
  const double k = lattice.pair.stiffness();
  const ChainLayout lo{reduced, n, n - (reduced ? 1 : 0)};
  const Eigen::ArrayXd lam = Eigen::ArrayXd::Constant(n, lambda_bulk);
  const Lattice lat(lattice);
  const int n_int = n - 2;

  Eigen::ArrayXd temps(n);
  for (int i = 0; i < n; ++i)
    temps[i] = t_left + (t_right - t_left) * static_cast<double>(i) / (n - 1);

  Eigen::MatrixXd a, b;
  if (reduced)
    assemble_reduced(lattice, lam, temps, a, b);
  else
    assemble_full(lat, lam, temps, a, b);
  double max_real = 0.0;
  if (!is_hurwitz(a, &max_real)) throw SpecError("self-consistent chain drift is not Hurwitz");
  // A is independent of the bath temperatures, so one Schur factorization
  // serves every Lyapunov solve below.
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw SpecError("schur decomposition failed");
  const int dim = static_cast<int>(a.rows());

  auto kinetic_temps = [&](const Eigen::ArrayXd& t, Eigen::MatrixXd& c) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim, dim);
    for (int s = 0; s < n; ++s) q(lo.po + s, lo.po + s) = 2.0 * lambda_bulk * t[s];
    c = lyapunov_backsolve(schur.matrixT(), schur.matrixU(), q);
    Eigen::ArrayXd out(n);
    for (int i = 0; i < n; ++i) out[i] = c(lo.po + i, lo.po + i) / m;
    return out;
  };
  const double rate_scale = lambda_bulk / m;
  auto finish = [&](int it, const Eigen::MatrixXd& c) {
    SelfConsistentResult out;
    out.iterations = it;
    out.temperatures = temps;
    double flux = 0.0;
    for (int i = 0; i + 1 < n; ++i) flux += exact_bond_current(c, lo, k, m, i);
    out.flux = flux / (n - 1);
    return out;
  };

  Eigen::MatrixXd c;
  Eigen::ArrayXd kin = kinetic_temps(temps, c);
  double residual = 0.0;
  for (int i = 1; i + 1 < n; ++i)
    residual = std::max(residual, rate_scale * std::abs(temps[i] - kin[i]));
  if (residual < tolerance) return finish(0, c);

  // The kinetic temperatures are an affine function of the bath temperatures
  // (the covariance is linear in B Bᵀ), so the fixed point solves a dense
  // linear system. Plain damped relaxation behaves like Jacobi sweeps of a
  // discrete diffusion problem and stalls long before tight tolerances.
  Eigen::MatrixXd response = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd c_unit;
  for (int s = 0; s < n; ++s) {
    Eigen::ArrayXd unit = Eigen::ArrayXd::Zero(n);
    unit[s] = 1.0;
    response.col(s) = kinetic_temps(unit, c_unit).matrix();
  }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n_int, n_int) -
                           response.block(1, 1, n_int, n_int);
  Eigen::VectorXd rhs = t_left * response.block(1, 0, n_int, 1) +
                        t_right * response.block(1, n - 1, n_int, 1);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);

  temps.segment(1, n_int) = lu.solve(rhs).array();
  for (int it = 1; it <= max_iterations; ++it) {
    if ((temps <= 0.0).any())
      throw SpecError("self-consistent temperatures left the physical domain");
    kin = kinetic_temps(temps, c);
    residual = 0.0;
    for (int i = 1; i + 1 < n; ++i)
      residual = std::max(residual, rate_scale * std::abs(temps[i] - kin[i]));
    if (residual < tolerance) return finish(it, c);
    temps.segment(1, n_int) +=
        lu.solve((kin - temps).segment(1, n_int).matrix()).array();
  }
  throw SpecError("self-consistent temperature iteration did not converge");
}

}  // namespace nesslab
