#include "nesslab/thermostats.hpp"

#include <algorithm>
#include <cmath>

namespace nesslab {

namespace {

void check_site_set(const std::vector<int>& sites, int site_count, const char* which) {
  for (int s : sites) {
    if (s < 0 || s >= site_count)
      throw SpecError(std::string("reservoir.") + which + "_sites contains an out-of-range site");
  }
}

}  // namespace

void ReservoirSpec::validate(const LatticeSpec& lattice) const {
  if (kind == ReservoirKind::None) return;
  if (t_left <= 0 || t_right <= 0) throw SpecError("reservoir temperatures must be positive");
  check_site_set(left_sites, lattice.site_count(), "left");
  check_site_set(right_sites, lattice.site_count(), "right");
  for (int s : left_sites)
    if (std::find(right_sites.begin(), right_sites.end(), s) != right_sites.end())
      throw SpecError("reservoir site sets must be disjoint");
  switch (kind) {
    case ReservoirKind::Langevin:
      if (lambda_left < 0 || lambda_right < 0)
        throw SpecError("reservoir.lambda must be nonnegative");
      break;
    case ReservoirKind::Extended:
      if (lattice.dimension != 1 || lattice.nu != 1)
        throw SpecError("extended reservoirs require a 1d chain with scalar displacements");
      if (!left_sites.empty() || !right_sites.empty())
        throw SpecError("extended reservoirs couple to the chain ends only");
      if (lambda_left < 0 || lambda_right < 0 || gamma_left < 0 || gamma_right < 0)
        throw SpecError("reservoir.lambda/gamma must be nonnegative");
      if (lattice.translation_invariant())
        throw SpecError(
            "extended reservoirs soften the end sites by -lambda^2 q^2 / 2; "
            "the chain needs an on-site potential or fixed walls to stay confined");
      break;
    case ReservoirKind::NoseHoover:
      if (theta <= 0) throw SpecError("reservoir.theta must be positive");
      if (g_left < 0 || g_right < 0) throw SpecError("reservoir.g must be nonnegative");
      break;
    default:
      break;
  }
}

ReservoirSites resolve_sites(const ReservoirSpec& res, const Lattice& lat) {
  ReservoirSites out;
  if (res.kind == ReservoirKind::None) return out;
  out.left = res.left_sites.empty() ? lat.left_face() : res.left_sites;
  if (lat.spec().n1 == 1 && res.right_sites.empty()) {
    out.right.clear();  // single-plane chain: one reservoir only
  } else {
    out.right = res.right_sites.empty() ? lat.right_face() : res.right_sites;
  }
  const double nu = lat.nu();
  out.g_left = res.g_left > 0 ? res.g_left : nu * static_cast<double>(out.left.size());
  out.g_right = res.g_right > 0 ? res.g_right : nu * static_cast<double>(out.right.size());
  return out;
}

LangevinTerms langevin_terms(const ReservoirSpec& res, const Lattice& lat,
                             const SystemState& state) {
  if (res.kind != ReservoirKind::Langevin)
    throw SpecError("langevin_terms requires a langevin reservoir");
  check_shape(lat, state);
  LangevinTerms out;
  out.drift = Eigen::ArrayXd::Zero(lat.dof());
  out.noise_amp = Eigen::ArrayXd::Zero(lat.dof());
  const ReservoirSites sites = resolve_sites(res, lat);
  const int nu = lat.nu();
  const double m = lat.mass();
  auto apply = [&](const std::vector<int>& set, double lambda, double temp) {
    const double amp = std::sqrt(2.0 * lambda * temp);
    for (int s : set) {
      for (int c = 0; c < nu; ++c) {
        const int i = s * nu + c;
        out.drift[i] = -lambda * state.p[i] / m;
        out.noise_amp[i] = amp;
      }
    }
  };
  apply(sites.left, res.lambda_left, res.t_left);
  apply(sites.right, res.lambda_right, res.t_right);
  return out;
}

ExtendedTerms extended_terms(const ReservoirSpec& res, const Lattice& lat,
                             const SystemState& state) {
  if (res.kind != ReservoirKind::Extended)
    throw SpecError("extended_terms requires an extended reservoir");
  check_shape(lat, state);
  const int last = lat.site_count() - 1;
  const double q_first = state.q[0];
  const double q_last = state.q[last];
  ExtendedTerms out;
  out.force = {state.aux_left, state.aux_right};
  out.drift = {-res.gamma_left * (state.aux_left - res.lambda_left * res.lambda_left * q_first),
               -res.gamma_right * (state.aux_right - res.lambda_right * res.lambda_right * q_last)};
  out.noise_amp = {
      std::sqrt(2.0 * res.gamma_left * res.lambda_left * res.lambda_left * res.t_left),
      std::sqrt(2.0 * res.gamma_right * res.lambda_right * res.lambda_right * res.t_right)};
  return out;
}

double effective_energy(const Lattice& lat, const ReservoirSpec& res, const SystemState& state) {
  double e = total_energy(lat, state);
  if (res.kind == ReservoirKind::Extended) {
    const int last = lat.site_count() - 1;
    e -= 0.5 * res.lambda_left * res.lambda_left * state.q[0] * state.q[0];
    e -= 0.5 * res.lambda_right * res.lambda_right * state.q[last] * state.q[last];
  }
  return e;
}

double set_kinetic_energy(const Lattice& lat, const SystemState& state,
                          const std::vector<int>& sites) {
  const int nu = lat.nu();
  double k = 0.0;
  for (int s : sites)
    for (int c = 0; c < nu; ++c) k += state.p[s * nu + c] * state.p[s * nu + c];
  return k / (2.0 * lat.mass());
}

NoseHooverTerms nose_hoover_terms(const ReservoirSpec& res, const Lattice& lat,
                                  const SystemState& state) {
  if (res.kind != ReservoirKind::NoseHoover)
    throw SpecError("nose_hoover_terms requires a nose_hoover reservoir");
  check_shape(lat, state);
  NoseHooverTerms out;
  out.drift = Eigen::ArrayXd::Zero(lat.dof());
  const ReservoirSites sites = resolve_sites(res, lat);
  const int nu = lat.nu();
  const double m = lat.mass();
  const double inv_theta2 = 1.0 / (res.theta * res.theta);
  auto apply = [&](const std::vector<int>& set, double zeta, double g, double temp) {
    for (int s : set)
      for (int c = 0; c < nu; ++c) out.drift[s * nu + c] = -zeta * state.p[s * nu + c] / m;
    if (set.empty()) return 0.0;
    const double kin = set_kinetic_energy(lat, state, set);
    return inv_theta2 * (2.0 * kin / (g * temp) - 1.0);
  };
  out.zeta_dot.left = apply(sites.left, state.aux_left, sites.g_left, res.t_left);
  out.zeta_dot.right = apply(sites.right, state.aux_right, sites.g_right, res.t_right);
  return out;
}

SideValues gaussian_zeta(const ReservoirSpec& res, const Lattice& lat, const SystemState& state,
                         const Eigen::ArrayXd& force) {
  if (res.kind != ReservoirKind::GaussianIso)
    throw SpecError("gaussian_zeta requires a gaussian reservoir");
  check_shape(lat, state);
  const ReservoirSites sites = resolve_sites(res, lat);
  const int nu = lat.nu();
  auto one = [&](const std::vector<int>& set) {
    if (set.empty()) return 0.0;
    double num = 0.0, den = 0.0;
    for (int s : set) {
      for (int c = 0; c < nu; ++c) {
        const int i = s * nu + c;
        num += state.p[i] * force[i];
        den += state.p[i] * state.p[i];
      }
    }
    if (den == 0.0) throw ConstraintSingular("isokinetic constraint singular: zero kinetic energy in thermostated set");
    return num / den;
  };
  SideValues out;
  out.left = one(sites.left);
  out.right = one(sites.right);
  return out;
}

}  // namespace nesslab
