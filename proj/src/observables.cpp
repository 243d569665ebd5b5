#include "nesslab/observables.hpp"

#include <cmath>

namespace nesslab {

namespace {

double bond_psi(const Lattice& lat, const SystemState& state, const Bond& b) {
  const LatticeSpec& spec = lat.spec();
  const int nu = spec.nu;
  double psi = 0.0;
  for (int c = 0; c < nu; ++c) {
    const double x = state.q[b.a * nu + c] - (b.wall() ? 0.0 : state.q[b.b * nu + c]);
    const double f = -pair_deriv(spec.pair, x);
    const double psum = state.p[b.a * nu + c] + (b.wall() ? 0.0 : state.p[b.b * nu + c]);
    psi += f * psum / 2.0;
  }
  return psi;
}

}  // namespace

double bond_flux(const Lattice& lat, const SystemState& state, int site, int direction) {
  check_shape(lat, state);
  if (site < 0 || site >= lat.site_count()) throw SpecError("site out of range");
  for (int bi : lat.incident_bonds(site)) {
    const Bond& b = lat.bonds()[bi];
    if (b.a == site && b.direction == direction && !b.wall()) return bond_psi(lat, state, b);
  }
  throw SpecError("no bond from this site in the requested direction");
}

double plane_flux(const Lattice& lat, const SystemState& state, int plane) {
  check_shape(lat, state);
  if (plane < 0 || plane >= lat.plane_count()) throw SpecError("plane index out of range");
  double phi = 0.0;
  for (int bi : lat.plane_bonds(plane)) phi += bond_psi(lat, state, lat.bonds()[bi]);
  return phi;
}

double heat_current(const Lattice& lat, const SystemState& state, int plane) {
  return -plane_flux(lat, state, plane) / lat.mass();
}

double mean_heat_current(const Lattice& lat, const SystemState& state) {
  const int planes = lat.plane_count();
  double sum = 0.0;
  for (int j = 0; j < planes; ++j) sum += heat_current(lat, state, j);
  return sum / planes;
}

double continuity_residual(const Lattice& lat, const std::vector<SystemState>& trajectory,
                           int site, double dt) {
  if (trajectory.size() < 3) throw SpecError("continuity_residual needs at least 3 snapshots");
  if (site < 0 || site >= lat.site_count()) throw SpecError("site out of range");
  const LatticeSpec& spec = lat.spec();
  const int i1 = site % spec.n1;
  if (spec.end_bc != EndBc::Periodic && (i1 == 0 || i1 == spec.n1 - 1))
    throw SpecError("continuity_residual requires a bulk site");

  auto divergence = [&](const SystemState& s) {
    double div = 0.0;
    for (int bi : lat.incident_bonds(site)) {
      const Bond& b = lat.bonds()[bi];
      if (b.wall()) continue;
      const double psi = bond_psi(lat, s, b);
      div += (b.a == site) ? psi : -psi;
    }
    return div / lat.mass();
  };

  double worst = 0.0;
  for (std::size_t t = 1; t + 1 < trajectory.size(); ++t) {
    const double dh = (local_energy(lat, trajectory[t + 1], site) -
                       local_energy(lat, trajectory[t - 1], site)) /
                      (2.0 * dt);
    worst = std::max(worst, std::abs(dh - divergence(trajectory[t])));
  }
  return worst;
}

Eigen::ArrayXd kinetic_temperature_profile(const Lattice& lat,
                                           const std::vector<SystemState>& samples) {
  if (samples.empty()) throw SpecError("kinetic_temperature_profile needs samples");
  const LatticeSpec& spec = lat.spec();
  Eigen::ArrayXd profile = Eigen::ArrayXd::Zero(spec.n1);
  for (const SystemState& s : samples) {
    check_shape(lat, s);
    for (int j = 0; j < spec.n1; ++j) {
      double sum = 0.0;
      for (int site : lat.plane_sites(j))
        for (int c = 0; c < spec.nu; ++c) {
          const double p = s.p[site * spec.nu + c];
          sum += p * p;
        }
      profile[j] += sum;
    }
  }
  profile /= static_cast<double>(samples.size()) * spec.n2 * spec.nu * spec.mass;
  return profile;
}

BlockStats block_stats(const std::vector<double>& values, int blocks) {
  if (blocks < 2) throw SpecError("block_stats needs at least 2 blocks");
  const std::int64_t n = static_cast<std::int64_t>(values.size());
  if (n < 2 * blocks) throw SpecError("series too short for the requested block count");

  auto stats_at = [&](int nb, double& mean, double& err) {
    const std::int64_t len = n / nb;
    double sum = 0.0, sq = 0.0;
    for (int b = 0; b < nb; ++b) {
      double bs = 0.0;
      for (std::int64_t i = b * len; i < (b + 1) * len; ++i) bs += values[i];
      const double bm = bs / len;
      sum += bm;
      sq += bm * bm;
    }
    mean = sum / nb;
    const double var = std::max(0.0, (sq - nb * mean * mean) / (nb - 1));
    err = std::sqrt(var / nb);
  };

  BlockStats out;
  out.blocks = blocks;
  stats_at(blocks, out.mean, out.stderr_);
  if (blocks / 2 >= 2) {
    double m2 = 0.0;
    stats_at(blocks / 2, m2, out.stderr_doubled);
    out.correlation_flag =
        std::abs(out.stderr_doubled - out.stderr_) > 0.2 * std::max(out.stderr_, 1e-300);
  }
  return out;
}

void ObservableSeries::finalize(int block_count) {
  const BlockStats s = block_stats(values, block_count);
  mean = s.mean;
  stderr_ = s.stderr_;
  blocks = s.blocks;
  correlation_flag = s.correlation_flag;
}

BlockAccumulator::BlockAccumulator(int size, std::int64_t samples, int blocks) {
  block_len_ = std::max<std::int64_t>(1, samples / blocks);
  block_sum_ = Eigen::ArrayXd::Zero(size);
  mean_sum_ = Eigen::ArrayXd::Zero(size);
  sq_sum_ = Eigen::ArrayXd::Zero(size);
}

void BlockAccumulator::add(const Eigen::ArrayXd& sample) {
  block_sum_ += sample;
  if (++in_block_ == block_len_) {
    const Eigen::ArrayXd bm = block_sum_ / static_cast<double>(block_len_);
    mean_sum_ += bm;
    sq_sum_ += bm.square();
    ++filled_;
    block_sum_.setZero();
    in_block_ = 0;
  }
}

Eigen::ArrayXd BlockAccumulator::mean() const {
  if (filled_ == 0) throw SpecError("no complete blocks accumulated");
  return mean_sum_ / filled_;
}

Eigen::ArrayXd BlockAccumulator::standard_error() const {
  if (filled_ < 2) throw SpecError("standard error needs at least 2 blocks");
  const Eigen::ArrayXd m = mean_sum_ / filled_;
  const Eigen::ArrayXd var = ((sq_sum_ / filled_) - m.square()).max(0.0) *
                             (static_cast<double>(filled_) / (filled_ - 1));
  return (var / filled_).sqrt();
}

void pool_estimates(const std::vector<double>& means, const std::vector<double>& errs,
                    double& mean_out, double& err_out) {
  if (means.empty() || means.size() != errs.size())
    throw SpecError("pool_estimates needs matching nonempty inputs");
  const double r = static_cast<double>(means.size());
  double ms = 0.0, vs = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    ms += means[i];
    vs += errs[i] * errs[i];
  }
  mean_out = ms / r;
  err_out = std::sqrt(vs) / r;
}

}  // namespace nesslab
