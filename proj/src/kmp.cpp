#include "nesslab/kmp.hpp"

#include <cmath>

#include "nesslab/lattice.hpp"

namespace nesslab {

void KmpSpec::validate() const {
  if (sites < 2) throw SpecError("kmp.sites must be at least 2");
  if (!(t_left > 0.0) || !(t_right > 0.0))
    throw SpecError("kmp temperatures must be positive");
  if (!(gamma_exchange > 0.0))
    throw SpecError("kmp.gamma_exchange must be positive");
  if (!(gamma_boundary >= 0.0))
    throw SpecError("kmp.gamma_boundary must be nonnegative");
}

KmpState kmp_initial(const KmpSpec& spec, CounterRng& rng) {
  spec.validate();
  KmpState state;
  state.e.resize(spec.sites);
  for (int i = 0; i < spec.sites; ++i) {
    const double frac =
        spec.sites > 1 ? static_cast<double>(i) / (spec.sites - 1) : 0.0;
    const double mean = spec.t_left + frac * (spec.t_right - spec.t_left);
    state.e[i] = rng.exponential(mean);
  }
  return state;
}

KmpEvent kmp_step(const KmpSpec& spec, KmpState& state, CounterRng& rng) {
  const int n = spec.sites;
  const double pair_rate = (n - 1) * spec.gamma_exchange;
  const double total_rate = pair_rate + 2.0 * spec.gamma_boundary;

  KmpEvent event;
  event.wait = rng.exponential(1.0 / total_rate);
  state.time += event.wait;

  const double pick = rng.uniform() * total_rate;
  if (pick < pair_rate) {
    int bond = static_cast<int>(pick / spec.gamma_exchange);
    if (bond > n - 2) bond = n - 2;
    const double before = state.e[bond];
    kmp_pair_update(state.e[bond], state.e[bond + 1], rng.uniform());
    event.bond = bond;
    event.transfer = before - state.e[bond];
  } else if (pick < pair_rate + spec.gamma_boundary) {
    const double fresh = rng.exponential(spec.t_left);
    event.from_left = fresh - state.e[0];
    state.e[0] = fresh;
  } else {
    const double fresh = rng.exponential(spec.t_right);
    event.from_right = fresh - state.e[n - 1];
    state.e[n - 1] = fresh;
  }
  return event;
}

KmpResult kmp_run(const KmpSpec& spec, const KmpOptions& options) {
  spec.validate();
  if (options.events <= 0) throw SpecError("kmp events must be positive");
  if (options.burn_in_events < 0)
    throw SpecError("kmp burn_in_events must be nonnegative");
  if (options.blocks < 2) throw SpecError("kmp blocks must be at least 2");
  if (options.events < options.blocks)
    throw SpecError("kmp needs at least one event per block");

  const int n = spec.sites;
  const int mid = (n - 1) / 2;
  CounterRng rng(options.seed, 0);
  KmpState state = kmp_initial(spec, rng);

  for (std::int64_t k = 0; k < options.burn_in_events; ++k)
    kmp_step(spec, state, rng);

  const int blocks = options.blocks;
  const std::int64_t per_block = options.events / blocks;
  Eigen::ArrayXXd block_profile =
      Eigen::ArrayXXd::Zero(n, blocks);  // column per block
  Eigen::ArrayXd block_flux = Eigen::ArrayXd::Zero(blocks);
  double total_time = 0.0;
  double in_left = 0.0;
  double in_right = 0.0;
  std::int64_t events_done = 0;

  Eigen::ArrayXd held(n);
  for (int b = 0; b < blocks; ++b) {
    Eigen::ArrayXd weighted = Eigen::ArrayXd::Zero(n);
    double duration = 0.0;
    double moved = 0.0;
    for (std::int64_t k = 0; k < per_block; ++k) {
      held = state.e;
      const KmpEvent event = kmp_step(spec, state, rng);
      weighted += held * event.wait;
      duration += event.wait;
      if (event.bond == mid) moved += event.transfer;
      in_left += event.from_left;
      in_right += event.from_right;
      ++events_done;
    }
    block_profile.col(b) = weighted / duration;
    block_flux[b] = moved / duration;
    total_time += duration;
  }

  KmpResult out;
  out.events = events_done;
  out.total_time = total_time;
  out.heat_left = in_left / total_time;
  out.heat_right = in_right / total_time;

  out.profile = block_profile.rowwise().mean();
  Eigen::ArrayXd var =
      (block_profile.colwise() - out.profile).square().rowwise().sum() /
      (blocks - 1);
  out.profile_err = (var / blocks).sqrt();

  out.flux = block_flux.mean();
  out.flux_err = std::sqrt(
      (block_flux - out.flux).square().sum() / (blocks - 1) / blocks);

  const double delta_t = spec.t_left - spec.t_right;
  if (delta_t != 0.0) {
    out.kappa = out.flux * (n - 1) / delta_t;
    out.kappa_err = out.flux_err * (n - 1) / std::abs(delta_t);
  }
  const double gap = out.profile[0] - out.profile[n - 1];
  if (gap != 0.0) {
    out.kappa_bulk = out.flux * (n - 1) / gap;
    const double gap_err = std::sqrt(out.profile_err[0] * out.profile_err[0] +
                                     out.profile_err[n - 1] * out.profile_err[n - 1]);
    const double rel_flux = out.flux != 0.0 ? out.flux_err / out.flux : 0.0;
    const double rel_gap = gap_err / gap;
    out.kappa_bulk_err = std::abs(out.kappa_bulk) *
                         std::sqrt(rel_flux * rel_flux + rel_gap * rel_gap);
  }
  return out;
}

}  // namespace nesslab
