#pragma once

#include "critpop/engines.hpp"
#include "critpop/occupation.hpp"

namespace critpop {

// Batch-means time average of f(x, k) along a PDMP path. At a switch the
// segment before it closes with the old environment and the next one opens
// with the new one.
template <PdmpSystem System, typename F>
BatchMeans pdmp_time_average(const System& sys, const RateMatrix& q,
                             const typename System::State& x0, int k0,
                             const IntegratorConfig& cfg, NoiseStream& rng, F&& f,
                             int batches = BatchMeans::kDefaultBatches) {
  BatchMeans acc(cfg.burn_in, cfg.horizon, batches);
  int prev = k0;
  pdmp_simulate(sys, q, x0, k0, cfg, rng, [&](double t, const auto& x, int k) {
    acc.observe(t, f(x, prev), f(x, k));
    prev = k;
  });
  return acc;
}

template <SdeSystem System, typename F>
BatchMeans sde_time_average(const System& sys, const typename System::State& x0,
                            const IntegratorConfig& cfg, NoiseStream& rng, F&& f,
                            int batches = BatchMeans::kDefaultBatches) {
  BatchMeans acc(cfg.burn_in, cfg.horizon, batches);
  sde_simulate(sys, x0, cfg, rng, [&](double t, const auto& x, int) { acc.observe(t, f(x)); });
  return acc;
}

} // namespace critpop
