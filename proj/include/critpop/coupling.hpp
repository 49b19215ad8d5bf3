#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "critpop/engines.hpp"
#include "critpop/models/model.hpp"

namespace critpop {

// Result of simulating a model in lockstep with its comparison processes.
struct CoupledRun {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::string model;
  std::size_t grid_points = 0;
  // order checks failing by more than 10 dt L max(|a|, |b|), L the local
  // Lipschitz bound of the coupled drift
  std::size_t violations = 0;
  // largest relative order failure seen (allowed or not)
  double worst_violation = 0.0;
  // time-average over [burn_in, T] of the quantity the comparison argument
  // makes positive: X^ - X (RMA), varsigma (patchy, SIS), V - V~ (SEIR)
  double gap_mean = 0.0;
  double gap_se = 0.0;
  // max over the grid of |Ybar - Y~| (patchy) or |Theta_bar - Theta~| (SIS)
  double direction_gap = kNaN;
  // patchy: |log Sbar_T - log S~_T + int_0^T varsigma| / T
  double growth_identity_residual = kNaN;
  // SEIR: min of V over [burn_in, T]
  double min_v = kNaN;

  // observables of the coupled processes at evenly spaced checkpoints
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// X and the boundary logistic X^ from the same X_0 and Brownian path; claims X <= X^.
CoupledRun couple_rma(const Rma& model, const Eigen::Vector2d& x0, const IntegratorConfig& cfg,
                      NoiseStream& rng, int checkpoints = 1000);

// X, the varsigma-damped linear Xbar and the linear X~, all from x0 and one
// Brownian path; claims X <= Xbar <= X~ componentwise.
CoupledRun couple_patchy(const Patchy& model, const Eigen::VectorXd& x0,
                         const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints = 1000);

// X, Xbar' = (A - varsigma I) Xbar and Y' = A Y under one chain path; claims
// X <= Xbar <= Y componentwise. varsigma is evaluated from the nonlinear
// state at every Runge-Kutta stage.
CoupledRun couple_sis(const Sis& model, const Eigen::VectorXd& x0, const RateMatrix& q, int k0,
                      const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints = 1000);

// (s, u, v) and v~' = f_V(Lambda/gamma, 0, v~) under one chain path with
// v~_0 = v_0; claims V >= V~.
CoupledRun couple_seir(const Seir& model, const Eigen::Vector3d& z0, const RateMatrix& q, int k0,
                       const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints = 1000);

CoupledRun couple(const ModelSpec& spec, const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                  NoiseStream& rng, int checkpoints = 1000);

} // namespace critpop
