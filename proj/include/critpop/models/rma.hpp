#pragma once

#include <cmath>

#include <Eigen/Core>

#include "critpop/engines.hpp"

namespace critpop {

struct RmaParams {
  double K = 4.0;       // prey carrying capacity
  double alpha = 0.5;   // predator mortality
  double epsilon = 1.0; // prey noise intensity

  void validate() const;
  // eps^2 > 2 drives both species to 0
  bool noise_dominated() const { return epsilon * epsilon > 2.0; }
  // int x d mu_x for the boundary logistic law
  double boundary_mean() const { return K * (1.0 - epsilon * epsilon / 2.0); }
};

// dX = X(1 - X/K - Y/(1+X)) dt + eps X dB,  dY = Y(-alpha + X/(1+X)) dt.
class Rma {
public:
  using State = Eigen::Vector2d;
  using Noise = Eigen::Matrix<double, 1, 1>;

  explicit Rma(RmaParams p);
  const RmaParams& params() const noexcept { return p_; }

  Eigen::Index noise_dim() const { return 1; }
  State drift(const State& z) const {
    const double x = z(0), y = z(1);
    return {x * (1.0 - x / p_.K - y / (1.0 + x)), y * (-p_.alpha + x / (1.0 + x))};
  }
  State diffuse(const State& z, const Noise& dw) const { return {p_.epsilon * z(0) * dw(0), 0.0}; }
  bool admit(State& z, double allowance) const { return clamp_small_negatives(z, allowance); }

  double lambda1(const State& z) const {
    return 1.0 - z(0) / p_.K - z(1) / (1.0 + z(0)) - p_.epsilon * p_.epsilon / 2.0;
  }
  double lambda2(const State& z) const { return -p_.alpha + z(0) / (1.0 + z(0)); }
  // generator applied to log(1 + x + y)
  double h1(const State& z) const {
    const double x = z(0), y = z(1), w = 1.0 + x + y;
    return (x - p_.alpha * y - x * x / p_.K) / w -
           p_.epsilon * p_.epsilon * x * x / (2.0 * w * w);
  }
  double h(const State& z) const { return h1(z) - lambda2(z); }
  double extinction(const State& z) const { return z(1); }

  // Boundary logistic dX = X(1 - X/K) dt + eps X dB on {y = 0}.
  struct Logistic {
    using State = Eigen::Matrix<double, 1, 1>;
    using Noise = Eigen::Matrix<double, 1, 1>;
    const RmaParams* p;
    Eigen::Index noise_dim() const { return 1; }
    State drift(const State& x) const { return State(x(0) * (1.0 - x(0) / p->K)); }
    State diffuse(const State& x, const Noise& dw) const { return State(p->epsilon * x(0) * dw(0)); }
    bool admit(State& x, double allowance) const { return clamp_small_negatives(x, allowance); }
  };
  Logistic boundary() const { return {&p_}; }

  // (x, log y); the predator equation has no noise so log y is exact.
  struct LogPredator {
    using State = Eigen::Vector2d;
    using Noise = Eigen::Matrix<double, 1, 1>;
    const RmaParams* p;
    Eigen::Index noise_dim() const { return 1; }
    State drift(const State& z) const {
      const double x = z(0), y = std::exp(z(1));
      return {x * (1.0 - x / p->K - y / (1.0 + x)), -p->alpha + x / (1.0 + x)};
    }
    State diffuse(const State& z, const Noise& dw) const { return {p->epsilon * z(0) * dw(0), 0.0}; }
    bool admit(State& z, double allowance) const {
      return clamp_small_negatives(z, allowance, 0, 1);
    }
  };
  LogPredator log_predator() const { return {&p_}; }

private:
  RmaParams p_;
};

DriftDiffusion drift_diffusion(const Rma& model, const Eigen::Vector2d& z);
double h_value(const Rma& model, const Eigen::Vector2d& z);

} // namespace critpop
