#pragma once

#include <vector>

#include <Eigen/Core>

#include "critpop/engines.hpp"

namespace critpop {

struct SeirEnvironment {
  double beta = 1.0;   // transmission
  double gamma1 = 1.0; // disease-induced removal
  double delta = 1.0;  // incubation rate E -> I
};

struct SeirParams {
  double inflow = 1.0; // Lambda
  double gamma = 1.0;  // natural mortality
  std::vector<SeirEnvironment> envs{SeirEnvironment{}};

  void validate() const;
  double s_star() const { return inflow / gamma; }
  // Jacobian of (E, I) at the disease-free state
  Eigen::Matrix2d B(int k) const;
};

// SEIR in (s, u, v) = (S, E + I, I / (E + I)) coordinates:
//   s' = f_S,  u' = u f_U,  v' = f_V
class Seir {
public:
  using State = Eigen::Vector3d;

  explicit Seir(SeirParams p);
  const SeirParams& params() const noexcept { return p_; }
  int environments() const { return static_cast<int>(p_.envs.size()); }

  // f_S = Lambda - gamma s - beta s u v
  double f_s(const State& z, int k) const {
    return p_.inflow - p_.gamma * z(0) - env(k).beta * z(0) * z(1) * z(2);
  }
  // f_U = (beta s - gamma1) v - gamma
  double f_u(const State& z, int k) const {
    return (env(k).beta * z(0) - env(k).gamma1) * z(2) - p_.gamma;
  }
  // f_V = delta (1 - v) - gamma1 v - (beta s - gamma1) v^2
  double f_v(double s, double v, int k) const {
    const auto& e = env(k);
    return e.delta * (1.0 - v) - e.gamma1 * v - (e.beta * s - e.gamma1) * v * v;
  }
  double f_v(const State& z, int k) const { return f_v(z(0), z(2), k); }

  State field(const State& z, int k) const { return {f_s(z, k), z(1) * f_u(z, k), f_v(z, k)}; }
  double h(const State& z, int k) const { return -f_u(z, k); }
  // H~ = -f_U - f_V / v = gamma + gamma1 - delta (1 - v) / v; unchecked, v > 0
  double h_tilde(double v, int k) const {
    return p_.gamma + env(k).gamma1 - env(k).delta * (1.0 - v) / v;
  }
  double extinction(const State& z) const { return z(1); }
  bool contains(const State& z, double tol) const;
  bool admit(State& z, double allowance) const;

  // v~' = f_V(Lambda/gamma, 0, v~, k) on {u = 0}
  struct Boundary {
    using State = Eigen::Matrix<double, 1, 1>;
    const Seir* m;
    State field(const State& v, int k) const { return State(m->f_v(m->p_.s_star(), v(0), k)); }
  };
  Boundary boundary() const { return {this}; }

  // (s, log u, v)
  struct LogU {
    using State = Eigen::Vector3d;
    const Seir* m;
    State field(const State& z, int k) const {
      const Eigen::Vector3d w(z(0), std::exp(z(1)), z(2));
      return {m->f_s(w, k), m->f_u(w, k), m->f_v(w, k)};
    }
  };
  LogU log_u() const { return {this}; }

private:
  const SeirEnvironment& env(int k) const { return p_.envs[static_cast<std::size_t>(k)]; }
  SeirParams p_;
};

Eigen::Vector3d vector_field(const Seir& model, const Eigen::Vector3d& z, int k);
double h_value(const Seir& model, const Eigen::Vector3d& z, int k);
// Checked H~; SingularAtBoundary at v = 0.
double h_tilde_value(const Seir& model, const Eigen::Vector3d& z, int k);

} // namespace critpop
