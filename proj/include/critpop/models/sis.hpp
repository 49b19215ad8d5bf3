#pragma once

#include <vector>

#include <Eigen/Core>

#include "critpop/engines.hpp"
#include "critpop/models/polar.hpp"

namespace critpop {

struct SisEnvironment {
  Eigen::MatrixXd C; // contact rates, nonnegative and irreducible
  Eigen::VectorXd D; // curing rates, > 0
};

struct SisParams {
  std::vector<SisEnvironment> envs;

  void validate() const;
  Eigen::Index d() const { return envs.empty() ? 0 : envs.front().D.size(); }
  // A^k = C^k - Diag(D^k)
  Eigen::MatrixXd A(int k) const;
};

// Multi-group SIS field F(x) = (C - Diag(D)) x - Diag(x) C x on [0, 1]^d,
// switched by the environment.
class Sis {
public:
  using State = Eigen::VectorXd;

  explicit Sis(SisParams p);
  const SisParams& params() const noexcept { return p_; }
  int environments() const { return static_cast<int>(p_.envs.size()); }
  Eigen::Index d() const { return p_.d(); }
  const Eigen::MatrixXd& A(int k) const { return a_[static_cast<std::size_t>(k)]; }
  const Eigen::MatrixXd& C(int k) const { return p_.envs[static_cast<std::size_t>(k)].C; }

  State field(const State& x, int k) const {
    const Eigen::VectorXd cx = C(k) * x;
    return A(k) * x - x.cwiseProduct(cx);
  }
  bool contains(const State& x, double tol) const {
    return (x.array() >= -tol).all() && (x.array() <= 1.0 + tol).all();
  }
  bool admit(State& x, double allowance) const {
    return clamp_small_negatives(x, allowance) && contains(x, 1e-9);
  }
  double extinction(const State& x) const { return x.norm(); }

  // H(rho, theta, k) = -<A theta, theta> + rho <Diag(theta) C theta, theta>
  double h(double rho, const Eigen::VectorXd& theta, int k) const {
    return -theta.dot(A(k) * theta) + rho * theta.cwiseProduct(theta).dot(C(k) * theta);
  }
  // varsigma = min_i x_i (C x)_i
  double varsigma(const State& x, int k) const { return x.cwiseProduct(C(k) * x).minCoeff(); }

  // (rho, theta) with theta on the unit sphere.
  struct Polar {
    using State = Eigen::VectorXd;
    const Sis* m;
    State field(const State& z, int k) const;
    void project(State& z) const { project_to_sphere(z.tail(z.size() - 1)); }
  };
  Polar polar() const { return {this}; }

  // (log rho, theta): the same flow with the radius in log coordinates.
  struct LogPolar {
    using State = Eigen::VectorXd;
    const Sis* m;
    State field(const State& z, int k) const;
    void project(State& z) const { project_to_sphere(z.tail(z.size() - 1)); }
  };
  LogPolar log_polar() const { return {this}; }

  // theta on {rho = 0}: theta' = A theta - <A theta, theta> theta
  struct Boundary {
    using State = Eigen::VectorXd;
    const Sis* m;
    State field(const State& theta, int k) const {
      const Eigen::VectorXd at = m->A(k) * theta;
      return at - at.dot(theta) * theta;
    }
    double h(const State& theta, int k) const { return m->h(0.0, theta, k); }
    void project(State& theta) const { project_to_sphere(theta.head(theta.size())); }
  };
  Boundary boundary() const { return {this}; }

private:
  SisParams p_;
  std::vector<Eigen::MatrixXd> a_;
};

Eigen::VectorXd vector_field(const Sis& model, const Eigen::VectorXd& x, int k);
// H at a point of [0,1]^d \ {0}, through the sphere decomposition
double h_value(const Sis& model, const Eigen::VectorXd& x, int k);

} // namespace critpop
