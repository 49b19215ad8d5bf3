#pragma once

#include <Eigen/Core>

#include "critpop/engines.hpp"
#include "critpop/models/polar.hpp"

namespace critpop {

// n patches, logistic growth a_i - c_i x_i inside each, dispersal D and
// correlated noise E = Gamma^T B.
struct PatchyParams {
  Eigen::VectorXd a;     // per-capita growth rates
  Eigen::VectorXd c;     // competition slopes, b_i(x) = c_i x
  Eigen::MatrixXd D;     // D(j, i) >= 0: dispersal rate from patch j to patch i
  Eigen::MatrixXd Gamma; // noise loading

  Eigen::Index n() const { return a.size(); }
  // Validates and fills D(i, i) = -sum_{j != i} D(i, j), so every row sums to
  // zero and dispersal conserves total abundance.
  void validate();
  Eigen::MatrixXd sigma() const { return Gamma.transpose() * Gamma; }
};

class Patchy {
public:
  using State = Eigen::VectorXd;
  using Noise = Eigen::VectorXd;

  explicit Patchy(PatchyParams p);
  const PatchyParams& params() const noexcept { return p_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  Eigen::Index n() const { return p_.n(); }

  // X coordinates
  Eigen::Index noise_dim() const { return n(); }
  State drift(const State& x) const {
    return (x.array() * (p_.a - p_.c.cwiseProduct(x)).array()).matrix() + p_.D.transpose() * x;
  }
  State diffuse(const State& x, const Noise& dw) const {
    return x.cwiseProduct(p_.Gamma.transpose() * dw);
  }
  bool admit(State& x, double allowance) const { return clamp_small_negatives(x, allowance); }
  double extinction(const State& x) const { return x.sum(); }

  // varsigma = min_i b_i(x_i)
  double varsigma(const State& x) const { return p_.c.cwiseProduct(x).minCoeff(); }

  // H1(s, y) = s/(1+s) (a - b(sy))^T y - s^2/(2(1+s)^2) y^T Sigma y
  double h1(double s, const Eigen::VectorXd& y) const;
  // H2(s, y) = (a - b(sy))^T y - y^T Sigma y / 2
  double h2(double s, const Eigen::VectorXd& y) const;
  double h(double s, const Eigen::VectorXd& y) const { return h1(s, y) - h2(s, y); }
  // boundary integrand of r: a^T y - y^T Sigma y / 2
  double boundary_rate(const Eigen::VectorXd& y) const { return h2(0.0, y); }

  // Simplex drift / diffusion of Y; `s` is the total abundance (0 on the boundary).
  Eigen::VectorXd y_drift(double s, const Eigen::VectorXd& y) const;
  Eigen::VectorXd y_diffuse(const Eigen::VectorXd& y, const Noise& dw) const;

  // (S, Y) with Y in the simplex.
  struct Polar {
    using State = Eigen::VectorXd;
    using Noise = Eigen::VectorXd;
    const Patchy* m;
    Eigen::Index noise_dim() const { return m->n(); }
    State drift(const State& z) const;
    State diffuse(const State& z, const Noise& dw) const;
    bool admit(State& z, double allowance) const { return clamp_small_negatives(z, allowance); }
    void project(State& z) const { project_to_simplex(z.tail(z.size() - 1)); }
  };
  Polar polar() const { return {this}; }

  // Y alone on {S = 0}.
  struct Boundary {
    using State = Eigen::VectorXd;
    using Noise = Eigen::VectorXd;
    const Patchy* m;
    Eigen::Index noise_dim() const { return m->n(); }
    State drift(const State& y) const { return m->y_drift(0.0, y); }
    State diffuse(const State& y, const Noise& dw) const { return m->y_diffuse(y, dw); }
    bool admit(State& y, double allowance) const { return clamp_small_negatives(y, allowance); }
    void project(State& y) const { project_to_simplex(y.head(y.size())); }
  };
  Boundary boundary() const { return {this}; }

  // (log S~, Y~) for the linearized system: d log S~ = (a^T Y - Y^T Sigma Y / 2) dt + Y^T Gamma^T dB.
  struct LinearLog {
    using State = Eigen::VectorXd;
    using Noise = Eigen::VectorXd;
    const Patchy* m;
    Eigen::Index noise_dim() const { return m->n(); }
    State drift(const State& z) const;
    State diffuse(const State& z, const Noise& dw) const;
    bool admit(State& z, double allowance) const {
      return clamp_small_negatives(z, allowance, 1, z.size());
    }
    void project(State& z) const { project_to_simplex(z.tail(z.size() - 1)); }
  };
  LinearLog linear_log() const { return {this}; }

  // log X coordinates, for runs that follow the population towards 0.
  struct LogX {
    using State = Eigen::VectorXd;
    using Noise = Eigen::VectorXd;
    const Patchy* m;
    Eigen::Index noise_dim() const { return m->n(); }
    State drift(const State& l) const;
    State diffuse(const State&, const Noise& dw) const { return m->p_.Gamma.transpose() * dw; }
  };
  LogX log_x() const { return {this}; }

private:
  PatchyParams p_;
  Eigen::MatrixXd sigma_;
};

DriftDiffusion drift_diffusion(const Patchy& model, const Eigen::VectorXd& x);
// H at a point of R_+^n \ {0}, through S = sum x and Y = x / S
double h_value(const Patchy& model, const Eigen::VectorXd& x);

} // namespace critpop
