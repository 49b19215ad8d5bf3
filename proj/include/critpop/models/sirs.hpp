#pragma once

#include <vector>

#include <Eigen/Core>

#include "critpop/engines.hpp"

namespace critpop {

// Incidence function G with G(0) = 0 and 0 < G(I) <= G'(0) I.
struct Incidence {
  enum class Kind { Bilinear, Saturated };
  Kind kind = Kind::Bilinear;
  double saturation = 0.0; // m in I / (1 + m I)

  double operator()(double i) const {
    return kind == Kind::Bilinear ? i : i / (1.0 + saturation * i);
  }
  double slope_at_zero() const { return 1.0; }
  // G(i)/i with the removable singularity at 0 filled by G'(0)
  double over_i(double i) const {
    if (i == 0.0) return slope_at_zero();
    return kind == Kind::Bilinear ? 1.0 : 1.0 / (1.0 + saturation * i);
  }
};

struct SirsEnvironment {
  double beta = 1.0;          // transmission
  double alpha = 0.0;         // disease-induced mortality
  double delta = 0.0;         // recovery
  double immunity_loss = 0.0; // lambda_k
  Incidence incidence;
};

struct SirsParams {
  double inflow = 1.0;    // Lambda
  double mortality = 1.0; // mu
  std::vector<SirsEnvironment> envs{SirsEnvironment{}};

  void validate() const;
  double s_star() const { return inflow / mortality; }
  // mu + alpha_k + delta_k
  double clearance(int k) const;
};

// Switched SIRS field on K = {s, i, r >= 0, s + i + r <= Lambda/mu}; the
// extinction set is {i = 0}.
class Sirs {
public:
  using State = Eigen::Vector3d;

  explicit Sirs(SirsParams p);
  const SirsParams& params() const noexcept { return p_; }
  int environments() const { return static_cast<int>(p_.envs.size()); }

  State field(const State& x, int k) const;
  double h(const State& x, int k) const;
  double extinction(const State& x) const { return x(1); }
  bool contains(const State& x, double tol) const;
  bool admit(State& x, double allowance) const;

  // Boundary flow (s, r) on {i = 0}.
  struct Boundary {
    using State = Eigen::Vector2d;
    const SirsParams* p;
    State field(const State& x, int k) const;
    double h(const State& x, int k) const;
  };
  Boundary boundary() const { return {&p_}; }

  // (s, log i, r): used when the growth or decay of i is the quantity of interest.
  struct LogInfected {
    using State = Eigen::Vector3d;
    const SirsParams* p;
    State field(const State& x, int k) const;
  };
  LogInfected log_infected() const { return {&p_}; }

private:
  SirsParams p_;
};

// Checked entry points for the documented operations.
Eigen::Vector3d vector_field(const Sirs& model, const Eigen::Vector3d& x, int k);
double h_value(const Sirs& model, const Eigen::Vector3d& x, int k);

// R0 = sum p_k beta_k (Lambda/mu) G'_k(0) / sum p_k (mu + alpha_k + delta_k)
double sirs_r0(const SirsParams& p, const Eigen::VectorXd& stationary);
// pi H = sum p_k (mu + alpha_k + delta_k - beta_k (Lambda/mu) G'_k(0))
double sirs_pi_h(const SirsParams& p, const Eigen::VectorXd& stationary);

} // namespace critpop
