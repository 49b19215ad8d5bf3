#include "critpop/models/sirs.hpp"

#include <cmath>
#include <string>

namespace critpop {

namespace {

Error bad_param(const std::string& msg) {
  return Error(ErrorCode::InvalidArgument, "models", "SirsParams", msg);
}

} // namespace

void SirsParams::validate() const {
  if (!(inflow > 0.0)) throw bad_param("inflow must be > 0");
  if (!(mortality > 0.0)) throw bad_param("mortality must be > 0");
  if (envs.empty()) throw bad_param("at least one environment required");
  for (std::size_t k = 0; k < envs.size(); ++k) {
    const auto& e = envs[k];
    const std::string where = " (environment " + std::to_string(k) + ")";
    if (!(e.beta > 0.0)) throw bad_param("beta must be > 0" + where);
    if (e.alpha < 0.0 || e.delta < 0.0 || e.immunity_loss < 0.0)
      throw bad_param("alpha, delta, immunity_loss must be >= 0" + where);
    if (e.incidence.saturation < 0.0) throw bad_param("saturation must be >= 0" + where);
  }
}

double SirsParams::clearance(int k) const {
  const auto& e = envs[static_cast<std::size_t>(k)];
  return mortality + e.alpha + e.delta;
}

Sirs::Sirs(SirsParams p) : p_(std::move(p)) { p_.validate(); }

Sirs::State Sirs::field(const State& x, int k) const {
  const auto& e = p_.envs[static_cast<std::size_t>(k)];
  const double s = x(0), i = x(1), r = x(2);
  const double infection = e.beta * s * e.incidence(i);
  return {p_.inflow - p_.mortality * s + e.immunity_loss * r - infection,
          infection - p_.clearance(k) * i, e.delta * i - (p_.mortality + e.immunity_loss) * r};
}

double Sirs::h(const State& x, int k) const {
  const auto& e = p_.envs[static_cast<std::size_t>(k)];
  return p_.clearance(k) - e.beta * x(0) * e.incidence.over_i(x(1));
}

bool Sirs::contains(const State& x, double tol) const {
  return (x.array() >= -tol).all() && x.sum() <= p_.s_star() + tol;
}

bool Sirs::admit(State& x, double allowance) const {
  return clamp_small_negatives(x, allowance) && contains(x, 1e-9);
}

Sirs::Boundary::State Sirs::Boundary::field(const State& x, int k) const {
  const auto& e = p->envs[static_cast<std::size_t>(k)];
  return {p->inflow - p->mortality * x(0) + e.immunity_loss * x(1),
          -(p->mortality + e.immunity_loss) * x(1)};
}

double Sirs::Boundary::h(const State& x, int k) const {
  const auto& e = p->envs[static_cast<std::size_t>(k)];
  return p->clearance(k) - e.beta * x(0) * e.incidence.slope_at_zero();
}

Sirs::LogInfected::State Sirs::LogInfected::field(const State& x, int k) const {
  const auto& e = p->envs[static_cast<std::size_t>(k)];
  const double s = x(0), i = std::exp(x(1)), r = x(2);
  const double infection = e.beta * s * e.incidence(i);
  return {p->inflow - p->mortality * s + e.immunity_loss * r - infection,
          e.beta * s * e.incidence.over_i(i) - p->clearance(k),
          e.delta * i - (p->mortality + e.immunity_loss) * r};
}

namespace {

void check_domain(const Sirs& model, const Eigen::Vector3d& x, int k, const char* op) {
  if (k < 0 || k >= model.environments())
    throw Error(ErrorCode::OutOfDomain, "models", op, "environment index out of range");
  if (!model.contains(x, 1e-9))
    throw Error(ErrorCode::OutOfDomain, "models", op, "state outside s,i,r >= 0, s+i+r <= Lambda/mu");
}

} // namespace

Eigen::Vector3d vector_field(const Sirs& model, const Eigen::Vector3d& x, int k) {
  check_domain(model, x, k, "vector_field");
  return model.field(x, k);
}

double h_value(const Sirs& model, const Eigen::Vector3d& x, int k) {
  check_domain(model, x, k, "h_value");
  return model.h(x, k);
}

double sirs_r0(const SirsParams& p, const Eigen::VectorXd& pi) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < p.envs.size(); ++k) {
    const auto& e = p.envs[k];
    num += pi(static_cast<Eigen::Index>(k)) * e.beta * p.s_star() * e.incidence.slope_at_zero();
    den += pi(static_cast<Eigen::Index>(k)) * p.clearance(static_cast<int>(k));
  }
  return num / den;
}

double sirs_pi_h(const SirsParams& p, const Eigen::VectorXd& pi) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.envs.size(); ++k) {
    const auto& e = p.envs[k];
    total += pi(static_cast<Eigen::Index>(k)) *
             (p.clearance(static_cast<int>(k)) - e.beta * p.s_star() * e.incidence.slope_at_zero());
  }
  return total;
}

} // namespace critpop
