#include "critpop/models/seir.hpp"

#include <string>

namespace critpop {

namespace {

Error bad_param(const std::string& msg) {
  return Error(ErrorCode::InvalidArgument, "models", "SeirParams", msg);
}

} // namespace

void SeirParams::validate() const {
  if (!(inflow > 0.0)) throw bad_param("inflow must be > 0");
  if (!(gamma > 0.0)) throw bad_param("gamma must be > 0");
  if (envs.empty()) throw bad_param("at least one environment required");
  for (std::size_t k = 0; k < envs.size(); ++k) {
    const auto& e = envs[k];
    if (!(e.beta > 0.0 && e.gamma1 > 0.0 && e.delta > 0.0))
      throw bad_param("beta, gamma1, delta must be > 0 (environment " + std::to_string(k) + ")");
  }
}

Eigen::Matrix2d SeirParams::B(int k) const {
  const auto& e = envs[static_cast<std::size_t>(k)];
  Eigen::Matrix2d b;
  b << -(gamma + e.delta), e.beta * s_star(), e.delta, -(gamma + e.gamma1);
  return b;
}

Seir::Seir(SeirParams p) : p_(std::move(p)) { p_.validate(); }

bool Seir::contains(const State& z, double tol) const {
  return z(0) >= -tol && z(1) >= -tol && z(2) >= -tol && z(2) <= 1.0 + tol &&
         z(0) + z(1) <= p_.s_star() + tol;
}

bool Seir::admit(State& z, double allowance) const {
  if (!clamp_small_negatives(z, allowance)) return false;
  if (z(2) > 1.0 && z(2) <= 1.0 + allowance) z(2) = 1.0;
  return contains(z, 1e-9);
}

namespace {

void check_domain(const Seir& model, const Eigen::Vector3d& z, int k, const char* op) {
  if (k < 0 || k >= model.environments())
    throw Error(ErrorCode::OutOfDomain, "models", op, "environment index out of range");
  if (!model.contains(z, 1e-9))
    throw Error(ErrorCode::OutOfDomain, "models", op,
                "state outside s, u >= 0, v in [0,1], s + u <= Lambda/gamma");
}

} // namespace

Eigen::Vector3d vector_field(const Seir& model, const Eigen::Vector3d& z, int k) {
  check_domain(model, z, k, "vector_field");
  return model.field(z, k);
}

double h_value(const Seir& model, const Eigen::Vector3d& z, int k) {
  check_domain(model, z, k, "h_value");
  return model.h(z, k);
}

double h_tilde_value(const Seir& model, const Eigen::Vector3d& z, int k) {
  check_domain(model, z, k, "h_tilde_value");
  if (z(2) <= 0.0)
    throw Error(ErrorCode::SingularAtBoundary, "models", "h_tilde_value",
                "H~ is singular at v = 0");
  return model.h_tilde(z(2), k);
}

} // namespace critpop
