#include "critpop/models/sis.hpp"

#include <string>

#include "detail/graph.hpp"

namespace critpop {

namespace {

Error bad_param(const std::string& msg) {
  return Error(ErrorCode::InvalidArgument, "models", "SisParams", msg);
}

} // namespace

void SisParams::validate() const {
  if (envs.empty()) throw bad_param("at least one environment required");
  const Eigen::Index n = d();
  if (n < 1) throw bad_param("at least one group required");
  for (std::size_t k = 0; k < envs.size(); ++k) {
    const auto& e = envs[k];
    const std::string where = " (environment " + std::to_string(k) + ")";
    if (e.C.rows() != n || e.C.cols() != n || e.D.size() != n)
      throw bad_param("C must be d x d and D of length d" + where);
    if (!e.C.allFinite() || !e.D.allFinite()) throw bad_param("non-finite entry" + where);
    if ((e.C.array() < 0.0).any()) throw bad_param("C has a negative entry" + where);
    if ((e.D.array() <= 0.0).any()) throw bad_param("D must be > 0" + where);
    // d = 1 is irreducible iff the self-contact rate is positive
    const bool ok = n == 1 ? e.C(0, 0) > 0.0 : detail::first_disconnected(e.C) < 0;
    if (!ok) throw bad_param("C is not irreducible" + where);
  }
}

Eigen::MatrixXd SisParams::A(int k) const {
  const auto& e = envs[static_cast<std::size_t>(k)];
  Eigen::MatrixXd a = e.C;
  a.diagonal() -= e.D;
  return a;
}

Sis::Sis(SisParams p) : p_(std::move(p)) {
  p_.validate();
  for (int k = 0; k < environments(); ++k) a_.push_back(p_.A(k));
}

// theta' = (A - rho Diag(theta) C) theta - <(A - rho Diag(theta) C) theta, theta> theta
// rho'   = <(A - rho Diag(theta) C) theta, theta> rho
Sis::Polar::State Sis::Polar::field(const State& z, int k) const {
  const Eigen::Index n = m->d();
  const double rho = z(0);
  const Eigen::VectorXd theta = z.tail(n);
  const Eigen::VectorXd g = m->A(k) * theta - rho * theta.cwiseProduct(m->C(k) * theta);
  const double rate = g.dot(theta);
  State out(n + 1);
  out(0) = rate * rho;
  out.tail(n) = g - rate * theta;
  return out;
}

Sis::LogPolar::State Sis::LogPolar::field(const State& z, int k) const {
  const Eigen::Index n = m->d();
  const double rho = std::exp(z(0));
  const Eigen::VectorXd theta = z.tail(n);
  const Eigen::VectorXd g = m->A(k) * theta - rho * theta.cwiseProduct(m->C(k) * theta);
  const double rate = g.dot(theta);
  State out(n + 1);
  out(0) = rate;
  out.tail(n) = g - rate * theta;
  return out;
}

namespace {

void check_domain(const Sis& model, const Eigen::VectorXd& x, int k, const char* op) {
  if (k < 0 || k >= model.environments())
    throw Error(ErrorCode::OutOfDomain, "models", op, "environment index out of range");
  if (x.size() != model.d() || !model.contains(x, 1e-9))
    throw Error(ErrorCode::OutOfDomain, "models", op, "state outside [0,1]^d");
}

} // namespace

Eigen::VectorXd vector_field(const Sis& model, const Eigen::VectorXd& x, int k) {
  check_domain(model, x, k, "vector_field");
  return model.field(x, k);
}

double h_value(const Sis& model, const Eigen::VectorXd& x, int k) {
  check_domain(model, x, k, "h_value");
  const Polar z = polar_decompose(x, PolarMode::Sphere);
  return model.h(z.radius, z.direction, k);
}

} // namespace critpop
