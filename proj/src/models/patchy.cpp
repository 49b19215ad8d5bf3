#include "critpop/models/patchy.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

#include "detail/graph.hpp"

namespace critpop {

namespace {

Error bad_param(const std::string& msg) {
  return Error(ErrorCode::InvalidArgument, "models", "PatchyParams", msg);
}

} // namespace

void PatchyParams::validate() {
  const Eigen::Index k = n();
  if (k < 1) throw bad_param("at least one patch required");
  if (c.size() != k) throw bad_param("c must have one entry per patch");
  if (D.size() == 0) D = Eigen::MatrixXd::Zero(k, k);
  if (D.rows() != k || D.cols() != k) throw bad_param("D must be n x n");
  if (Gamma.rows() != k || Gamma.cols() != k) throw bad_param("Gamma must be n x n");
  if (!a.allFinite() || !c.allFinite() || !D.allFinite() || !Gamma.allFinite())
    throw bad_param("non-finite parameter");
  if ((a.array() <= 0.0).any()) throw bad_param("a must be > 0");
  // Linear competition with c_i > 0 is dissipative: for sum x >= M,
  // sum x_i (c_i x_i - a_i) / sum x >= min(c) M / n - max(a).
  if ((c.array() <= 0.0).any()) throw bad_param("c must be > 0");
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      if (i != j && D(i, j) < 0.0)
        throw bad_param("D(" + std::to_string(i) + "," + std::to_string(j) + ") is negative");
  for (Eigen::Index i = 0; i < k; ++i) D(i, i) = -(D.row(i).sum() - D(i, i));
  if (k > 1 && detail::first_disconnected(D) >= 0) throw bad_param("D is not irreducible");

  const Eigen::MatrixXd s = Gamma.transpose() * Gamma;
  const double det = s.determinant();
  const double scale = std::pow(s.cwiseAbs().maxCoeff(), static_cast<double>(k));
  if (!(std::abs(det) > 1e-12 * scale)) throw bad_param("Sigma = Gamma^T Gamma is singular");
}

Patchy::Patchy(PatchyParams p) : p_(std::move(p)) {
  p_.validate();
  sigma_ = p_.sigma();
}

double Patchy::h1(double s, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd g = p_.a - p_.c.cwiseProduct(s * y);
  const double w = s / (1.0 + s);
  return w * g.dot(y) - 0.5 * w * w * y.dot(sigma_ * y);
}

double Patchy::h2(double s, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd g = p_.a - p_.c.cwiseProduct(s * y);
  return g.dot(y) - 0.5 * y.dot(sigma_ * y);
}

// [Diag(Y) - Y Y^T] v = Y .* (v - (Y^T v) 1)
Eigen::VectorXd Patchy::y_drift(double s, const Eigen::VectorXd& y) const {
  const Eigen::VectorXd v = p_.a - sigma_ * y - p_.c.cwiseProduct(s * y);
  return p_.D.transpose() * y + y.cwiseProduct((v.array() - y.dot(v)).matrix());
}

Eigen::VectorXd Patchy::y_diffuse(const Eigen::VectorXd& y, const Noise& dw) const {
  const Eigen::VectorXd e = p_.Gamma.transpose() * dw;
  return y.cwiseProduct((e.array() - y.dot(e)).matrix());
}

Patchy::Polar::State Patchy::Polar::drift(const State& z) const {
  const Eigen::Index n = m->n();
  const double s = z(0);
  const Eigen::VectorXd y = z.tail(n);
  State out(n + 1);
  out(0) = s * (m->p_.a - m->p_.c.cwiseProduct(s * y)).dot(y);
  out.tail(n) = m->y_drift(s, y);
  return out;
}

Patchy::Polar::State Patchy::Polar::diffuse(const State& z, const Noise& dw) const {
  const Eigen::Index n = m->n();
  const Eigen::VectorXd y = z.tail(n);
  State out(n + 1);
  out(0) = z(0) * y.dot(m->p_.Gamma.transpose() * dw);
  out.tail(n) = m->y_diffuse(y, dw);
  return out;
}

Patchy::LinearLog::State Patchy::LinearLog::drift(const State& z) const {
  const Eigen::Index n = m->n();
  const Eigen::VectorXd y = z.tail(n);
  State out(n + 1);
  out(0) = m->boundary_rate(y);
  out.tail(n) = m->y_drift(0.0, y);
  return out;
}

Patchy::LinearLog::State Patchy::LinearLog::diffuse(const State& z, const Noise& dw) const {
  const Eigen::Index n = m->n();
  const Eigen::VectorXd y = z.tail(n);
  State out(n + 1);
  out(0) = y.dot(m->p_.Gamma.transpose() * dw);
  out.tail(n) = m->y_diffuse(y, dw);
  return out;
}

Patchy::LogX::State Patchy::LogX::drift(const State& l) const {
  const auto& p = m->p_;
  const Eigen::VectorXd x = l.array().exp();
  State out(l.size());
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    double inflow = 0.0;
    for (Eigen::Index j = 0; j < l.size(); ++j)
      inflow += p.D(j, i) * std::exp(l(j) - l(i));
    out(i) = p.a(i) - p.c(i) * x(i) + inflow - 0.5 * m->sigma_(i, i);
  }
  return out;
}

namespace {

void check_domain(const Eigen::VectorXd& x, Eigen::Index n, const char* op) {
  if (x.size() != n || !x.allFinite() || (x.array() < 0.0).any())
    throw Error(ErrorCode::OutOfDomain, "models", op, "state outside R_+^n");
}

} // namespace

DriftDiffusion drift_diffusion(const Patchy& model, const Eigen::VectorXd& x) {
  check_domain(x, model.n(), "drift_diffusion");
  return {model.drift(x), x.asDiagonal() * model.params().Gamma.transpose()};
}

double h_value(const Patchy& model, const Eigen::VectorXd& x) {
  check_domain(x, model.n(), "h_value");
  const Polar z = polar_decompose(x, PolarMode::Simplex);
  return model.h(z.radius, z.direction);
}

} // namespace critpop
