#include "critpop/models/rma.hpp"

namespace critpop {

void RmaParams::validate() const {
  auto fail = [](const char* msg) {
    return Error(ErrorCode::InvalidArgument, "models", "RmaParams", msg);
  };
  if (!(K > 0.0)) throw fail("K must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw fail("alpha must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw fail("epsilon must be >= 0");
}

Rma::Rma(RmaParams p) : p_(p) { p_.validate(); }

namespace {

void check_domain(const Eigen::Vector2d& z, const char* op) {
  if (!(z.array() >= 0.0).all() || !z.allFinite())
    throw Error(ErrorCode::OutOfDomain, "models", op, "state outside R_+^2");
}

} // namespace

DriftDiffusion drift_diffusion(const Rma& model, const Eigen::Vector2d& z) {
  check_domain(z, "drift_diffusion");
  DriftDiffusion out;
  out.drift = model.drift(z);
  out.diffusion = Eigen::MatrixXd::Zero(2, 1);
  out.diffusion(0, 0) = model.params().epsilon * z(0);
  return out;
}

double h_value(const Rma& model, const Eigen::Vector2d& z) {
  check_domain(z, "h_value");
  return model.h(z);
}

} // namespace critpop
