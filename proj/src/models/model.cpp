#include "critpop/models/model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace critpop {

namespace {

template <typename... F>
struct Overloaded : F... {
  using F::operator()...;
};

Error out_of_domain(const char* msg) {
  return Error(ErrorCode::OutOfDomain, "models", "boundary_dynamics", msg);
}

} // namespace

std::string ModelSpec::id() const {
  static const char* names[] = {"sirs", "rma", "patchy", "sis", "seir"};
  return names[model.index()];
}

DynamicsKind ModelSpec::kind() const {
  return std::holds_alternative<Rma>(model) || std::holds_alternative<Patchy>(model)
             ? DynamicsKind::Sde
             : DynamicsKind::Pdmp;
}

Eigen::Index ModelSpec::dimension() const {
  return std::visit(Overloaded{[](const Sirs&) -> Eigen::Index { return 3; },
                               [](const Rma&) -> Eigen::Index { return 2; },
                               [](const Patchy& m) { return m.n(); },
                               [](const Sis& m) { return m.d(); },
                               [](const Seir&) -> Eigen::Index { return 3; }},
                    model);
}

int ModelSpec::environments() const {
  return std::visit(Overloaded{[](const Sirs& m) { return m.environments(); },
                               [](const Sis& m) { return m.environments(); },
                               [](const Seir& m) { return m.environments(); },
                               [](const auto&) { return 1; }},
                    model);
}

ModelSpec make_spec(Model model, RateMatrix q, int k0) {
  ModelSpec spec{std::move(model), std::move(q), k0};
  const int n = spec.environments();
  if (spec.q.size() != n)
    throw Error(ErrorCode::InvalidArgument, "models", "make_spec",
                "rate matrix has " + std::to_string(spec.q.size()) + " states but the model has " +
                    std::to_string(n) + " environments");
  if (k0 < 0 || k0 >= n)
    throw Error(ErrorCode::InvalidArgument, "models", "make_spec", "initial environment out of range");
  return spec;
}

std::string to_string(ThresholdMethod m) {
  switch (m) {
  case ThresholdMethod::ClosedForm: return "closed-form";
  case ThresholdMethod::BoundaryAverage: return "boundary-average";
  case ThresholdMethod::LogGrowth: return "log-growth";
  case ThresholdMethod::InteriorAverage: return "interior-average";
  }
  return "unknown";
}

double perron_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().real().maxCoeff();
}

std::optional<ThresholdEstimate> closed_form_threshold(const ModelSpec& spec) {
  auto exact = [](double v) { return ThresholdEstimate{v, 0.0, ThresholdMethod::ClosedForm}; };
  return std::visit(
      Overloaded{
          [&](const Sirs& m) -> std::optional<ThresholdEstimate> {
            return exact(-sirs_pi_h(m.params(), stationary_law(spec.q)));
          },
          [&](const Rma&) -> std::optional<ThresholdEstimate> { return std::nullopt; },
          [&](const Patchy& m) -> std::optional<ThresholdEstimate> {
            if (m.n() != 1) return std::nullopt;
            return exact(m.params().a(0) - 0.5 * m.sigma()(0, 0));
          },
          [&](const Sis& m) -> std::optional<ThresholdEstimate> {
            if (m.environments() != 1) return std::nullopt;
            return exact(perron_eigenvalue(m.A(0)));
          },
          [&](const Seir& m) -> std::optional<ThresholdEstimate> {
            if (m.environments() != 1) return std::nullopt;
            return exact(perron_eigenvalue(m.params().B(0)));
          }},
      spec.model);
}

Eigen::Vector2d boundary_dynamics(const Sirs& model, const Eigen::Vector2d& sr, int k) {
  if (k < 0 || k >= model.environments()) throw out_of_domain("environment index out of range");
  if ((sr.array() < -1e-9).any() || sr.sum() > model.params().s_star() + 1e-9)
    throw out_of_domain("(s, r) outside s, r >= 0, s + r <= Lambda/mu");
  return model.boundary().field(sr, k);
}

DriftDiffusion boundary_dynamics(const Rma& model, double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw out_of_domain("x must be >= 0");
  const auto b = model.boundary();
  const Eigen::Matrix<double, 1, 1> s(x);
  return {b.drift(s), Eigen::MatrixXd::Constant(1, 1, model.params().epsilon * x)};
}

DriftDiffusion boundary_dynamics(const Patchy& model, const Eigen::VectorXd& y) {
  if (y.size() != model.n() || (y.array() < -1e-9).any() || std::abs(y.sum() - 1.0) > 1e-9)
    throw out_of_domain("y must lie in the simplex");
  Eigen::MatrixXd proj = y.asDiagonal();
  proj -= y * y.transpose();
  return {model.y_drift(0.0, y), proj * model.params().Gamma.transpose()};
}

Eigen::VectorXd boundary_dynamics(const Sis& model, const Eigen::VectorXd& theta, int k) {
  if (k < 0 || k >= model.environments()) throw out_of_domain("environment index out of range");
  if (theta.size() != model.d() || (theta.array() < -1e-9).any() ||
      std::abs(theta.norm() - 1.0) > 1e-9)
    throw out_of_domain("theta must lie on the nonnegative part of the unit sphere");
  return model.boundary().field(theta, k);
}

double boundary_dynamics(const Seir& model, double v, int k) {
  if (k < 0 || k >= model.environments()) throw out_of_domain("environment index out of range");
  if (!(v >= 0.0 && v <= 1.0)) throw out_of_domain("v must lie in [0, 1]");
  return model.f_v(model.params().s_star(), v, k);
}

} // namespace critpop
