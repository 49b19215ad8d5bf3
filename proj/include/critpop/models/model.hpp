#pragma once

#include <optional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "critpop/models/patchy.hpp"
#include "critpop/models/rma.hpp"
#include "critpop/models/seir.hpp"
#include "critpop/models/sirs.hpp"
#include "critpop/models/sis.hpp"
#include "critpop/switching.hpp"

namespace critpop {

using Model = std::variant<Sirs, Rma, Patchy, Sis, Seir>;

enum class DynamicsKind { Pdmp, Sde };

// A model together with its switching chain (trivial for the SDE models).
struct ModelSpec {
  Model model;
  RateMatrix q = RateMatrix::single();
  int k0 = 0;

  std::string id() const;
  DynamicsKind kind() const;
  Eigen::Index dimension() const;
  int environments() const;
};

// Checks that the chain has one state per environment and that SDE models are
// not switched.
ModelSpec make_spec(Model model, RateMatrix q = RateMatrix::single(), int k0 = 0);

enum class ThresholdMethod { ClosedForm, BoundaryAverage, LogGrowth, InteriorAverage };
std::string to_string(ThresholdMethod m);

// Invasion rate (positive means persistence) with its Monte-Carlo error.
struct ThresholdEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  ThresholdMethod method = ThresholdMethod::ClosedForm;
  double horizon = 0.0;
  double dt = 0.0;
};

// Exact invasion rate where one exists: SIRS always (-pi H); patchy with one
// patch (a - sigma^2/2); SIS and SEIR with one environment (Perron eigenvalue
// of A resp. B). RMA has none; see RmaParams::boundary_mean.
std::optional<ThresholdEstimate> closed_form_threshold(const ModelSpec& spec);

// Largest real part of the spectrum.
double perron_eigenvalue(const Eigen::MatrixXd& m);

// Reduced dynamics on the extinction set, with domain checks.
Eigen::Vector2d boundary_dynamics(const Sirs& model, const Eigen::Vector2d& sr, int k);
DriftDiffusion boundary_dynamics(const Rma& model, double x);
DriftDiffusion boundary_dynamics(const Patchy& model, const Eigen::VectorXd& y);
Eigen::VectorXd boundary_dynamics(const Sis& model, const Eigen::VectorXd& theta, int k);
double boundary_dynamics(const Seir& model, double v, int k);

} // namespace critpop
