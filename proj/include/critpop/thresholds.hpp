#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "critpop/engines.hpp"
#include "critpop/models/model.hpp"
#include "critpop/occupation.hpp"

namespace critpop {

// Lambda = -pi H from a simulated boundary path. RMA averages x/(1+x) - alpha
// along the boundary logistic; SEIR averages -H~ along the v~ equation.
ThresholdEstimate boundary_average_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                             NoiseStream& rng,
                                             int batches = BatchMeans::kDefaultBatches);

// Growth rate of the linearization at the extinction set, simulated in log
// coordinates. Patchy: log S~ of the linear SDE; SIS: y' = A y; SEIR: (e, i)' = B (e, i).
ThresholdEstimate growth_rate_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                        NoiseStream& rng,
                                        int batches = BatchMeans::kDefaultBatches);

// Time-average of H along an interior path started at x0 (model coordinates).
ThresholdEstimate interior_h_average(const ModelSpec& spec, const IntegratorConfig& cfg,
                                     NoiseStream& rng, const Eigen::VectorXd& x0,
                                     int batches = BatchMeans::kDefaultBatches);

// Default estimator: closed form when one exists, else the boundary average.
ThresholdEstimate estimate_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                     NoiseStream& rng, std::optional<ThresholdMethod> method = {},
                                     int batches = BatchMeans::kDefaultBatches);

// Sets a scalar parameter and revalidates the model. Names are model fields
// ("beta", "alpha", "a", "D", ...); a field held per environment or per patch
// is set everywhere, or at one index with "beta.1".
void set_parameter(ModelSpec& spec, const std::string& name, double value);

struct CriticalTuning {
  std::string parameter;
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
  ThresholdEstimate residual;
  int evaluations = 0;
};

struct TuningOptions {
  double tolerance = 1e-3;
  int max_evaluations = 200;
  // horizon cap for the SE-driven extension; 0 means 16 x the base horizon
  double max_horizon = 0.0;
  std::optional<ThresholdMethod> method;
  int batches = BatchMeans::kDefaultBatches;
};

// Threshold as a function of (parameter value, horizon).
using ThresholdEvaluator = std::function<ThresholdEstimate(double, double)>;

// SE-aware bisection. Each evaluation doubles its horizon until SE < |value|/3
// or max_horizon; stops once |value| <= max(tolerance, 3 SE) or the bracket
// has shrunk below 1e-6 of its initial width.
CriticalTuning tune_to_critical(const ThresholdEvaluator& evaluate, const std::string& parameter,
                                double lo, double hi, double tolerance, double horizon,
                                double max_horizon, int max_evaluations = 200);

// Bisection on a model parameter with common random numbers across evaluations.
CriticalTuning tune_to_critical(const ModelSpec& spec, const std::string& parameter, double lo,
                                double hi, const IntegratorConfig& cfg, NoiseStream& rng,
                                const TuningOptions& options = {});

} // namespace critpop
