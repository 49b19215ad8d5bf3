#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "critpop/engines.hpp"
#include "critpop/models/model.hpp"
#include "critpop/occupation.hpp"

namespace critpop {

enum class ExperimentKind { Subcritical, Critical, Persistent };
enum class Verdict { Pass, Fail, Inconclusive };
enum class Regime { Subcritical, Critical, Persistent };

std::string_view to_string(ExperimentKind kind);
std::string_view to_string(Verdict verdict);
std::string_view to_string(Regime regime);
ExperimentKind experiment_kind_from_string(std::string_view name);

// What an experiment follows for each model. `observable` is the quantity
// whose Cesaro average vanishes in the critical case (I + R, Y, S, |x|, U);
// `companion` is a coordinate whose average should approach its boundary
// value (SIRS s -> Lambda/mu, RMA x -> K(1 - eps^2/2), SEIR s -> Lambda/gamma).
struct ObservablePlan {
  std::string observable;
  std::string companion; // empty when the model has none
  double companion_target = std::numeric_limits<double>::quiet_NaN();
};
ObservablePlan observable_plan(const ModelSpec& spec);

struct SeedRecord {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::uint64_t seed = 0;
  // running averages from t = 0, at T/4, T/2 and T
  std::array<double, 3> average{kNaN, kNaN, kNaN};
  std::array<double, 3> companion{kNaN, kNaN, kNaN};
  // slope of the log of the observable over [burn_in, T]
  double growth = kNaN;
  double growth_se = kNaN;
  // persistent runs only: the mu H = 0 witness
  double interior_h = kNaN;
  double interior_h_se = kNaN;
  // (t, running average of observable, running average of companion)
  std::vector<std::array<double, 3>> series;
};

struct VerdictRules {
  // share of seeds that must satisfy the per-seed test
  double seed_fraction = 0.9;
  // critical: observable average at T must stay below this
  double ceiling = std::numeric_limits<double>::infinity();
  // critical: relative distance of the seed-mean companion average from its target
  double companion_tolerance = 0.05;
  // persistent: |avg(T) - avg(T/2)| <= stability avg(T)
  double stability = 0.1;
  // persistent: avg(T) must exceed this
  double floor = 0.0;
  // subcritical: growth <= Lambda + growth_slack * combined SE
  double growth_slack = 3.0;
  // critical: a failed trend is inconclusive when 3 SE of Lambda reaches this
  double critical_band = 0.02;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::Critical;
  std::string model;
  ObservablePlan plan;
  double horizon = 0.0;
  ThresholdEstimate threshold;
  VerdictRules rules;
  std::vector<SeedRecord> seeds;
  Verdict verdict = Verdict::Fail;
  std::string reason;
  // share of seeds passing the per-seed test
  double passing_fraction = 0.0;
};

struct VerdictResult {
  Verdict verdict = Verdict::Fail;
  std::string reason;
  double passing_fraction = 0.0;
};

// Pure function of the recorded statistics; re-running it on a saved report
// reproduces the stored verdict.
VerdictResult evaluate_verdict(const ExperimentReport& report);

struct ExperimentSettings {
  IntegratorConfig cfg;
  std::vector<std::uint64_t> seeds;
  // interior starting point in model coordinates; empty picks a default
  Eigen::VectorXd x0;
  VerdictRules rules;
  int checkpoints = 1000;
  int batches = BatchMeans::kDefaultBatches;
  int jobs = 1;
};

// Default interior starting point for experiments and couplings.
Eigen::VectorXd default_initial_state(const ModelSpec& spec);

// Each requires the threshold to certify its regime (|Lambda| vs 3 SE) and
// raises InvalidArgument otherwise. Seeds run on up to settings.jobs threads.
ExperimentReport run_subcritical(const ModelSpec& spec, const ThresholdEstimate& threshold,
                                 const ExperimentSettings& settings);
ExperimentReport run_critical(const ModelSpec& spec, const ThresholdEstimate& threshold,
                              const ExperimentSettings& settings);
ExperimentReport run_persistent(const ModelSpec& spec, const ThresholdEstimate& threshold,
                                const ExperimentSettings& settings);
ExperimentReport run_experiment(ExperimentKind kind, const ModelSpec& spec,
                                const ThresholdEstimate& threshold,
                                const ExperimentSettings& settings);

// Seed sets concatenate and the verdict is recomputed; associative.
ExperimentReport merge(const ExperimentReport& a, const ExperimentReport& b);

// Subcritical below -max(band, 3 SE), persistent above +max(band, 3 SE),
// critical in between.
Regime classify_regime(const ThresholdEstimate& threshold, double band);

// One seed's path, for callers that want the raw record.
SeedRecord run_seed(const ModelSpec& spec, const ExperimentSettings& settings, std::uint64_t seed,
                    bool with_interior_h);

} // namespace critpop
