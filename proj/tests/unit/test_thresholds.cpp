#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "critpop/thresholds.hpp"
#include "helpers.hpp"

using namespace critpop;

namespace {

// Deterministic boundary flows give batch means that agree to rounding; the
// round-off floor keeps "within 3 SE" meaningful when SE is ~1e-16.
constexpr double kRoundOff = 1e-9;

bool within(const ThresholdEstimate& e, double target, double se_extra = 0.0) {
  return std::abs(e.value - target) <= std::max(3.0 * std::hypot(e.standard_error, se_extra), kRoundOff);
}

ModelSpec sirs_spec(double beta) {
  SirsParams p;
  p.envs = {SirsEnvironment{beta, 0.0, 0.0, 0.0, {}}};
  return make_spec(Sirs(p));
}

ModelSpec sirs_switched(double beta) {
  SirsParams p;
  p.envs = {SirsEnvironment{beta, 0.1, 0.4, 0.5, {}}, SirsEnvironment{0.5 * beta, 0.0, 0.2, 1.0, {}}};
  return make_spec(Sirs(p), validate_rate_matrix(mat({{-1, 1}, {2, -2}})));
}

ModelSpec patchy_one(double a, double sigma) {
  PatchyParams p;
  p.a = Eigen::VectorXd::Constant(1, a);
  p.c = Eigen::VectorXd::Constant(1, 1.0);
  p.D = Eigen::MatrixXd::Zero(1, 1);
  p.Gamma = Eigen::MatrixXd::Constant(1, 1, sigma);
  return make_spec(Patchy(p));
}

ModelSpec patchy_two() {
  PatchyParams p;
  p.a = Eigen::Vector2d(0.8, 0.4);
  p.c = Eigen::Vector2d(1.0, 0.5);
  p.D = mat({{0.0, 0.3}, {0.3, 0.0}});
  p.Gamma = mat({{0.9, 0.0}, {0.0, 0.7}});
  return make_spec(Patchy(p));
}

ModelSpec sis_one(const Eigen::MatrixXd& c, const Eigen::VectorXd& d) {
  SisParams p;
  p.envs = {SisEnvironment{c, d}};
  return make_spec(Sis(p));
}

ModelSpec seir_one(double beta) {
  SeirParams p;
  p.envs = {SeirEnvironment{beta, 1.0, 2.0}};
  return make_spec(Seir(p));
}

} // namespace

TEST_SUITE("thresholds") {

TEST_CASE("closed form carries zero SE") {
  NoiseStream rng(1);
  const auto e = estimate_threshold(sirs_spec(2.0), {0.01, 10.0, 100.0, true}, rng);
  CHECK(e.method == ThresholdMethod::ClosedForm);
  CHECK(e.standard_error == 0.0);
  CHECK(e.value == doctest::Approx(1.0));
}

TEST_CASE("SIRS boundary average matches the closed form") {
  NoiseStream rng(2);
  const auto e = boundary_average_threshold(sirs_spec(2.0), {0.01, 100.0, 1000.0, true}, rng);
  CHECK(within(e, 1.0));

  // switched version: Monte Carlo against the exact -pi H
  const ModelSpec sw = sirs_switched(3.0);
  const double exact = closed_form_threshold(sw)->value;
  NoiseStream rng2(3);
  const auto m = boundary_average_threshold(sw, {0.01, 1000.0, 1e4, true}, rng2);
  CHECK(m.standard_error > 0.0);
  CHECK(within(m, exact));
}

TEST_CASE("SIS boundary average at a zero Perron eigenvalue") {
  // A = C - Diag(D) = [[-1, 1], [1, -1]]
  const auto spec = sis_one(mat({{0.0, 1.0}, {1.0, 0.0}}), Eigen::Vector2d(1.0, 1.0));
  NoiseStream rng(4);
  CHECK(within(boundary_average_threshold(spec, {0.01, 100.0, 1000.0, true}, rng), 0.0));
}

TEST_CASE("RMA threshold vanishes when alpha equals the boundary average of x/(1+x)") {
  RmaParams p{4.0, 0.5, 1.0};
  const IntegratorConfig cfg{1e-3, 100.0, 2000.0, true};
  NoiseStream rng(5);
  const auto first = boundary_average_threshold(make_spec(Rma(p)), cfg, rng);
  p.alpha = first.value + p.alpha;
  NoiseStream again(5);
  const auto second = boundary_average_threshold(make_spec(Rma(p)), cfg, again);
  CHECK(std::abs(second.value) <= 1e-12);
}

TEST_CASE("patchy one-patch growth rate is a - sigma^2/2") {
  NoiseStream rng(6);
  const auto e = growth_rate_threshold(patchy_one(0.5, 1.0), {1e-2, 1000.0, 1e4, true}, rng);
  CHECK(e.method == ThresholdMethod::LogGrowth);
  CHECK(e.standard_error > 0.0);
  CHECK(within(e, 0.0));
  NoiseStream rng2(6);
  CHECK(within(growth_rate_threshold(patchy_one(1.2, 0.8), {1e-2, 1000.0, 1e4, true}, rng2), 0.88));
}

TEST_CASE("patchy two-patch estimators agree within combined 3 SE") {
  const IntegratorConfig cfg{1e-2, 500.0, 5000.0, true};
  NoiseStream a(7), b(8);
  const auto boundary = boundary_average_threshold(patchy_two(), cfg, a);
  const auto growth = growth_rate_threshold(patchy_two(), cfg, b);
  CHECK(within(growth, boundary.value, boundary.standard_error));
}

TEST_CASE("SEIR growth rate equals the Perron eigenvalue of B") {
  const IntegratorConfig cfg{0.01, 100.0, 1000.0, true};
  NoiseStream rng(9);
  CHECK(within(growth_rate_threshold(seir_one(3.0), cfg, rng), 0.0));
  NoiseStream rng2(9);
  const double lambda = perron_eigenvalue(std::get<Seir>(seir_one(4.0).model).params().B(0));
  CHECK(lambda == doctest::Approx(0.372281).epsilon(1e-6));
  CHECK(within(growth_rate_threshold(seir_one(4.0), cfg, rng2), lambda));
}

TEST_CASE("growth rate is unsupported for SIRS and RMA") {
  NoiseStream rng(1);
  expect_error(ErrorCode::UnsupportedModel,
               [&] { growth_rate_threshold(sirs_spec(2.0), {0.01, 1.0, 10.0, true}, rng); });
  expect_error(ErrorCode::UnsupportedModel, [&] {
    growth_rate_threshold(make_spec(Rma(RmaParams{})), {0.01, 1.0, 10.0, true}, rng);
  });
}

TEST_CASE("interior H averages to zero in a persistent SIRS regime") {
  const ModelSpec spec = sirs_switched(4.0);
  REQUIRE(closed_form_threshold(spec)->value > 0.0);
  NoiseStream rng(10);
  const auto e = interior_h_average(spec, {0.01, 1000.0, 1e4, true}, rng, Eigen::Vector3d(0.5, 0.2, 0.1));
  CHECK(e.method == ThresholdMethod::InteriorAverage);
  CHECK(within(e, 0.0));

  NoiseStream rng2(11);
  const auto single = interior_h_average(sirs_spec(2.0), {0.01, 1000.0, 1e4, true}, rng2,
                                         Eigen::Vector3d(0.5, 0.25, 0.0));
  CHECK(within(single, 0.0));
  expect_error(ErrorCode::InvalidArgument,
               [&] { interior_h_average(sirs_spec(2.0), {0.01, 1.0, 10.0, true}, rng2, Eigen::Vector2d(0.5, 0.2)); });
}

TEST_CASE("tune SIRS beta to the R0 = 1 point") {
  NoiseStream rng(12);
  TuningOptions opts;
  opts.tolerance = 1e-8;
  const auto t = tune_to_critical(sirs_spec(1.0), "beta", 0.1, 5.0, {0.01, 1.0, 10.0, true}, rng, opts);
  CHECK(std::abs(t.value - 1.0) <= 1e-6);
  CHECK(t.residual.standard_error == 0.0);
}

TEST_CASE("tune a monotone function to its root") {
  const double c = 0.37;
  const auto t = tune_to_critical([&](double x, double) { return ThresholdEstimate{x - c, 0.0}; }, "x",
                                  0.0, 2 * c, 1e-10, 1.0, 1.0);
  CHECK(t.value == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("tune patchy a to sigma^2/2") {
  NoiseStream rng(13);
  TuningOptions opts;
  opts.method = ThresholdMethod::BoundaryAverage;
  opts.tolerance = 1e-4;
  const auto t = tune_to_critical(patchy_one(0.3, 1.0), "a", 0.1, 1.0, {1e-2, 10.0, 100.0, true}, rng, opts);
  CHECK(std::abs(t.value - 0.5) <= 1e-3);
}

TEST_CASE("tuning errors") {
  auto flat = [](double, double) { return ThresholdEstimate{1.0, 0.0}; };
  expect_error(ErrorCode::NoSignChange, [&] { tune_to_critical(flat, "x", 0.0, 1.0, 1e-3, 1.0, 1.0); });
  expect_error(ErrorCode::InvalidArgument, [&] { tune_to_critical(flat, "x", 1.0, 0.0, 1e-3, 1.0, 1.0); });
  auto line = [](double x, double) { return ThresholdEstimate{x - 0.3, 0.0}; };
  expect_error(ErrorCode::BudgetExhausted, [&] { tune_to_critical(line, "x", 0.0, 1.0, 1e-12, 1.0, 1.0, 5); });
}

TEST_CASE("threshold is monotone along a 5-point beta sweep") {
  const IntegratorConfig cfg{0.01, 500.0, 5000.0, true};
  double prev_value = -1e300, prev_se = 0.0;
  for (double beta : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    NoiseStream rng(14);
    const auto e = boundary_average_threshold(sirs_switched(beta), cfg, rng);
    CHECK(e.value + e.standard_error >= prev_value - prev_se);
    prev_value = e.value;
    prev_se = e.standard_error;
  }
}

TEST_CASE("set_parameter") {
  ModelSpec spec = sirs_switched(2.0);
  set_parameter(spec, "beta.1", 7.0);
  const auto& envs = std::get<Sirs>(spec.model).params().envs;
  CHECK(envs[0].beta == 2.0);
  CHECK(envs[1].beta == 7.0);
  set_parameter(spec, "beta", 3.0);
  CHECK(std::get<Sirs>(spec.model).params().envs[1].beta == 3.0);
  expect_error(ErrorCode::InvalidArgument, [&] { set_parameter(spec, "nonsense", 1.0); });
  expect_error(ErrorCode::InvalidArgument, [&] { set_parameter(spec, "beta.9", 1.0); });
  expect_error(ErrorCode::InvalidArgument, [&] { set_parameter(spec, "beta", -1.0); });

  ModelSpec sis = sis_one(mat({{0.0, 1.0}, {2.0, 0.0}}), Eigen::Vector2d(1.0, 1.0));
  set_parameter(sis, "contact", 4.0);
  CHECK(std::get<Sis>(sis.model).C(0).maxCoeff() == doctest::Approx(4.0));
}

} // TEST_SUITE
