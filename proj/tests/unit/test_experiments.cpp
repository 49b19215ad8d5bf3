#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "critpop/cli.hpp"
#include "critpop/experiments.hpp"
#include "helpers.hpp"

using namespace critpop;

namespace {

ModelSpec sis_one(double diag) {
  // A = [[diag, 1], [1, diag]], Perron eigenvalue diag + 1
  SisParams p;
  p.envs = {SisEnvironment{mat({{0.0, 1.0}, {1.0, 0.0}}), Eigen::Vector2d::Constant(-diag)}};
  return make_spec(Sis(p));
}

ModelSpec seir_one(double beta) {
  SeirParams p;
  p.envs = {SeirEnvironment{beta, 1.0, 2.0}};
  return make_spec(Seir(p));
}

ModelSpec sirs_one(double beta) {
  SirsParams p;
  p.envs = {SirsEnvironment{beta, 0.0, 0.0, 0.0, {}}};
  return make_spec(Sirs(p));
}

ExperimentSettings settings(double dt, double horizon, int seeds) {
  ExperimentSettings s;
  s.cfg = {dt, 0.1 * horizon, horizon, true};
  for (int i = 0; i < seeds; ++i) s.seeds.push_back(static_cast<std::uint64_t>(100 + i));
  s.checkpoints = 200;
  return s;
}

// A critical report built by hand: two seeds, configurable trend.
ExperimentReport synthetic(bool decreasing, double threshold_se) {
  ExperimentReport r;
  r.kind = ExperimentKind::Critical;
  r.model = "seir";
  r.plan = {"u", "s", 1.0};
  r.horizon = 100.0;
  r.threshold = {0.0, threshold_se, ThresholdMethod::BoundaryAverage, 100.0, 0.01};
  for (std::uint64_t s = 1; s <= 2; ++s) {
    SeedRecord rec;
    rec.seed = s;
    rec.average = decreasing ? std::array<double, 3>{0.3, 0.2, 0.1} : std::array<double, 3>{0.1, 0.2, 0.3};
    rec.companion = {0.9, 0.95, 1.0};
    r.seeds.push_back(rec);
  }
  const auto v = evaluate_verdict(r);
  r.verdict = v.verdict;
  r.reason = v.reason;
  r.passing_fraction = v.passing_fraction;
  return r;
}

} // namespace

TEST_SUITE("experiments") {

TEST_CASE("subcritical SIS decays at the Perron eigenvalue") {
  const ModelSpec spec = sis_one(-1.5);
  const auto threshold = *closed_form_threshold(spec);
  CHECK(threshold.value == doctest::Approx(-0.5));
  const auto r = run_subcritical(spec, threshold, settings(1e-2, 200.0, 2));
  CHECK(r.verdict == Verdict::Pass);
  for (const auto& s : r.seeds) CHECK(std::abs(s.growth + 0.5) <= 0.1);
}

TEST_CASE("subcritical SEIR decays at -0.5") {
  // det(B + I/2) = 0 at beta = 1.875
  const ModelSpec spec = seir_one(1.875);
  const auto threshold = *closed_form_threshold(spec);
  CHECK(threshold.value == doctest::Approx(-0.5));
  const auto r = run_subcritical(spec, threshold, settings(1e-2, 200.0, 2));
  CHECK(r.verdict == Verdict::Pass);
  for (const auto& s : r.seeds) CHECK(std::abs(s.growth + 0.5) <= 0.1);
}

TEST_CASE("subcritical SIRS: the Cesaro average of I + R falls like 1/t") {
  const ModelSpec spec = sirs_one(0.5);
  const auto r = run_subcritical(spec, *closed_form_threshold(spec), settings(1e-2, 400.0, 1));
  CHECK(r.verdict == Verdict::Pass);
  // a finite integral divided by t: avg(T)/avg(T/4) -> 1/4
  const auto& s = r.seeds.front();
  CHECK(s.average[2] / s.average[0] == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("critical SEIR: U average decreasing, S average near Lambda/gamma") {
  const ModelSpec spec = seir_one(3.0);
  auto cfg = settings(1e-2, 1e4, 2);
  cfg.rules.ceiling = 0.05;
  const auto r = run_critical(spec, *closed_form_threshold(spec), cfg);
  CHECK(r.plan.observable == "u");
  CHECK(r.plan.companion == "s");
  CHECK(r.verdict == Verdict::Pass);
  for (const auto& s : r.seeds) {
    CHECK(s.average[0] > s.average[1]);
    CHECK(s.average[1] > s.average[2]);
    CHECK(std::abs(s.companion[2] - 1.0) <= 0.05);
  }
}

TEST_CASE("persistent SIS: norm average positive and stable, mu H = 0 witness") {
  const ModelSpec spec = sis_one(-0.5);
  const auto r = run_persistent(spec, *closed_form_threshold(spec), settings(1e-2, 500.0, 2));
  CHECK(r.verdict == Verdict::Pass);
  for (const auto& s : r.seeds) {
    CHECK(s.average[2] > 0.0);
    CHECK(std::abs(s.average[2] - s.average[1]) <= 0.1 * s.average[2]);
    CHECK(std::isfinite(s.interior_h));
  }
}

TEST_CASE("regime certification") {
  const ModelSpec spec = sis_one(-1.5);
  const ThresholdEstimate positive{0.5, 0.0};
  const ThresholdEstimate vague{-0.01, 0.1};
  expect_error(ErrorCode::InvalidArgument, [&] { run_subcritical(spec, positive, settings(1e-2, 100.0, 1)); });
  expect_error(ErrorCode::InvalidArgument, [&] { run_subcritical(spec, vague, settings(1e-2, 100.0, 1)); });
  expect_error(ErrorCode::InvalidArgument, [&] { run_persistent(spec, {-0.5, 0.0}, settings(1e-2, 100.0, 1)); });
}

TEST_CASE("classify_regime") {
  CHECK(classify_regime({-0.5, 0.01}, 0.02) == Regime::Subcritical);
  CHECK(classify_regime({0.5, 0.01}, 0.02) == Regime::Persistent);
  CHECK(classify_regime({0.01, 0.0}, 0.02) == Regime::Critical);
  CHECK(classify_regime({0.1, 0.05}, 0.02) == Regime::Critical);
}

TEST_CASE("trichotomy along a beta sweep has no inversions") {
  int last = -1;
  for (double beta = 0.5; beta <= 2.0; beta += 0.125) {
    const auto e = *closed_form_threshold(sirs_one(beta));
    const int rank = static_cast<int>(classify_regime(e, 0.02));
    CHECK(rank >= last);
    last = rank;
  }
  CHECK(last == static_cast<int>(Regime::Persistent));
}

TEST_CASE("verdicts are re-evaluable from a saved report") {
  const ModelSpec spec = sis_one(-1.5);
  const auto r = run_subcritical(spec, *closed_form_threshold(spec), settings(1e-2, 100.0, 2));
  const auto again = evaluate_verdict(r);
  CHECK(again.verdict == r.verdict);
  CHECK(again.reason == r.reason);
  const ExperimentReport restored = cli::report_from_json(cli::report_to_json(r));
  const auto from_disk = evaluate_verdict(restored);
  CHECK(from_disk.verdict == r.verdict);
  CHECK(from_disk.passing_fraction == r.passing_fraction);
}

TEST_CASE("merge is associative") {
  const auto a = synthetic(true, 0.0), b = synthetic(false, 0.0), c = synthetic(true, 0.0);
  const auto left = merge(merge(a, b), c);
  const auto right = merge(a, merge(b, c));
  REQUIRE(left.seeds.size() == 6);
  CHECK(left.verdict == right.verdict);
  CHECK(left.passing_fraction == right.passing_fraction);
  for (std::size_t i = 0; i < 6; ++i) CHECK(left.seeds[i].average == right.seeds[i].average);
  CHECK(left.passing_fraction == doctest::Approx(4.0 / 6.0));
  CHECK(left.verdict == Verdict::Fail);

  auto other = synthetic(true, 0.0);
  other.horizon = 200.0;
  expect_error(ErrorCode::InvalidArgument, [&] { merge(a, other); });
}

TEST_CASE("a failed critical trend with a wide threshold SE is inconclusive") {
  CHECK(synthetic(true, 0.0).verdict == Verdict::Pass);
  CHECK(synthetic(false, 0.0).verdict == Verdict::Fail);
  CHECK(synthetic(false, 0.05).verdict == Verdict::Inconclusive);
}

TEST_CASE("companion average outside tolerance fails the critical verdict") {
  auto r = synthetic(true, 0.0);
  for (auto& s : r.seeds) s.companion[2] = 0.8;
  CHECK(evaluate_verdict(r).verdict == Verdict::Fail);
}

TEST_CASE("experiment kind names") {
  CHECK(to_string(ExperimentKind::Critical) == "critical");
  CHECK(experiment_kind_from_string("persistent") == ExperimentKind::Persistent);
  expect_error(ErrorCode::InvalidArgument, [] { experiment_kind_from_string("bogus"); });
}

} // TEST_SUITE
