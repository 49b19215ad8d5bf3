#include <cmath>

#include <Eigen/Dense>
#include <doctest.h>

#include "critpop/coupling.hpp"
#include "helpers.hpp"

using namespace critpop;

namespace {

Patchy patchy_two(double c_scale = 1.0) {
  PatchyParams p;
  p.a = Eigen::Vector2d(0.8, 0.4);
  p.c = c_scale * Eigen::Vector2d(1.0, 0.5);
  p.D = mat({{0.0, 0.3}, {0.2, 0.0}});
  p.Gamma = mat({{0.6, 0.1}, {0.0, 0.5}});
  return Patchy(p);
}

Sis sis_two_env() {
  SisParams p;
  p.envs = {SisEnvironment{mat({{0.5, 2.0}, {1.0, 0.2}}), Eigen::Vector2d(1.0, 0.5)},
            SisEnvironment{mat({{0.1, 0.9}, {0.6, 0.0}}), Eigen::Vector2d(0.3, 0.4)}};
  return Sis(p);
}

Seir seir_persistent() {
  SeirParams p;
  p.envs = {SeirEnvironment{4.0, 1.0, 2.0}, SeirEnvironment{5.0, 0.5, 3.0}};
  return Seir(p);
}

const RateMatrix& two_state() {
  static const RateMatrix q = validate_rate_matrix(mat({{-1, 1}, {2, -2}}));
  return q;
}

// largest |column a - column b| over the recorded rows
double column_gap(const CoupledRun& run, std::size_t a, std::size_t b) {
  double worst = 0.0;
  for (const auto& row : run.rows) worst = std::max(worst, std::abs(row[a] - row[b]));
  return worst;
}

} // namespace

TEST_SUITE("coupling") {

TEST_CASE("RMA without predators: X and X^ coincide") {
  NoiseStream rng(1);
  const auto run = couple_rma(Rma(RmaParams{}), Eigen::Vector2d(2.0, 0.0), {1e-3, 10.0, 100.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(run.gap_mean == 0.0);
  CHECK(column_gap(run, 1, 3) == 0.0);
  CHECK(run.columns == std::vector<std::string>{"t", "x", "y", "x_hat"});
}

TEST_CASE("RMA persistent regime: order holds and the gap is positive") {
  NoiseStream rng(2);
  const auto run =
      couple_rma(Rma(RmaParams{4.0, 0.3, 0.5}), Eigen::Vector2d(2.0, 1.0), {1e-3, 100.0, 1000.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(run.gap_mean > 3.0 * run.gap_se);
}

TEST_CASE("RMA deterministic comparison holds on every grid point") {
  NoiseStream rng(3);
  const auto run =
      couple_rma(Rma(RmaParams{4.0, 0.3, 0.0}), Eigen::Vector2d(1.0, 2.0), {1e-3, 10.0, 200.0, true}, rng);
  CHECK(run.violations == 0);
  for (const auto& row : run.rows) CHECK(row[1] <= row[3] + 1e-12);
}

TEST_CASE("patchy: vanishing competition makes the three processes coincide") {
  NoiseStream rng(4);
  const auto run = couple_patchy(patchy_two(1e-12), Eigen::Vector2d(0.5, 0.5), {1e-3, 1.0, 10.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(column_gap(run, 1, 2) <= 1e-6);
  CHECK(column_gap(run, 2, 3) <= 1e-6);
  CHECK(run.direction_gap <= 1e-6);
}

TEST_CASE("patchy n=2 generic parameters: no order violations") {
  NoiseStream rng(5);
  const auto run = couple_patchy(patchy_two(), Eigen::Vector2d(0.5, 0.5), {1e-3, 100.0, 1000.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(run.gap_mean > 3.0 * run.gap_se);
  CHECK(run.growth_identity_residual < 1e-2);
}

TEST_CASE("SIS: the linearization is exact near the origin") {
  NoiseStream rng(6);
  const auto run = couple_sis(sis_two_env(), Eigen::Vector2d(1e-9, 1e-9), two_state(), 0,
                              {1e-3, 0.1, 1.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(column_gap(run, 1, 3) <= 1e-6);
}

TEST_CASE("SIS d=2 N=2: no violations and a positive varsigma average") {
  NoiseStream rng(7);
  const auto run =
      couple_sis(sis_two_env(), Eigen::Vector2d(0.4, 0.6), two_state(), 0, {1e-3, 100.0, 1000.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(run.gap_mean > 3.0 * run.gap_se);
}

TEST_CASE("SEIR: at the disease-free susceptible level V and V~ coincide") {
  NoiseStream rng(8);
  const auto run =
      couple_seir(seir_persistent(), Eigen::Vector3d(1.0 - 1e-12, 1e-12, 0.4), two_state(), 0, {1e-3, 1.0, 10.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(column_gap(run, 3, 4) <= 1e-8);
}

TEST_CASE("SEIR persistent regime: V >= V~ and V stays away from 0") {
  NoiseStream rng(9);
  const auto run = couple_seir(seir_persistent(), Eigen::Vector3d(0.5, 0.3, 0.5), two_state(), 0,
                               {1e-2, 100.0, 1000.0, true}, rng);
  CHECK(run.violations == 0);
  CHECK(run.min_v > 0.0);
  for (const auto& row : run.rows) CHECK(row[3] >= row[4] - 1e-9);

  NoiseStream rng2(9);
  const auto longer = couple_seir(seir_persistent(), Eigen::Vector3d(0.5, 0.3, 0.5), two_state(), 0,
                                  {1e-2, 100.0, 2000.0, true}, rng2);
  CHECK(longer.min_v > 0.5 * run.min_v);
}

TEST_CASE("coupled runs are deterministic") {
  auto go = [] {
    NoiseStream rng(10);
    return couple_patchy(patchy_two(), Eigen::Vector2d(0.5, 0.5), {1e-3, 10.0, 100.0, true}, rng);
  };
  const auto a = go(), b = go();
  CHECK(a.gap_mean == b.gap_mean);
  CHECK(a.gap_se == b.gap_se);
  CHECK(a.rows == b.rows);
}

TEST_CASE("couple dispatches on the model") {
  NoiseStream rng(11);
  const ModelSpec rma = make_spec(Rma(RmaParams{}));
  const auto run = couple(rma, Eigen::Vector2d(2.0, 1.0), {1e-3, 1.0, 10.0, true}, rng, 10);
  CHECK(run.model == "rma");
  CHECK(run.rows.size() >= 10);

  SirsParams p;
  expect_error(ErrorCode::UnsupportedModel,
               [&] { couple(make_spec(Sirs(p)), Eigen::Vector3d(0.5, 0.2, 0.1), {1e-3, 1.0, 10.0, true}, rng); });
}

} // TEST_SUITE
