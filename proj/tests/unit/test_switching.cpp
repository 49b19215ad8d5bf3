#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "critpop/occupation.hpp"
#include "critpop/switching.hpp"
#include "helpers.hpp"

using namespace critpop;

namespace {

// Independent oracle: power iteration on the uniformized chain I + Q / lambda.
Eigen::VectorXd uniformized_stationary(const Eigen::MatrixXd& q) {
  const double lambda = 1.1 * q.diagonal().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(q.rows(), q.cols()) + q / lambda;
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(q.rows(), 1.0 / q.rows());
  for (int i = 0; i < 20000; ++i) pi = pi * p;
  return pi.transpose() / pi.sum();
}

} // namespace

TEST_SUITE("switching") {

TEST_CASE("validate_rate_matrix accepts and rejects the documented examples") {
  CHECK_NOTHROW(validate_rate_matrix(mat({{-1, 1}, {1, -1}})));
  expect_error(ErrorCode::NotIrreducible, [] { validate_rate_matrix(mat({{-1, 1}, {0, 0}})); });
  const auto msg =
      expect_error(ErrorCode::RowSumNonzero, [] { validate_rate_matrix(mat({{-1, 2}, {1, -1}})); });
  CHECK(msg.find("row 0") != std::string::npos);
  expect_error(ErrorCode::NegativeOffDiagonal,
               [] { validate_rate_matrix(mat({{1, -1}, {1, -1}})); });
  expect_error(ErrorCode::NotSquare, [] { validate_rate_matrix(Eigen::MatrixXd::Zero(2, 3)); });
}

TEST_CASE("validated rows sum to zero within 1e-12") {
  const RateMatrix q = validate_rate_matrix(mat({{-0.3, 0.1, 0.2}, {0.5, -0.5, 0.0}, {0.0, 2.0, -2.0}}));
  CHECK(q.matrix().rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stationary_law examples") {
  const Eigen::VectorXd p1 = stationary_law(validate_rate_matrix(mat({{-1, 1}, {1, -1}})));
  CHECK(p1(0) == doctest::Approx(0.5).epsilon(1e-12));
  const Eigen::VectorXd p2 = stationary_law(validate_rate_matrix(mat({{-2, 2}, {1, -1}})));
  CHECK(p2(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p2(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const Eigen::VectorXd p3 = stationary_law(RateMatrix::single());
  CHECK(p3.size() == 1);
  CHECK(p3(0) == 1.0);
}

TEST_CASE("stationary_law agrees with a uniformization oracle on a 4-state chain") {
  const Eigen::MatrixXd q = mat({{-1.0, 0.5, 0.5, 0.0},
                                 {0.2, -0.7, 0.0, 0.5},
                                 {0.0, 3.0, -4.0, 1.0},
                                 {1.5, 0.0, 0.5, -2.0}});
  const Eigen::VectorXd p = stationary_law(validate_rate_matrix(q));
  const Eigen::VectorXd oracle = uniformized_stationary(q);
  CHECK((p - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((p.transpose() * q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-state chain gives one segment and no jumps") {
  NoiseStream rng(1);
  std::vector<std::tuple<double, double, int>> segs;
  const auto jumps = sample_chain(RateMatrix::single(), 0, 10.0, rng,
                                  [&](double a, double b, int k) { segs.emplace_back(a, b, k); });
  CHECK(jumps == 0);
  REQUIRE(segs.size() == 1);
  CHECK(std::get<0>(segs[0]) == 0.0);
  CHECK(std::get<1>(segs[0]) == 10.0);
  CHECK(std::get<2>(segs[0]) == 0);
}

TEST_CASE("symmetric chain spends half its time in state 0") {
  const RateMatrix q = validate_rate_matrix(mat({{-1, 1}, {1, -1}}));
  NoiseStream rng(42);
  double in0 = 0.0;
  sample_chain(q, 0, 1e4, rng, [&](double a, double b, int k) {
    if (k == 0) in0 += b - a;
  });
  CHECK(std::abs(in0 / 1e4 - 0.5) <= 0.02);
}

TEST_CASE("ergodic consistency: occupation within 3 batch SE of the stationary law") {
  const RateMatrix q = validate_rate_matrix(mat({{-0.5, 0.5}, {1.5, -1.5}}));
  const Eigen::VectorXd p = stationary_law(q);
  NoiseStream rng(7);
  BatchMeans acc(0.0, 1e4);
  double prev = 1.0;
  sample_chain(q, 0, 1e4, rng, [&](double a, double, int k) {
    const double v = k == 0 ? 1.0 : 0.0;
    acc.observe(a, prev, v);
    prev = v;
  });
  acc.observe(1e4, prev);
  CHECK(std::abs(acc.mean() - p(0)) <= 3.0 * acc.standard_error());
}

TEST_CASE("same seed gives identical jump sequences") {
  const RateMatrix q = validate_rate_matrix(mat({{-1, 1}, {1, -1}}));
  auto path = [&](std::uint64_t seed) {
    NoiseStream rng(seed);
    std::vector<double> times;
    sample_chain(q, 0, 100.0, rng, [&](double a, double, int) { times.push_back(a); });
    return times;
  };
  CHECK(path(5) == path(5));
  CHECK(path(5) != path(6));
}

TEST_CASE("holding times pass a Kolmogorov-Smirnov test against Exponential(-q_kk)") {
  const RateMatrix q = validate_rate_matrix(mat({{-2, 2}, {1, -1}}));
  NoiseStream rng(11);
  std::vector<double> holds;
  ChainSampler chain(q, 0, rng);
  double entered = 0.0;
  while (holds.size() < 10000) {
    const double t = chain.next_jump_time();
    const int from = chain.state();
    chain.jump();
    if (from == 0) holds.push_back(t - entered);
    entered = t;
  }
  std::sort(holds.begin(), holds.end());
  const double n = static_cast<double>(holds.size());
  double d = 0.0;
  for (std::size_t i = 0; i < holds.size(); ++i) {
    const double f = 1.0 - std::exp(-2.0 * holds[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  CHECK(d < 1.628 / std::sqrt(n)); // 1% critical value
}

TEST_CASE("NoiseStream split gives independent reproducible children") {
  NoiseStream a(3);
  NoiseStream c1 = a.split(1), c1b = a.split(1), c2 = a.split(2);
  const double x = c1.gaussian();
  CHECK(x == c1b.gaussian());
  CHECK(x != c2.gaussian());
  CHECK(a.position() == 0);
}

} // TEST_SUITE
