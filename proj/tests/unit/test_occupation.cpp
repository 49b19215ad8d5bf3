#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "critpop/occupation.hpp"
#include "critpop/switching.hpp"
#include "helpers.hpp"

using namespace critpop;

namespace {

// Batch-means SE of the state-0 indicator of a 2-state chain over [0, horizon].
double chain_se(std::uint64_t seed, double horizon) {
  const RateMatrix q = validate_rate_matrix(mat({{-1, 1}, {1, -1}}));
  NoiseStream rng(seed);
  BatchMeans acc(0.0, horizon);
  double prev = 1.0;
  sample_chain(q, 0, horizon, rng, [&](double a, double, int k) {
    const double v = k == 0 ? 1.0 : 0.0;
    acc.observe(a, prev, v);
    prev = v;
  });
  acc.observe(horizon, prev);
  return acc.standard_error();
}

} // namespace

TEST_SUITE("occupation") {

TEST_CASE("running average of a constant") {
  RunningAverage avg;
  for (int i = 0; i <= 10; ++i) avg.observe(i, 3.0);
  CHECK(avg.average() == 3.0);
  CHECK(avg.elapsed() == 10.0);
}

TEST_CASE("running average is exact on linear functions and accurate on t^2") {
  RunningAverage lin, sq;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i * 1e-3;
    lin.observe(t, t);
    sq.observe(t, t * t);
  }
  CHECK(lin.average() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(sq.average() - 1.0 / 3.0) <= 1e-6);
}

TEST_CASE("running average rejects non-increasing times") {
  RunningAverage avg;
  avg.observe(1.0, 0.0);
  expect_error(ErrorCode::NonMonotoneTime, [&] { avg.observe(1.0, 0.0); });
}

TEST_CASE("running average merge concatenates windows") {
  RunningAverage a, b, whole;
  for (int i = 0; i <= 10; ++i) {
    const double t = i, f = std::sin(t);
    whole.observe(t, f);
    if (i <= 5) a.observe(t, f);
    if (i >= 5) b.observe(t, f);
  }
  a.merge(b);
  CHECK(a.average() == doctest::Approx(whole.average()).epsilon(1e-14));
}

TEST_CASE("batch means partition the post-burn-in window") {
  BatchMeans acc(2.0, 12.0, 20);
  for (int i = 0; i <= 1200; ++i) acc.observe(i * 0.01, 5.0);
  CHECK(acc.batches() == 20);
  CHECK(acc.batch_length() == doctest::Approx(0.5));
  CHECK(acc.covered() == doctest::Approx(10.0));
  CHECK(acc.mean() == doctest::Approx(5.0).epsilon(1e-12));
  for (double m : acc.means()) CHECK(m == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(acc.standard_error() <= 1e-12);
}

TEST_CASE("standard error is sd(batch means)/sqrt(B)") {
  const std::vector<double> means{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto acc = BatchMeans::from_means(means);
  CHECK(acc.standard_error() == doctest::Approx(sample_std(means) / std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("batch_ci examples") {
  const auto flat = BatchMeans::from_means(std::vector<double>(30, 0.7));
  const auto ci = batch_ci(flat);
  CHECK(ci.mean == doctest::Approx(0.7));
  CHECK(ci.half_width == 0.0);

  NoiseStream rng(31);
  std::vector<double> iid(100);
  for (double& v : iid) v = rng.gaussian();
  const auto ci2 = batch_ci(BatchMeans::from_means(iid));
  CHECK(std::abs(ci2.half_width - 0.196) <= 0.2 * 0.196);

  expect_error(ErrorCode::TooFewBatches, [] { batch_ci(BatchMeans::from_means({1, 2, 3, 4, 5})); });
}

TEST_CASE("doubling the horizon shrinks the SE by 1/sqrt(2) within 30%") {
  double ratio = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s)
    ratio += chain_se(100 + s, 2e4) / chain_se(100 + s, 1e4);
  ratio /= seeds;
  CHECK(std::abs(ratio / std::sqrt(0.5) - 1.0) <= 0.3);
}

TEST_CASE("batch means merge pools batches") {
  const auto a = BatchMeans::from_means({1.0, 2.0});
  auto m = BatchMeans::from_means({3.0});
  m.merge(a);
  CHECK(m.batches() == 3);
  CHECK(m.mean() == doctest::Approx(2.0));
}

TEST_CASE("histogram mass sums to one with outside mass tracked") {
  OccupationHistogram hist(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), {4, 5});
  NoiseStream rng(4);
  for (int i = 0; i <= 5000; ++i)
    hist.observe(i * 0.01, Eigen::Vector2d(1.2 * rng.uniform(), rng.uniform()));
  const auto w = hist.weights();
  CHECK(w.size() == 20);
  const double inside = std::accumulate(w.begin(), w.end(), 0.0);
  CHECK(std::abs(inside + hist.outside_mass() - 1.0) <= 1e-9);
  CHECK(hist.outside_mass() > 0.1);
  CHECK(hist.outside_mass() < 0.25);
}

TEST_CASE("log_growth examples") {
  std::vector<double> t, up, flat;
  for (int i = 0; i <= 1000; ++i) {
    t.push_back(i * 0.1);
    up.push_back(std::exp(0.3 * i * 0.1));
    flat.push_back(2.5);
  }
  CHECK(log_growth(t, up, 10.0, 100.0).rate == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(log_growth(t, flat, 10.0, 100.0).rate == 0.0);
  std::vector<double> with_zero = flat;
  with_zero[3] = 0.0;
  expect_error(ErrorCode::NonPositiveValue, [&] { log_growth(t, with_zero, 10.0, 100.0); });
}

TEST_CASE("log_growth is invariant under rescaling") {
  NoiseStream rng(9);
  std::vector<double> t, rho, scaled;
  double l = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    t.push_back(i * 0.05);
    l += 0.05 * 0.1 + std::sqrt(0.05) * 0.3 * rng.gaussian();
    rho.push_back(std::exp(l));
    scaled.push_back(8.0 * std::exp(l));
  }
  const auto a = log_growth(t, rho, 10.0, 100.0);
  const auto b = log_growth(t, scaled, 10.0, 100.0);
  CHECK(std::abs(a.rate - b.rate) <= 1e-12);
}

TEST_CASE("log growth of exact GBM is mu - sigma^2/2 within 3 SE") {
  const double mu = 0.1, sigma = 0.2, horizon = 1e4, h = 0.1;
  NoiseStream rng(123);
  LogGrowth growth(0.0, horizon);
  double l = 0.0;
  growth.observe(0.0, 0.0);
  const int steps = static_cast<int>(horizon / h);
  for (int i = 1; i <= steps; ++i) {
    l += (mu - sigma * sigma / 2) * h + sigma * std::sqrt(h) * rng.gaussian();
    growth.observe(i / 10.0, l);
  }
  const auto est = growth.estimate();
  CHECK(est.batch_slopes.size() == 50);
  CHECK(std::abs(est.rate - 0.08) <= 3.0 * est.standard_error);
}

} // TEST_SUITE
