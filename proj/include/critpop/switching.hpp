#pragma once

#include <functional>
#include <limits>

#include <Eigen/Core>

#include "critpop/noise.hpp"

namespace critpop {

// Generator of an irreducible continuous-time Markov chain on {0, ..., n-1}.
// Only constructible through validate_rate_matrix.
class RateMatrix {
public:
  Eigen::Index size() const noexcept { return q_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return q_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return q_(i, j); }
  // total jump rate out of state k
  double exit_rate(Eigen::Index k) const { return -q_(k, k); }

  // Trivial single-environment chain.
  static RateMatrix single();

private:
  friend RateMatrix validate_rate_matrix(const Eigen::MatrixXd& q);
  explicit RateMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {}
  Eigen::MatrixXd q_;
};

RateMatrix validate_rate_matrix(const Eigen::MatrixXd& q);

// Stationary law p with pQ = 0, sum(p) = 1.
Eigen::VectorXd stationary_law(const RateMatrix& q);

// Streams the jump chain one holding period at a time.
class ChainSampler {
public:
  ChainSampler(const RateMatrix& q, int k0, NoiseStream& rng);

  int state() const noexcept { return state_; }
  // absolute time of the next jump (infinity for a single state)
  double next_jump_time() const noexcept { return next_jump_; }
  // perform the pending jump; returns the new state
  int jump();

private:
  void draw_holding(double now);

  const RateMatrix* q_;
  NoiseStream* rng_;
  int state_;
  double next_jump_ = std::numeric_limits<double>::infinity();
};

// Segment [t_begin, t_end) spent in `state`.
using ChainObserver = std::function<void(double t_begin, double t_end, int state)>;

// Samples a path on [0, horizon] exactly in law and streams its segments.
// Returns the number of jumps.
std::size_t sample_chain(const RateMatrix& q, int k0, double horizon, NoiseStream& rng,
                         const ChainObserver& observer);

} // namespace critpop
