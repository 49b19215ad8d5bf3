#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace critpop {

// Seeded source of Gaussian increments, exponential holding times and
// uniforms. A (seed, stream id) pair fully determines the sequence; distinct
// stream ids are mixed through SplitMix64 before seeding the engine.
class NoiseStream {
public:
  explicit NoiseStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  // number of variates drawn so far
  std::uint64_t position() const noexcept { return position_; }

  // An independent child stream; does not advance this one.
  NoiseStream split(std::uint64_t child) const;

  double gaussian();
  double uniform();
  double exponential(double rate);

  // Brownian increment over a step of length h: N(0, h) per coordinate.
  template <typename Derived>
  void fill_increment(Eigen::MatrixBase<Derived>& dw, double h) {
    const double scale = std::sqrt(h);
    for (Eigen::Index i = 0; i < dw.size(); ++i) dw.derived()(i) = scale * gaussian();
  }

  Eigen::VectorXd increment(Eigen::Index dim, double h) {
    Eigen::VectorXd dw(dim);
    fill_increment(dw, h);
    return dw;
  }

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace critpop
