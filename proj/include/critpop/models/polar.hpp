#pragma once

#include <Eigen/Core>

#include "critpop/error.hpp"

namespace critpop {

enum class PolarMode { Sphere, Simplex };

struct Polar {
  double radius = 0.0;
  Eigen::VectorXd direction;
};

// sphere: (|x|_2, x/|x|_2); simplex: (sum x, x/sum x)
template <typename Derived>
Polar polar_decompose(const Eigen::MatrixBase<Derived>& x, PolarMode mode) {
  if ((x.array() < 0.0).any())
    throw Error(ErrorCode::OutOfDomain, "models", "polar_decompose", "negative coordinate");
  const double radius = mode == PolarMode::Sphere ? x.norm() : x.sum();
  if (!(radius > 0.0))
    throw Error(ErrorCode::ZeroVector, "models", "polar_decompose", "zero vector has no direction");
  return {radius, x / radius};
}

// In-place projection helpers used as renormalization after a step.
template <typename Derived>
void project_to_simplex(Eigen::MatrixBase<Derived>&& y) {
  y = y.cwiseMax(0.0);
  const double s = y.sum();
  if (s > 0.0) y /= s;
}

template <typename Derived>
void project_to_sphere(Eigen::MatrixBase<Derived>&& theta) {
  const double n = theta.norm();
  if (n > 0.0) theta /= n;
}

} // namespace critpop
