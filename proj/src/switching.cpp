#include "critpop/switching.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "critpop/error.hpp"
#include "detail/graph.hpp"

namespace critpop {

namespace {

Error switching_error(ErrorCode code, const char* op, const std::string& msg) {
  return Error(code, "switching", op, msg);
}

} // namespace

RateMatrix RateMatrix::single() { return RateMatrix(Eigen::MatrixXd::Zero(1, 1)); }

RateMatrix validate_rate_matrix(const Eigen::MatrixXd& q) {
  constexpr const char* op = "validate_rate_matrix";
  if (q.rows() != q.cols() || q.rows() == 0)
    throw switching_error(ErrorCode::NotSquare, op,
                          "rate matrix is " + std::to_string(q.rows()) + "x" +
                              std::to_string(q.cols()));
  if (!q.allFinite()) throw switching_error(ErrorCode::InvalidArgument, op, "non-finite rate");

  const Eigen::Index n = q.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && q(i, j) < 0.0)
        throw switching_error(ErrorCode::NegativeOffDiagonal, op,
                              "entry (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is negative");

  Eigen::MatrixXd cleaned = q;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double off = q.row(i).sum() - q(i, i);
    const double scale = std::max(1.0, q.row(i).cwiseAbs().maxCoeff());
    if (std::abs(q.row(i).sum()) > 1e-9 * scale)
      throw switching_error(ErrorCode::RowSumNonzero, op,
                            "row " + std::to_string(i) + " sums to " +
                                std::to_string(q.row(i).sum()));
    cleaned(i, i) = -off;
  }

  if (const Eigen::Index bad = detail::first_disconnected(cleaned); bad >= 0)
    throw switching_error(ErrorCode::NotIrreducible, op,
                          "state " + std::to_string(bad) + " is not strongly connected to state 0");

  return RateMatrix(std::move(cleaned));
}

Eigen::VectorXd stationary_law(const RateMatrix& rates) {
  const Eigen::MatrixXd& q = rates.matrix();
  const Eigen::Index n = q.rows();
  // Q^T p = 0 with the last equation replaced by sum(p) = 1.
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() < n)
    throw switching_error(ErrorCode::SingularSystem, "stationary_law",
                          "balance equations have rank " + std::to_string(lu.rank()));
  Eigen::VectorXd p = lu.solve(rhs);
  p /= p.sum();

  const double residual = (p.transpose() * q).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10) || (p.array() <= 0.0).any())
    throw switching_error(ErrorCode::SingularSystem, "stationary_law",
                          "residual " + std::to_string(residual));
  return p;
}

ChainSampler::ChainSampler(const RateMatrix& q, int k0, NoiseStream& rng)
    : q_(&q), rng_(&rng), state_(k0) {
  if (k0 < 0 || k0 >= q.size())
    throw switching_error(ErrorCode::InvalidArgument, "sample_chain",
                          "initial environment " + std::to_string(k0) + " out of range");
  draw_holding(0.0);
}

void ChainSampler::draw_holding(double now) {
  next_jump_ = now + rng_->exponential(q_->exit_rate(state_));
}

int ChainSampler::jump() {
  const double now = next_jump_;
  const double total = q_->exit_rate(state_);
  // next state j with probability q_kj / total
  double u = rng_->uniform() * total;
  int next = state_;
  const Eigen::Index n = q_->size();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == state_) continue;
    const double w = (*q_)(state_, j);
    if (w <= 0.0) continue;
    next = static_cast<int>(j);
    if (u < w) break;
    u -= w;
  }
  state_ = next;
  draw_holding(now);
  return state_;
}

std::size_t sample_chain(const RateMatrix& q, int k0, double horizon, NoiseStream& rng,
                         const ChainObserver& observer) {
  if (!(horizon > 0.0))
    throw switching_error(ErrorCode::InvalidArgument, "sample_chain", "horizon must be > 0");
  ChainSampler chain(q, k0, rng);
  double t = 0.0;
  std::size_t jumps = 0;
  while (chain.next_jump_time() < horizon) {
    const double tj = chain.next_jump_time();
    if (observer) observer(t, tj, chain.state());
    t = tj;
    chain.jump();
    ++jumps;
  }
  if (observer) observer(t, horizon, chain.state());
  return jumps;
}

} // namespace critpop
