#pragma once

#include <vector>

#include <Eigen/Core>

namespace critpop::detail {

// Vertices reachable from `root` along positive off-diagonal entries,
// optionally following edges backwards.
inline std::vector<bool> reachable(const Eigen::MatrixXd& w, bool reversed,
                                   Eigen::Index root = 0) {
  const Eigen::Index n = w.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double e = reversed ? w(j, i) : w(i, j);
      if (j != i && e > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

// Index of the first vertex not strongly connected to vertex 0, or -1.
inline Eigen::Index first_disconnected(const Eigen::MatrixXd& w) {
  const auto fwd = reachable(w, false);
  const auto bwd = reachable(w, true);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    if (!fwd[i] || !bwd[i]) return static_cast<Eigen::Index>(i);
  return -1;
}

} // namespace critpop::detail
