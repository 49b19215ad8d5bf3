#include "critpop/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "critpop/occupation.hpp"

namespace critpop {

namespace {

// Infinity norm of a forward-difference Jacobian of f at x.
template <typename F>
double jacobian_norm(F&& f, const Eigen::VectorXd& x) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd j(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-7 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x;
    xp(i) += h;
    j.col(i) = (f(xp) - f0) / h;
  }
  return j.cwiseAbs().rowwise().sum().maxCoeff();
}

class OrderCheck {
public:
  explicit OrderCheck(double dt) : dt_(dt) {}

  // Claims lower <= upper componentwise. The Lipschitz bound is only
  // computed when the raw order fails.
  template <typename Lipschitz>
  void check(const Eigen::Ref<const Eigen::VectorXd>& lower,
             const Eigen::Ref<const Eigen::VectorXd>& upper, Lipschitz&& lipschitz) {
    double lip = -1.0;
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      const double excess = lower(i) - upper(i);
      if (!(excess > 0.0)) continue;
      const double scale = std::max(std::abs(lower(i)), std::abs(upper(i)));
      worst_ = std::max(worst_, excess / scale);
      if (lip < 0.0) lip = lipschitz();
      if (excess > 10.0 * dt_ * lip * scale) ++violations_;
    }
  }
  std::size_t violations() const { return violations_; }
  double worst() const { return worst_; }

private:
  double dt_;
  std::size_t violations_ = 0;
  double worst_ = 0.0;
};

// Records a row at t = 0 and at the first observation past each k T / n.
class Checkpoints {
public:
  Checkpoints(double horizon, int n) : step_(horizon / std::max(1, n)) {}
  bool due(double t) {
    if (t < next_) return false;
    while (next_ <= t) next_ += step_;
    return true;
  }

private:
  double step_;
  double next_ = 0.0;
};

void finish(CoupledRun& run, const OrderCheck& order, const BatchMeans& gap) {
  run.violations = order.violations();
  run.worst_violation = order.worst();
  run.gap_mean = gap.mean();
  run.gap_se = gap.standard_error();
}

struct RmaPair {
  using State = Eigen::Vector3d;
  using Noise = Eigen::Matrix<double, 1, 1>;
  const Rma* m;
  Eigen::Index noise_dim() const { return 1; }
  State drift(const State& z) const {
    const Eigen::Vector2d d = m->drift(z.head<2>());
    const double K = m->params().K;
    return {d(0), d(1), z(2) * (1.0 - z(2) / K)};
  }
  State diffuse(const State& z, const Noise& dw) const {
    const double e = m->params().epsilon * dw(0);
    return {e * z(0), 0.0, e * z(2)};
  }
  bool admit(State& z, double allowance) const { return clamp_small_negatives(z, allowance); }
};

// The linear comparison blocks grow or decay exponentially. Each is stored
// as a direction times exp(ell), with ell kept in the two trailing
// coordinates and refreshed only when the block norm leaves [1e-100, 1e100].
void rescale(Eigen::Ref<Eigen::VectorXd> block, double& ell, double norm) {
  if (!(norm > 0.0) || (norm > 1e-100 && norm < 1e100)) return;
  block /= norm;
  ell += std::log(norm);
}

struct PatchyTriple {
  using State = Eigen::VectorXd;
  using Noise = Eigen::VectorXd;
  const Patchy* m;
  Eigen::Index noise_dim() const { return m->n(); }
  State drift(const State& z) const {
    const Eigen::Index n = m->n();
    const auto& p = m->params();
    const Eigen::VectorXd x = z.head(n), xb = z.segment(n, n), xt = z.segment(2 * n, n);
    const double s = m->varsigma(x);
    State out = State::Zero(z.size());
    out.head(n) = m->drift(x);
    out.segment(n, n) = xb.cwiseProduct((p.a.array() - s).matrix()) + p.D.transpose() * xb;
    out.segment(2 * n, n) = xt.cwiseProduct(p.a) + p.D.transpose() * xt;
    return out;
  }
  State diffuse(const State& z, const Noise& dw) const {
    const Eigen::Index n = m->n();
    const Eigen::VectorXd e = m->params().Gamma.transpose() * dw;
    State out = State::Zero(z.size());
    for (Eigen::Index b = 0; b < 3; ++b)
      out.segment(b * n, n) = z.segment(b * n, n).cwiseProduct(e);
    return out;
  }
  bool admit(State& z, double allowance) const {
    return clamp_small_negatives(z, allowance, 0, 3 * m->n());
  }
  void project(State& z) const {
    const Eigen::Index n = m->n();
    rescale(z.segment(n, n), z(3 * n), z.segment(n, n).sum());
    rescale(z.segment(2 * n, n), z(3 * n + 1), z.segment(2 * n, n).sum());
  }
};

struct SisTriple {
  using State = Eigen::VectorXd;
  const Sis* m;
  State field(const State& z, int k) const {
    const Eigen::Index d = m->d();
    const Eigen::VectorXd x = z.head(d), xb = z.segment(d, d), y = z.segment(2 * d, d);
    const double s = m->varsigma(x, k);
    State out = State::Zero(z.size());
    out.head(d) = m->field(x, k);
    out.segment(d, d) = m->A(k) * xb - s * xb;
    out.segment(2 * d, d) = m->A(k) * y;
    return out;
  }
  bool admit(State& z, double allowance) const {
    const Eigen::Index d = m->d();
    if (!clamp_small_negatives(z, allowance, 0, 3 * d)) return false;
    return (z.head(d).array() <= 1.0 + 1e-9).all();
  }
  void project(State& z) const {
    const Eigen::Index d = m->d();
    rescale(z.segment(d, d), z(3 * d), z.segment(d, d).norm());
    rescale(z.segment(2 * d, d), z(3 * d + 1), z.segment(2 * d, d).norm());
  }
};

struct SeirPair {
  using State = Eigen::Vector4d;
  const Seir* m;
  State field(const State& z, int k) const {
    const Eigen::Vector3d f = m->field(z.head<3>(), k);
    return {f(0), f(1), f(2), m->f_v(m->params().s_star(), z(3), k)};
  }
  bool admit(State& z, double allowance) const {
    Eigen::Vector3d head = z.head<3>();
    if (!m->admit(head, allowance)) return false;
    z.head<3>() = head;
    return clamp_small_negatives(z, allowance, 3, 4);
  }
};

} // namespace

CoupledRun couple_rma(const Rma& model, const Eigen::Vector2d& x0, const IntegratorConfig& cfg,
                      NoiseStream& rng, int checkpoints) {
  cfg.validate();
  const RmaPair sys{&model};
  CoupledRun run;
  run.model = "rma";
  run.columns = {"t", "x", "y", "x_hat"};
  OrderCheck order(cfg.dt);
  BatchMeans gap(cfg.burn_in, cfg.horizon);
  Checkpoints marks(cfg.horizon, checkpoints);
  auto lipschitz = [&](const Eigen::Vector3d& z) {
    return jacobian_norm([&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
      return sys.drift(Eigen::Vector3d(w));
    }, Eigen::VectorXd(z));
  };
  const Eigen::Vector3d z0(x0(0), x0(1), x0(0));
  sde_simulate(sys, z0, cfg, rng, [&](double t, const Eigen::Vector3d& z, int) {
    ++run.grid_points;
    order.check(z.head<1>(), z.tail<1>(), [&] { return lipschitz(z); });
    gap.observe(t, z(2) - z(0));
    if (marks.due(t)) run.rows.push_back({t, z(0), z(1), z(2)});
  });
  finish(run, order, gap);
  return run;
}

CoupledRun couple_patchy(const Patchy& model, const Eigen::VectorXd& x0,
                         const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints) {
  cfg.validate();
  const Eigen::Index n = model.n();
  if (x0.size() != n || (x0.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidArgument, "coupling", "couple_patchy",
                "x0 must be a positive vector of length n");
  const PatchyTriple sys{&model};
  IntegratorConfig run_cfg = cfg;
  run_cfg.renormalize = true;
  CoupledRun run;
  run.model = "patchy";
  run.columns = {"t", "log_s", "log_s_bar", "log_s_tilde"};
  run.direction_gap = 0.0;
  OrderCheck order(cfg.dt);
  BatchMeans varsigma(cfg.burn_in, cfg.horizon);
  RunningAverage varsigma_all;
  Checkpoints marks(cfg.horizon, checkpoints);
  auto lipschitz = [&](const Eigen::VectorXd& z) {
    return jacobian_norm([&](const Eigen::VectorXd& w) { return sys.drift(w); }, z);
  };
  Eigen::VectorXd z0(3 * n + 2);
  z0 << x0, x0, x0, 0.0, 0.0;
  const Eigen::VectorXd zT = sde_simulate(sys, z0, run_cfg, rng, [&](double t, const Eigen::VectorXd& z, int) {
    ++run.grid_points;
    const auto x = z.head(n), xb = z.segment(n, n), xt = z.segment(2 * n, n);
    const double lb = z(3 * n), lt = z(3 * n + 1);
    order.check(x * std::exp(-lb), xb, [&] { return lipschitz(z); });
    order.check(xb * std::exp(lb - lt), xt, [&] { return lipschitz(z); });
    const double s = model.varsigma(x);
    varsigma.observe(t, s);
    varsigma_all.observe(t, s);
    const double sb = xb.sum(), st = xt.sum();
    run.direction_gap = std::max(run.direction_gap, (xb / sb - xt / st).cwiseAbs().maxCoeff());
    if (marks.due(t)) run.rows.push_back({t, std::log(x.sum()), lb + std::log(sb), lt + std::log(st)});
  });
  finish(run, order, varsigma);
  const double log_sb = zT(3 * n) + std::log(zT.segment(n, n).sum());
  const double log_st = zT(3 * n + 1) + std::log(zT.segment(2 * n, n).sum());
  run.growth_identity_residual = std::abs(log_sb - log_st + varsigma_all.integral()) / cfg.horizon;
  return run;
}

CoupledRun couple_sis(const Sis& model, const Eigen::VectorXd& x0, const RateMatrix& q, int k0,
                      const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints) {
  cfg.validate();
  const Eigen::Index d = model.d();
  if (x0.size() != d || !model.contains(x0, 0.0) || !(x0.norm() > 0.0))
    throw Error(ErrorCode::InvalidArgument, "coupling", "couple_sis",
                "x0 must be a nonzero point of [0,1]^d");
  const SisTriple sys{&model};
  IntegratorConfig run_cfg = cfg;
  run_cfg.renormalize = true;
  CoupledRun run;
  run.model = "sis";
  run.columns = {"t", "log_norm_x", "log_norm_x_bar", "log_norm_y"};
  run.direction_gap = 0.0;
  OrderCheck order(cfg.dt);
  BatchMeans varsigma(cfg.burn_in, cfg.horizon);
  Checkpoints marks(cfg.horizon, checkpoints);
  Eigen::VectorXd z0(3 * d + 2);
  z0 << x0, x0, x0, 0.0, 0.0;
  int prev = k0;
  pdmp_simulate(sys, q, z0, k0, run_cfg, rng, [&](double t, const Eigen::VectorXd& z, int k) {
    ++run.grid_points;
    const auto x = z.head(d), xb = z.segment(d, d), y = z.segment(2 * d, d);
    const double lb = z(3 * d), ly = z(3 * d + 1);
    auto lipschitz = [&] {
      return jacobian_norm([&](const Eigen::VectorXd& w) { return sys.field(w, prev); }, z);
    };
    order.check(x * std::exp(-lb), xb, lipschitz);
    order.check(xb * std::exp(lb - ly), y, lipschitz);
    varsigma.observe(t, model.varsigma(x, prev), model.varsigma(x, k));
    const double nb = xb.norm(), ny = y.norm();
    run.direction_gap = std::max(run.direction_gap, (xb / nb - y / ny).cwiseAbs().maxCoeff());
    if (marks.due(t)) run.rows.push_back({t, std::log(x.norm()), lb + std::log(nb), ly + std::log(ny)});
    prev = k;
  });
  finish(run, order, varsigma);
  return run;
}

CoupledRun couple_seir(const Seir& model, const Eigen::Vector3d& z0, const RateMatrix& q, int k0,
                       const IntegratorConfig& cfg, NoiseStream& rng, int checkpoints) {
  cfg.validate();
  if (!model.contains(z0, 0.0) || !(z0(1) > 0.0))
    throw Error(ErrorCode::InvalidArgument, "coupling", "couple_seir",
                "z0 must lie in the state space with u > 0");
  const SeirPair sys{&model};
  CoupledRun run;
  run.model = "seir";
  run.columns = {"t", "s", "u", "v", "v_tilde"};
  run.min_v = std::numeric_limits<double>::infinity();
  OrderCheck order(cfg.dt);
  BatchMeans gap(cfg.burn_in, cfg.horizon);
  Checkpoints marks(cfg.horizon, checkpoints);
  const Eigen::Vector4d w0(z0(0), z0(1), z0(2), z0(2));
  int prev = k0;
  pdmp_simulate(sys, q, w0, k0, cfg, rng, [&](double t, const Eigen::Vector4d& z, int k) {
    ++run.grid_points;
    order.check(z.tail<1>(), z.segment<1>(2), [&] {
      return jacobian_norm([&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return sys.field(Eigen::Vector4d(w), prev);
      }, Eigen::VectorXd(z));
    });
    gap.observe(t, z(2) - z(3));
    if (t >= cfg.burn_in) run.min_v = std::min(run.min_v, z(2));
    if (marks.due(t)) run.rows.push_back({t, z(0), z(1), z(2), z(3)});
    prev = k;
  });
  finish(run, order, gap);
  return run;
}

CoupledRun couple(const ModelSpec& spec, const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                  NoiseStream& rng, int checkpoints) {
  if (x0.size() != spec.dimension())
    throw Error(ErrorCode::InvalidArgument, "coupling", "couple",
                "initial state has the wrong dimension");
  if (const auto* m = std::get_if<Rma>(&spec.model))
    return couple_rma(*m, x0, cfg, rng, checkpoints);
  if (const auto* m = std::get_if<Patchy>(&spec.model))
    return couple_patchy(*m, x0, cfg, rng, checkpoints);
  if (const auto* m = std::get_if<Sis>(&spec.model))
    return couple_sis(*m, x0, spec.q, spec.k0, cfg, rng, checkpoints);
  if (const auto* m = std::get_if<Seir>(&spec.model))
    return couple_seir(*m, x0, spec.q, spec.k0, cfg, rng, checkpoints);
  throw Error(ErrorCode::UnsupportedModel, "coupling", "couple",
              "no comparison coupling for model " + spec.id());
}

} // namespace critpop
