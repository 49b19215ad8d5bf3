#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>

#include <Eigen/Core>

#include "critpop/error.hpp"
#include "critpop/noise.hpp"
#include "critpop/switching.hpp"

namespace critpop {

struct IntegratorConfig {
  double dt = 1e-3;
  double burn_in = 0.0;
  double horizon = 1.0;
  // project simplex / sphere blocks back onto their manifold after each step
  bool renormalize = true;

  // dt > 0, dt <= horizon / 100, 0 <= burn_in < horizon
  void validate() const;
};

inline void IntegratorConfig::validate() const {
  auto fail = [](const std::string& msg) {
    return Error(ErrorCode::InvalidArgument, "engines", "IntegratorConfig", msg);
  };
  if (!(dt > 0.0)) throw fail("dt must be > 0");
  if (!(horizon > burn_in)) throw fail("horizon must exceed burn_in");
  if (!(burn_in >= 0.0)) throw fail("burn_in must be >= 0");
  if (dt > horizon / 100.0) throw fail("dt must be <= horizon/100");
}

// Drift vector and diffusion matrix (state_dim x noise_dim) at one point;
// noise enters as diffusion * dW.
struct DriftDiffusion {
  Eigen::VectorXd drift;
  Eigen::MatrixXd diffusion;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* op) {
  if (!x.allFinite())
    throw Error(ErrorCode::NonFiniteState, "engines", op, "state has a NaN or infinite coordinate");
}

// Classical fourth-order Runge-Kutta step for dx/dt = field(x).
template <typename Field, typename Derived>
typename Derived::PlainObject rk4_step(Field&& field, const Eigen::MatrixBase<Derived>& x,
                                       typename Derived::Scalar h) {
  using Plain = typename Derived::PlainObject;
  const Plain x0 = x;
  const Plain k1 = field(x0);
  const Plain k2 = field(Plain(x0 + (h / 2) * k1));
  const Plain k3 = field(Plain(x0 + (h / 2) * k2));
  const Plain k4 = field(Plain(x0 + h * k3));
  Plain out = x0 + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  require_finite(out, "rk4_step");
  return out;
}

// Euler-Maruyama update x + drift(x) h + diffusion(x, dW).
template <typename Drift, typename Diffusion, typename Derived, typename NoiseDerived>
typename Derived::PlainObject em_step(Drift&& drift, Diffusion&& diffusion,
                                      const Eigen::MatrixBase<Derived>& x,
                                      typename Derived::Scalar h,
                                      const Eigen::MatrixBase<NoiseDerived>& dw) {
  using Plain = typename Derived::PlainObject;
  const Plain x0 = x;
  Plain out = x0 + h * drift(x0) + diffusion(x0, dw);
  require_finite(out, "em_step");
  return out;
}

// Sets coordinates in [-allowance, 0) to zero; false if any coordinate is
// more negative than that.
template <typename Derived>
bool clamp_small_negatives(Eigen::MatrixBase<Derived>& x, double allowance, Eigen::Index begin = 0,
                           Eigen::Index end = -1) {
  if (end < 0) end = x.size();
  for (Eigen::Index i = begin; i < end; ++i) {
    if (x(i) < 0.0) {
      if (-x(i) > allowance) return false;
      x(i) = 0.0;
    }
  }
  return true;
}

template <typename S>
concept PdmpSystem = requires(const S& s, const typename S::State& x, int k) {
  { s.field(x, k) } -> std::convertible_to<typename S::State>;
};

template <typename S>
concept SdeSystem = requires(const S& s, const typename S::State& x, const typename S::Noise& dw) {
  { s.drift(x) } -> std::convertible_to<typename S::State>;
  { s.diffuse(x, dw) } -> std::convertible_to<typename S::State>;
  { s.noise_dim() } -> std::convertible_to<Eigen::Index>;
};

template <typename S>
concept HasAdmit = requires(const S& s, typename S::State& x, double a) {
  { s.admit(x, a) } -> std::convertible_to<bool>;
};

template <typename S>
concept HasProject = requires(const S& s, typename S::State& x) { s.project(x); };

namespace detail {

template <typename System>
void post_step(const System& sys, typename System::State& x, double allowance, bool renormalize,
               const char* op) {
  if constexpr (HasAdmit<System>) {
    if (!sys.admit(x, allowance))
      throw Error(ErrorCode::StateLeftDomain, "engines", op,
                  "state left the model's domain beyond the discretization allowance");
  }
  if constexpr (HasProject<System>) {
    if (renormalize) sys.project(x);
  }
}

// Successive stopping times: the dt grid, burn_in and horizon.
class StepClock {
public:
  explicit StepClock(const IntegratorConfig& cfg) : cfg_(cfg) {}
  double next_stop(double t) const {
    double stop = std::min(static_cast<double>(k_) * cfg_.dt, cfg_.horizon);
    if (cfg_.burn_in > t && cfg_.burn_in < stop) stop = cfg_.burn_in;
    return stop;
  }
  void reached(double t) {
    while (static_cast<double>(k_) * cfg_.dt <= t) ++k_;
  }
  bool done(double t) const { return t >= cfg_.horizon; }

private:
  const IntegratorConfig& cfg_;
  long long k_ = 1;
};

} // namespace detail

template <typename State>
struct PdmpResult {
  State x;
  int env = 0;
  double t = 0.0;
  std::size_t jumps = 0;
};

// Piecewise deterministic simulation: exact chain jumps, RK4 between them
// with steps <= dt landing exactly on every jump time, on burn_in and on the
// horizon. observer(t, x, env) is called at t = 0 and after every step; env is
// the environment in force from t onwards.
template <PdmpSystem System, typename Observer>
PdmpResult<typename System::State> pdmp_simulate(const System& sys, const RateMatrix& q,
                                                 const typename System::State& x0, int k0,
                                                 const IntegratorConfig& cfg, NoiseStream& rng,
                                                 Observer&& observer) {
  cfg.validate();
  using State = typename System::State;
  ChainSampler chain(q, k0, rng);
  detail::StepClock clock(cfg);
  State x = x0;
  require_finite(x, "pdmp_simulate");
  {
    State probe = x;
    detail::post_step(sys, probe, 1e-9, false, "pdmp_simulate");
  }
  double t = 0.0;
  std::size_t jumps = 0;
  observer(t, static_cast<const State&>(x), chain.state());
  while (!clock.done(t)) {
    double stop = clock.next_stop(t);
    bool jump = false;
    if (chain.next_jump_time() <= stop) {
      stop = chain.next_jump_time();
      jump = true;
    }
    const double h = stop - t;
    if (h > 0.0) {
      const int k = chain.state();
      const State prev = x;
      x = rk4_step([&](const State& y) -> State { return sys.field(y, k); }, prev, h);
      detail::post_step(sys, x, 1e-9, cfg.renormalize, "pdmp_simulate");
    }
    t = stop;
    clock.reached(t);
    if (jump) {
      chain.jump();
      ++jumps;
    }
    if (h > 0.0 || jump) observer(t, static_cast<const State&>(x), chain.state());
  }
  return {x, chain.state(), t, jumps};
}

// Euler-Maruyama on the dt grid, shortened to land on burn_in and horizon.
template <SdeSystem System, typename Observer>
typename System::State sde_simulate(const System& sys, const typename System::State& x0,
                                    const IntegratorConfig& cfg, NoiseStream& rng,
                                    Observer&& observer) {
  cfg.validate();
  using State = typename System::State;
  using Noise = typename System::Noise;
  detail::StepClock clock(cfg);
  State x = x0;
  require_finite(x, "sde_simulate");
  Noise dw(sys.noise_dim());
  double t = 0.0;
  observer(t, static_cast<const State&>(x), 0);
  while (!clock.done(t)) {
    const double stop = clock.next_stop(t);
    const double h = stop - t;
    rng.fill_increment(dw, h);
    const State drift = sys.drift(x);
    State next = x + h * drift + sys.diffuse(x, dw);
    require_finite(next, "sde_simulate");
    const double allowance = 10.0 * h * std::max(1.0, drift.cwiseAbs().maxCoeff());
    detail::post_step(sys, next, allowance, cfg.renormalize, "sde_simulate");
    x = next;
    t = stop;
    clock.reached(t);
    observer(t, static_cast<const State&>(x), 0);
  }
  return x;
}

} // namespace critpop
