#include "critpop/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "critpop/averages.hpp"

namespace critpop {

namespace {

template <typename... F>
struct Overloaded : F... {
  using F::operator()...;
};

ThresholdEstimate from_batches(const BatchMeans& acc, ThresholdMethod method,
                               const IntegratorConfig& cfg, double sign = 1.0) {
  return {sign * acc.mean(), acc.standard_error(), method, cfg.horizon, cfg.dt};
}

// y' = M_k y with the norm folded into log rho after every step:
// state (log rho, y / |y|).
struct LinearFlow {
  using State = Eigen::VectorXd;
  std::vector<Eigen::MatrixXd> mats;
  State field(const State& z, int k) const {
    State out(z.size());
    out(0) = 0.0;
    out.tail(z.size() - 1) = mats[static_cast<std::size_t>(k)] * z.tail(z.size() - 1);
    return out;
  }
  void project(State& z) const {
    const double n = z.tail(z.size() - 1).norm();
    z(0) += std::log(n);
    z.tail(z.size() - 1) /= n;
  }
};

ThresholdEstimate linear_flow_growth(std::vector<Eigen::MatrixXd> mats, const ModelSpec& spec,
                                     IntegratorConfig cfg, NoiseStream& rng, int batches) {
  cfg.renormalize = true;
  const Eigen::Index n = mats.front().rows();
  const LinearFlow flow{std::move(mats)};
  Eigen::VectorXd z(n + 1);
  z(0) = 0.0;
  z.tail(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  LogGrowth acc(cfg.burn_in, cfg.horizon, batches);
  pdmp_simulate(flow, spec.q, z, spec.k0, cfg, rng,
                [&](double t, const Eigen::VectorXd& s, int) { acc.observe(t, s(0)); });
  const GrowthRateEstimate g = acc.estimate();
  return {g.rate, g.standard_error, ThresholdMethod::LogGrowth, cfg.horizon, cfg.dt};
}

} // namespace

ThresholdEstimate boundary_average_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                             NoiseStream& rng, int batches) {
  constexpr auto method = ThresholdMethod::BoundaryAverage;
  return std::visit(
      Overloaded{
          [&](const Sirs& m) {
            const auto b = m.boundary();
            const Eigen::Vector2d x0(m.params().s_star(), 0.0);
            const auto acc = pdmp_time_average(
                b, spec.q, x0, spec.k0, cfg, rng,
                [&](const Eigen::Vector2d& x, int k) { return b.h(x, k); }, batches);
            return from_batches(acc, method, cfg, -1.0);
          },
          [&](const Rma& m) {
            const auto b = m.boundary();
            const Eigen::Matrix<double, 1, 1> x0(m.params().K);
            const double alpha = m.params().alpha;
            const auto acc = sde_time_average(
                b, x0, cfg, rng,
                [&](const Eigen::Matrix<double, 1, 1>& x) { return x(0) / (1.0 + x(0)) - alpha; },
                batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Patchy& m) {
            const auto b = m.boundary();
            const Eigen::VectorXd y0 =
                Eigen::VectorXd::Constant(m.n(), 1.0 / static_cast<double>(m.n()));
            const auto acc = sde_time_average(
                b, y0, cfg, rng, [&](const Eigen::VectorXd& y) { return m.boundary_rate(y); },
                batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Sis& m) {
            const auto b = m.boundary();
            const Eigen::VectorXd th0 =
                Eigen::VectorXd::Constant(m.d(), 1.0 / std::sqrt(static_cast<double>(m.d())));
            const auto acc = pdmp_time_average(
                b, spec.q, th0, spec.k0, cfg, rng,
                [&](const Eigen::VectorXd& th, int k) { return b.h(th, k); }, batches);
            return from_batches(acc, method, cfg, -1.0);
          },
          [&](const Seir& m) {
            const auto b = m.boundary();
            const Eigen::Matrix<double, 1, 1> v0(0.5);
            const auto acc = pdmp_time_average(
                b, spec.q, v0, spec.k0, cfg, rng,
                [&](const Eigen::Matrix<double, 1, 1>& v, int k) { return m.h_tilde(v(0), k); },
                batches);
            return from_batches(acc, method, cfg, -1.0);
          }},
      spec.model);
}

ThresholdEstimate growth_rate_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                        NoiseStream& rng, int batches) {
  return std::visit(
      Overloaded{
          [&](const Patchy& m) {
            IntegratorConfig c = cfg;
            c.renormalize = true;
            Eigen::VectorXd z(m.n() + 1);
            z(0) = 0.0;
            z.tail(m.n()).setConstant(1.0 / static_cast<double>(m.n()));
            LogGrowth acc(c.burn_in, c.horizon, batches);
            sde_simulate(m.linear_log(), z, c, rng,
                         [&](double t, const Eigen::VectorXd& s, int) { acc.observe(t, s(0)); });
            const GrowthRateEstimate g = acc.estimate();
            return ThresholdEstimate{g.rate, g.standard_error, ThresholdMethod::LogGrowth,
                                     c.horizon, c.dt};
          },
          [&](const Sis& m) {
            std::vector<Eigen::MatrixXd> mats;
            for (int k = 0; k < m.environments(); ++k) mats.push_back(m.A(k));
            return linear_flow_growth(std::move(mats), spec, cfg, rng, batches);
          },
          [&](const Seir& m) {
            std::vector<Eigen::MatrixXd> mats;
            for (int k = 0; k < m.environments(); ++k) mats.emplace_back(m.params().B(k));
            return linear_flow_growth(std::move(mats), spec, cfg, rng, batches);
          },
          [&](const auto&) -> ThresholdEstimate {
            throw Error(ErrorCode::UnsupportedModel, "thresholds", "growth_rate_threshold",
                        "no linearization at the extinction set for model " + spec.id());
          }},
      spec.model);
}

ThresholdEstimate interior_h_average(const ModelSpec& spec, const IntegratorConfig& cfg,
                                     NoiseStream& rng, const Eigen::VectorXd& x0, int batches) {
  constexpr auto method = ThresholdMethod::InteriorAverage;
  if (x0.size() != spec.dimension())
    throw Error(ErrorCode::InvalidArgument, "thresholds", "interior_h_average",
                "initial state has the wrong dimension");
  return std::visit(
      Overloaded{
          [&](const Sirs& m) {
            const auto acc = pdmp_time_average(
                m, spec.q, Eigen::Vector3d(x0), spec.k0, cfg, rng,
                [&](const Eigen::Vector3d& x, int k) { return m.h(x, k); }, batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Rma& m) {
            const auto acc = sde_time_average(
                m, Eigen::Vector2d(x0), cfg, rng, [&](const Eigen::Vector2d& z) { return m.h(z); },
                batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Patchy& m) {
            const auto acc = sde_time_average(
                m, x0, cfg, rng,
                [&](const Eigen::VectorXd& x) {
                  const double s = x.sum();
                  return m.h(s, x / s);
                },
                batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Sis& m) {
            const auto acc = pdmp_time_average(
                m, spec.q, x0, spec.k0, cfg, rng,
                [&](const Eigen::VectorXd& x, int k) {
                  const double rho = x.norm();
                  return m.h(rho, x / rho, k);
                },
                batches);
            return from_batches(acc, method, cfg);
          },
          [&](const Seir& m) {
            const auto acc = pdmp_time_average(
                m, spec.q, Eigen::Vector3d(x0), spec.k0, cfg, rng,
                [&](const Eigen::Vector3d& z, int k) { return m.h(z, k); }, batches);
            return from_batches(acc, method, cfg);
          }},
      spec.model);
}

ThresholdEstimate estimate_threshold(const ModelSpec& spec, const IntegratorConfig& cfg,
                                     NoiseStream& rng, std::optional<ThresholdMethod> method,
                                     int batches) {
  if (!method) {
    if (auto exact = closed_form_threshold(spec)) return *exact;
    method = ThresholdMethod::BoundaryAverage;
  }
  switch (*method) {
  case ThresholdMethod::ClosedForm:
    if (auto exact = closed_form_threshold(spec)) return *exact;
    throw Error(ErrorCode::UnsupportedModel, "thresholds", "estimate_threshold",
                "no closed form for this " + spec.id() + " configuration");
  case ThresholdMethod::BoundaryAverage: return boundary_average_threshold(spec, cfg, rng, batches);
  case ThresholdMethod::LogGrowth: return growth_rate_threshold(spec, cfg, rng, batches);
  case ThresholdMethod::InteriorAverage: break;
  }
  throw Error(ErrorCode::InvalidArgument, "thresholds", "estimate_threshold",
              "the interior average is not a threshold estimator");
}

namespace {

struct ParamName {
  std::string field;
  int index = -1; // -1: every environment / patch
};

ParamName split_name(const std::string& name) {
  const auto dot = name.find('.');
  if (dot == std::string::npos) return {name, -1};
  try {
    return {name.substr(0, dot), std::stoi(name.substr(dot + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "thresholds", "set_parameter",
                "malformed parameter name '" + name + "'");
  }
}

template <typename Seq, typename Set>
void set_indexed(Seq& seq, int index, const std::string& name, Set&& set) {
  if (index >= static_cast<int>(seq.size()))
    throw Error(ErrorCode::InvalidArgument, "thresholds", "set_parameter",
                "index out of range in '" + name + "'");
  for (int i = 0; i < static_cast<int>(seq.size()); ++i)
    if (index < 0 || index == i) set(seq[static_cast<std::size_t>(i)]);
}

[[noreturn]] void unknown(const std::string& model, const std::string& name) {
  throw Error(ErrorCode::InvalidArgument, "thresholds", "set_parameter",
              "model " + model + " has no tunable parameter '" + name + "'");
}

} // namespace

void set_parameter(ModelSpec& spec, const std::string& name, double value) {
  const ParamName pn = split_name(name);
  const std::string id = spec.id();
  std::visit(
      Overloaded{
          [&](Sirs& m) {
            SirsParams p = m.params();
            if (pn.field == "inflow") p.inflow = value;
            else if (pn.field == "mortality") p.mortality = value;
            else {
              set_indexed(p.envs, pn.index, name, [&](SirsEnvironment& e) {
                if (pn.field == "beta") e.beta = value;
                else if (pn.field == "alpha") e.alpha = value;
                else if (pn.field == "delta") e.delta = value;
                else if (pn.field == "immunity_loss") e.immunity_loss = value;
                else if (pn.field == "saturation") e.incidence.saturation = value;
                else unknown(id, name);
              });
            }
            m = Sirs(std::move(p));
          },
          [&](Rma& m) {
            RmaParams p = m.params();
            if (pn.field == "K") p.K = value;
            else if (pn.field == "alpha") p.alpha = value;
            else if (pn.field == "epsilon") p.epsilon = value;
            else unknown(id, name);
            m = Rma(p);
          },
          [&](Patchy& m) {
            PatchyParams p = m.params();
            std::vector<double> a(p.a.begin(), p.a.end()), c(p.c.begin(), p.c.end());
            if (pn.field == "a") set_indexed(a, pn.index, name, [&](double& v) { v = value; });
            else if (pn.field == "c") set_indexed(c, pn.index, name, [&](double& v) { v = value; });
            else if (pn.field == "sigma" && p.n() == 1) p.Gamma(0, 0) = value;
            else unknown(id, name);
            p.a = Eigen::Map<Eigen::VectorXd>(a.data(), p.n());
            p.c = Eigen::Map<Eigen::VectorXd>(c.data(), p.n());
            m = Patchy(std::move(p));
          },
          [&](Sis& m) {
            SisParams p = m.params();
            set_indexed(p.envs, pn.index, name, [&](SisEnvironment& e) {
              if (pn.field == "D") e.D.setConstant(value);
              else if (pn.field == "contact") e.C *= value / e.C.maxCoeff();
              else unknown(id, name);
            });
            m = Sis(std::move(p));
          },
          [&](Seir& m) {
            SeirParams p = m.params();
            if (pn.field == "inflow") p.inflow = value;
            else if (pn.field == "gamma") p.gamma = value;
            else {
              set_indexed(p.envs, pn.index, name, [&](SeirEnvironment& e) {
                if (pn.field == "beta") e.beta = value;
                else if (pn.field == "gamma1") e.gamma1 = value;
                else if (pn.field == "delta") e.delta = value;
                else unknown(id, name);
              });
            }
            m = Seir(std::move(p));
          }},
      spec.model);
}

CriticalTuning tune_to_critical(const ThresholdEvaluator& evaluate, const std::string& parameter,
                                double lo, double hi, double tolerance, double horizon,
                                double max_horizon, int max_evaluations) {
  constexpr const char* op = "tune_to_critical";
  if (!(lo < hi))
    throw Error(ErrorCode::InvalidArgument, "thresholds", op, "bracket must satisfy lo < hi");
  CriticalTuning out;
  out.parameter = parameter;
  out.lo = lo;
  out.hi = hi;

  auto budget_check = [&] {
    if (out.evaluations >= max_evaluations)
      throw Error(ErrorCode::BudgetExhausted, "thresholds", op,
                  "no critical point within " + std::to_string(max_evaluations) +
                      " evaluations (bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "])");
  };
  auto eval = [&](double p) {
    double h = horizon;
    budget_check();
    ThresholdEstimate est = evaluate(p, h);
    ++out.evaluations;
    while (est.standard_error > 0.0 && est.standard_error >= std::abs(est.value) / 3.0 &&
           2.0 * h <= max_horizon) {
      h *= 2.0;
      budget_check();
      est = evaluate(p, h);
      ++out.evaluations;
    }
    return est;
  };
  auto certain = [](const ThresholdEstimate& e) {
    return std::abs(e.value) > 3.0 * e.standard_error && e.value != 0.0;
  };

  ThresholdEstimate f_lo = eval(lo), f_hi = eval(hi);
  if (!certain(f_lo) || !certain(f_hi) || (f_lo.value > 0.0) == (f_hi.value > 0.0))
    throw Error(ErrorCode::NoSignChange, "thresholds", op,
                "threshold at " + parameter + "=" + std::to_string(lo) + " is " +
                    std::to_string(f_lo.value) + " +- " + std::to_string(f_lo.standard_error) +
                    " and at " + std::to_string(hi) + " is " + std::to_string(f_hi.value) +
                    " +- " + std::to_string(f_hi.standard_error) +
                    "; need opposite signs beyond 3 SE");

  const double width0 = hi - lo;
  double a = lo, b = hi;
  for (;;) {
    const double mid = 0.5 * (a + b);
    const ThresholdEstimate f = eval(mid);
    if (std::abs(f.value) <= std::max(tolerance, 3.0 * f.standard_error)) {
      out.value = mid;
      out.residual = f;
      return out;
    }
    if ((f.value > 0.0) == (f_lo.value > 0.0)) {
      a = mid;
      f_lo = f;
    } else {
      b = mid;
      f_hi = f;
    }
    if (b - a < 1e-6 * width0) {
      // the root of the secant through the final bracket
      const double root = a - f_lo.value * (b - a) / (f_hi.value - f_lo.value);
      out.value = std::clamp(root, a, b);
      out.residual = eval(out.value);
      return out;
    }
  }
}

CriticalTuning tune_to_critical(const ModelSpec& spec, const std::string& parameter, double lo,
                                double hi, const IntegratorConfig& cfg, NoiseStream& rng,
                                const TuningOptions& options) {
  cfg.validate();
  const NoiseStream base = rng.split(0x7475'6e65);
  const double burn_fraction = cfg.burn_in / cfg.horizon;
  auto evaluate = [&](double value, double horizon) {
    ModelSpec s = spec;
    set_parameter(s, parameter, value);
    IntegratorConfig c = cfg;
    c.horizon = horizon;
    c.burn_in = burn_fraction * horizon;
    NoiseStream stream = base; // common random numbers across evaluations
    return estimate_threshold(s, c, stream, options.method, options.batches);
  };
  const double cap = options.max_horizon > 0.0 ? options.max_horizon : 16.0 * cfg.horizon;
  return tune_to_critical(evaluate, parameter, lo, hi, options.tolerance, cfg.horizon, cap,
                          options.max_evaluations);
}

} // namespace critpop
