#include "critpop/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "critpop/error.hpp"
#include "critpop/thresholds.hpp"

namespace critpop {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double log_sum_exp(const Eigen::VectorXd& l) {
  const double m = l.maxCoeff();
  return m + std::log((l.array() - m).exp().sum());
}

[[noreturn]] void bad(const char* op, const std::string& msg) {
  throw Error(ErrorCode::InvalidArgument, "experiments", op, msg);
}

// Simulates the model in log coordinates for its extinction observable and
// calls emit(t, log observable, observable, companion).
template <typename Emit>
void follow_path(const ModelSpec& spec, const Eigen::VectorXd& x0, const IntegratorConfig& cfg,
                 NoiseStream& rng, Emit&& emit) {
  std::visit(
      Overloaded{
          [&](const Sirs& m) {
            if (!(x0(1) > 0.0)) bad("run", "SIRS needs i > 0 at the start");
            const auto sys = m.log_infected();
            const Eigen::Vector3d z0(x0(0), std::log(x0(1)), x0(2));
            pdmp_simulate(sys, spec.q, z0, spec.k0, cfg, rng,
                          [&](double t, const Eigen::Vector3d& z, int) {
                            emit(t, z(1), std::exp(z(1)) + z(2), z(0));
                          });
          },
          [&](const Rma& m) {
            if (!(x0(0) > 0.0) || !(x0(1) > 0.0)) bad("run", "RMA needs x, y > 0 at the start");
            const auto sys = m.log_predator();
            const Eigen::Vector2d z0(x0(0), std::log(x0(1)));
            sde_simulate(sys, z0, cfg, rng, [&](double t, const Eigen::Vector2d& z, int) {
              emit(t, z(1), std::exp(z(1)), z(0));
            });
          },
          [&](const Patchy& m) {
            if ((x0.array() <= 0.0).any()) bad("run", "patchy needs every x_i > 0 at the start");
            const auto sys = m.log_x();
            const Eigen::VectorXd l0 = x0.array().log().matrix();
            sde_simulate(sys, l0, cfg, rng, [&](double t, const Eigen::VectorXd& l, int) {
              const double ls = log_sum_exp(l);
              emit(t, ls, std::exp(ls), kNaN);
            });
          },
          [&](const Sis& m) {
            const double rho = x0.norm();
            if (!(rho > 0.0)) bad("run", "SIS needs x != 0 at the start");
            const auto sys = m.log_polar();
            Eigen::VectorXd z0(x0.size() + 1);
            z0 << std::log(rho), x0 / rho;
            pdmp_simulate(sys, spec.q, z0, spec.k0, cfg, rng,
                          [&](double t, const Eigen::VectorXd& z, int) {
                            emit(t, z(0), std::exp(z(0)), kNaN);
                          });
          },
          [&](const Seir& m) {
            if (!(x0(1) > 0.0)) bad("run", "SEIR needs u > 0 at the start");
            const auto sys = m.log_u();
            const Eigen::Vector3d z0(x0(0), std::log(x0(1)), x0(2));
            pdmp_simulate(sys, spec.q, z0, spec.k0, cfg, rng,
                          [&](double t, const Eigen::Vector3d& z, int) {
                            emit(t, z(1), std::exp(z(1)), z(0));
                          });
          },
      },
      spec.model);
}

bool strictly_decreasing(const std::array<double, 3>& a) { return a[0] > a[1] && a[1] > a[2]; }

bool seed_passes(const ExperimentReport& r, const SeedRecord& s) {
  const VerdictRules& v = r.rules;
  switch (r.kind) {
  case ExperimentKind::Subcritical: {
    const double se = std::hypot(r.threshold.standard_error, s.growth_se);
    return s.growth <= r.threshold.value + v.growth_slack * se;
  }
  case ExperimentKind::Critical:
    return strictly_decreasing(s.average) && s.average[2] < v.ceiling;
  case ExperimentKind::Persistent:
    return std::abs(s.average[2] - s.average[1]) <= v.stability * s.average[2] &&
           s.average[2] > v.floor;
  }
  return false;
}

void certify(ExperimentKind kind, const ThresholdEstimate& th) {
  const double bound = 3.0 * th.standard_error;
  const char* op = kind == ExperimentKind::Subcritical  ? "run_subcritical"
                   : kind == ExperimentKind::Critical   ? "run_critical"
                                                        : "run_persistent";
  if (!std::isfinite(th.value)) bad(op, "threshold estimate is not finite");
  std::ostringstream msg;
  msg << "threshold " << th.value << " +- " << th.standard_error;
  if (kind == ExperimentKind::Subcritical && !(th.value < -bound && th.value < 0.0))
    bad(op, msg.str() + " is not certified negative");
  if (kind == ExperimentKind::Persistent && !(th.value > bound && th.value > 0.0))
    bad(op, msg.str() + " is not certified positive");
}

} // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
  case ExperimentKind::Subcritical: return "subcritical";
  case ExperimentKind::Critical: return "critical";
  case ExperimentKind::Persistent: return "persistent";
  }
  return "?";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
  case Verdict::Pass: return "PASS";
  case Verdict::Fail: return "FAIL";
  case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::string_view to_string(Regime regime) {
  switch (regime) {
  case Regime::Subcritical: return "subcritical";
  case Regime::Critical: return "critical";
  case Regime::Persistent: return "persistent";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Subcritical, ExperimentKind::Critical, ExperimentKind::Persistent})
    if (to_string(k) == name) return k;
  bad("experiment_kind_from_string", "unknown experiment kind '" + std::string(name) + "'");
}

ObservablePlan observable_plan(const ModelSpec& spec) {
  return std::visit(Overloaded{
                        [](const Sirs& m) {
                          return ObservablePlan{"i_plus_r", "s", m.params().s_star()};
                        },
                        [](const Rma& m) {
                          return ObservablePlan{"y", "x", std::max(0.0, m.params().boundary_mean())};
                        },
                        [](const Patchy&) { return ObservablePlan{"s", "", kNaN}; },
                        [](const Sis&) { return ObservablePlan{"norm_x", "", kNaN}; },
                        [](const Seir& m) {
                          return ObservablePlan{"u", "s", m.params().s_star()};
                        },
                    },
                    spec.model);
}

Eigen::VectorXd default_initial_state(const ModelSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Sirs& m) -> Eigen::VectorXd {
            const double n = m.params().s_star();
            return Eigen::Vector3d(0.5 * n, 0.25 * n, 0.0);
          },
          [](const Rma& m) -> Eigen::VectorXd { return Eigen::Vector2d(m.params().K / 2.0, 1.0); },
          [](const Patchy& m) -> Eigen::VectorXd {
            return Eigen::VectorXd::Constant(m.n(), 1.0 / static_cast<double>(m.n()));
          },
          [](const Sis& m) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(m.d(), 0.5); },
          [](const Seir& m) -> Eigen::VectorXd {
            return Eigen::Vector3d(0.5 * m.params().s_star(), 0.25 * m.params().s_star(), 0.5);
          },
      },
      spec.model);
}

SeedRecord run_seed(const ModelSpec& spec, const ExperimentSettings& settings, std::uint64_t seed,
                    bool with_interior_h) {
  IntegratorConfig cfg = settings.cfg;
  cfg.validate();
  cfg.renormalize = true;
  const Eigen::VectorXd x0 = settings.x0.size() ? settings.x0 : default_initial_state(spec);
  if (x0.size() != spec.dimension()) bad("run_seed", "initial state has the wrong dimension");

  SeedRecord rec;
  rec.seed = seed;
  const double T = cfg.horizon;
  const std::array<double, 3> marks{T / 4.0, T / 2.0, T};
  const double eps = 1e-9 * T;
  std::size_t next_mark = 0;
  const int n_series = std::max(1, settings.checkpoints);
  const double series_step = T / n_series;
  double next_series = 0.0;

  RunningAverage obs, comp;
  LogGrowth growth(cfg.burn_in, T, settings.batches);
  NoiseStream rng(seed);
  NoiseStream path_rng = rng.split(0x70617468);
  follow_path(spec, x0, cfg, path_rng, [&](double t, double log_e, double e, double c) {
    obs.observe(t, e);
    if (!std::isnan(c)) comp.observe(t, c);
    growth.observe(t, log_e);
    if (t == 0.0) return;
    const double a = obs.average();
    const double ca = std::isnan(c) ? kNaN : comp.average();
    while (next_mark < marks.size() && t >= marks[next_mark] - eps) {
      rec.average[next_mark] = a;
      rec.companion[next_mark] = ca;
      ++next_mark;
    }
    if (t >= next_series - eps) {
      rec.series.push_back({t, a, ca});
      while (next_series <= t + eps) next_series += series_step;
    }
  });
  const GrowthRateEstimate g = growth.estimate();
  rec.growth = g.rate;
  rec.growth_se = g.standard_error;
  if (with_interior_h) {
    NoiseStream h_rng = rng.split(0x68617667);
    const ThresholdEstimate h = interior_h_average(spec, settings.cfg, h_rng, x0, settings.batches);
    rec.interior_h = h.value;
    rec.interior_h_se = h.standard_error;
  }
  return rec;
}

VerdictResult evaluate_verdict(const ExperimentReport& r) {
  VerdictResult out;
  if (r.seeds.empty()) {
    out.reason = "no seeds";
    return out;
  }
  std::size_t passing = 0;
  for (const auto& s : r.seeds) passing += seed_passes(r, s) ? 1 : 0;
  out.passing_fraction = static_cast<double>(passing) / static_cast<double>(r.seeds.size());
  std::ostringstream why;
  why << passing << "/" << r.seeds.size() << " seeds pass the " << to_string(r.kind) << " test";
  bool ok = out.passing_fraction >= r.rules.seed_fraction;

  if (r.kind == ExperimentKind::Critical && !r.plan.companion.empty()) {
    double sum = 0.0;
    for (const auto& s : r.seeds) sum += s.companion[2];
    const double mean = sum / static_cast<double>(r.seeds.size());
    const double target = r.plan.companion_target;
    const double dev = target != 0.0 ? std::abs(mean - target) / std::abs(target)
                                     : std::abs(mean);
    const bool comp_ok = dev <= r.rules.companion_tolerance;
    why << "; " << r.plan.companion << "-average " << mean << " vs " << target
        << (comp_ok ? " (within " : " (outside ") << r.rules.companion_tolerance << ")";
    ok = ok && comp_ok;
  }
  if (ok) {
    out.verdict = Verdict::Pass;
  } else if (r.kind == ExperimentKind::Critical &&
             3.0 * r.threshold.standard_error >= r.rules.critical_band) {
    out.verdict = Verdict::Inconclusive;
    why << "; threshold SE " << r.threshold.standard_error << " overlaps the critical band";
  } else {
    out.verdict = Verdict::Fail;
  }
  out.reason = why.str();
  return out;
}

ExperimentReport run_experiment(ExperimentKind kind, const ModelSpec& spec,
                                const ThresholdEstimate& threshold,
                                const ExperimentSettings& settings) {
  certify(kind, threshold);
  if (settings.seeds.empty()) bad("run_experiment", "no seeds given");
  ExperimentReport report;
  report.kind = kind;
  report.model = spec.id();
  report.plan = observable_plan(spec);
  report.horizon = settings.cfg.horizon;
  report.threshold = threshold;
  report.rules = settings.rules;
  report.seeds.resize(settings.seeds.size());

  const bool with_h = kind == ExperimentKind::Persistent;
  const std::size_t n = settings.seeds.size();
  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, settings.jobs)), 1, n);
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < n; i += jobs)
        report.seeds[i] = run_seed(spec, settings, settings.seeds[i], with_h);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const VerdictResult v = evaluate_verdict(report);
  report.verdict = v.verdict;
  report.reason = v.reason;
  report.passing_fraction = v.passing_fraction;
  return report;
}

ExperimentReport run_subcritical(const ModelSpec& spec, const ThresholdEstimate& threshold,
                                 const ExperimentSettings& settings) {
  return run_experiment(ExperimentKind::Subcritical, spec, threshold, settings);
}
ExperimentReport run_critical(const ModelSpec& spec, const ThresholdEstimate& threshold,
                              const ExperimentSettings& settings) {
  return run_experiment(ExperimentKind::Critical, spec, threshold, settings);
}
ExperimentReport run_persistent(const ModelSpec& spec, const ThresholdEstimate& threshold,
                                const ExperimentSettings& settings) {
  return run_experiment(ExperimentKind::Persistent, spec, threshold, settings);
}

ExperimentReport merge(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.kind != b.kind || a.model != b.model || a.horizon != b.horizon)
    bad("merge", "reports differ in kind, model or horizon");
  ExperimentReport out = a;
  out.seeds.insert(out.seeds.end(), b.seeds.begin(), b.seeds.end());
  const VerdictResult v = evaluate_verdict(out);
  out.verdict = v.verdict;
  out.reason = v.reason;
  out.passing_fraction = v.passing_fraction;
  return out;
}

Regime classify_regime(const ThresholdEstimate& threshold, double band) {
  const double edge = std::max(band, 3.0 * threshold.standard_error);
  if (threshold.value < -edge) return Regime::Subcritical;
  if (threshold.value > edge) return Regime::Persistent;
  return Regime::Critical;
}

} // namespace critpop
