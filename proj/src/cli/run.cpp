#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "critpop/cli.hpp"
#include "critpop/coupling.hpp"
#include "critpop/error.hpp"
#include "critpop/switching.hpp"
#include "critpop/thresholds.hpp"

namespace critpop::cli {

using nlohmann::json;

std::string format_csv(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
  std::string out = "t";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", row[i]);
      if (i) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cli", "write", "cannot open " + tmp.string());
    out << content;
    if (!out.flush()) throw Error(ErrorCode::IoError, "cli", "write", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec)
    throw Error(ErrorCode::IoError, "cli", "write",
                "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

double num_or_nan(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

std::array<double, 3> triple(const json& j) {
  return {num_or_nan(j.at(0)), num_or_nan(j.at(1)), num_or_nan(j.at(2))};
}

ThresholdMethod method_named(const std::string& s) {
  for (auto m : {ThresholdMethod::ClosedForm, ThresholdMethod::BoundaryAverage,
                 ThresholdMethod::LogGrowth, ThresholdMethod::InteriorAverage})
    if (to_string(m) == s) return m;
  throw Error(ErrorCode::SchemaError, "cli", "report_from_json", "unknown method " + s);
}

} // namespace

json report_to_json(const ExperimentReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds)
    seeds.push_back({{"seed", s.seed},
                     {"average", s.average},
                     {"companion", s.companion},
                     {"growth", s.growth},
                     {"growth_se", s.growth_se},
                     {"interior_h", s.interior_h},
                     {"interior_h_se", s.interior_h_se}});
  const VerdictRules& v = r.rules;
  return {{"kind", to_string(r.kind)},
          {"model", r.model},
          {"horizon", r.horizon},
          {"threshold",
           {{"value", r.threshold.value},
            {"standard_error", r.threshold.standard_error},
            {"method", to_string(r.threshold.method)},
            {"horizon", r.threshold.horizon},
            {"dt", r.threshold.dt}}},
          {"observable", r.plan.observable},
          {"companion", r.plan.companion.empty() ? json(nullptr) : json(r.plan.companion)},
          {"companion_target", r.plan.companion_target},
          {"rules",
           {{"seed_fraction", v.seed_fraction},
            {"ceiling", std::isfinite(v.ceiling) ? json(v.ceiling) : json(nullptr)},
            {"companion_tolerance", v.companion_tolerance},
            {"stability", v.stability},
            {"floor", v.floor},
            {"growth_slack", v.growth_slack},
            {"critical_band", v.critical_band}}},
          {"verdict", to_string(r.verdict)},
          {"reason", r.reason},
          {"passing_fraction", r.passing_fraction},
          {"seeds", seeds}};
}

ExperimentReport report_from_json(const json& j) {
  try {
    ExperimentReport r;
    r.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
    r.model = j.at("model").get<std::string>();
    r.horizon = j.at("horizon").get<double>();
    const json& th = j.at("threshold");
    r.threshold.value = th.at("value").get<double>();
    r.threshold.standard_error = th.at("standard_error").get<double>();
    r.threshold.method = method_named(th.at("method").get<std::string>());
    r.threshold.horizon = th.at("horizon").get<double>();
    r.threshold.dt = th.at("dt").get<double>();
    r.plan.observable = j.at("observable").get<std::string>();
    r.plan.companion = j.at("companion").is_string() ? j.at("companion").get<std::string>() : "";
    r.plan.companion_target = num_or_nan(j.at("companion_target"));
    const json& v = j.at("rules");
    r.rules.seed_fraction = v.at("seed_fraction").get<double>();
    r.rules.ceiling = v.at("ceiling").is_number() ? v.at("ceiling").get<double>()
                                                  : std::numeric_limits<double>::infinity();
    r.rules.companion_tolerance = v.at("companion_tolerance").get<double>();
    r.rules.stability = v.at("stability").get<double>();
    r.rules.floor = v.at("floor").get<double>();
    r.rules.growth_slack = v.at("growth_slack").get<double>();
    r.rules.critical_band = v.at("critical_band").get<double>();
    for (const json& s : j.at("seeds")) {
      SeedRecord rec;
      rec.seed = s.at("seed").get<std::uint64_t>();
      rec.average = triple(s.at("average"));
      rec.companion = triple(s.at("companion"));
      rec.growth = num_or_nan(s.at("growth"));
      rec.growth_se = num_or_nan(s.at("growth_se"));
      rec.interior_h = num_or_nan(s.at("interior_h"));
      rec.interior_h_se = num_or_nan(s.at("interior_h_se"));
      r.seeds.push_back(rec);
    }
    const std::string verdict = j.at("verdict").get<std::string>();
    r.verdict = verdict == "PASS" ? Verdict::Pass
                : verdict == "INCONCLUSIVE" ? Verdict::Inconclusive : Verdict::Fail;
    r.reason = j.at("reason").get<std::string>();
    r.passing_fraction = j.at("passing_fraction").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, "cli", "report_from_json", e.what());
  }
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// fn(i) for i < n on up to `jobs` threads; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(std::max<std::size_t>(workers, 1));
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json estimate_json(const ThresholdEstimate& e) {
  return {{"value", e.value},
          {"standard_error", e.standard_error},
          {"method", to_string(e.method)},
          {"horizon", e.horizon},
          {"dt", e.dt}};
}

std::vector<std::string> coordinate_names(const ModelSpec& spec) {
  auto indexed = [](const char* stem, Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
    return out;
  };
  return std::visit(Overloaded{
                        [](const Sirs&) { return std::vector<std::string>{"s", "i", "r"}; },
                        [](const Rma&) { return std::vector<std::string>{"x", "y"}; },
                        [&](const Patchy& m) { return indexed("x", m.n()); },
                        [&](const Sis& m) { return indexed("x", m.d()); },
                        [](const Seir&) { return std::vector<std::string>{"s", "u", "v"}; },
                    },
                    spec.model);
}

std::uint64_t replicate_seed(const RunConfig& rc, std::size_t r) { return rc.seed + r; }

std::string csv_name(std::size_t r) { return "replicate_" + std::to_string(r) + ".csv"; }

// Evenly spaced rows: t = 0 and the first observation past each k T / n.
class RowClock {
public:
  RowClock(double horizon, int n) : step_(horizon / std::max(1, n)) {}
  bool due(double t) {
    if (t < next_ - 1e-9 * step_) return false;
    while (next_ <= t + 1e-9 * step_) next_ += step_;
    return true;
  }

private:
  double step_;
  double next_ = 0.0;
};

// --- simulate --------------------------------------------------------------

struct SimulateOut {
  json summary;
  std::string csv;
};

template <typename Run>
SimulateOut record_path(const RunConfig& rc, const ModelSpec& spec, bool pdmp, Run&& run) {
  const auto names = coordinate_names(spec);
  const std::size_t d = names.size();
  std::vector<std::string> columns = names;
  columns.push_back("extinction");
  if (pdmp) columns.push_back("env");
  for (const auto& n : names) columns.push_back("avg_" + n);
  columns.push_back("avg_extinction");

  std::vector<RunningAverage> avg(d + 1);
  std::vector<std::vector<double>> rows;
  RowClock clock(rc.cfg.horizon, rc.checkpoints);
  Eigen::VectorXd last;
  std::size_t jumps = 0;
  int last_env = spec.k0;
  run([&](double t, const Eigen::VectorXd& x, double extinction, int env) {
    for (std::size_t i = 0; i < d; ++i) avg[i].observe(t, x(static_cast<Eigen::Index>(i)));
    avg[d].observe(t, extinction);
    if (env != last_env) ++jumps;
    last_env = env;
    last = x;
    if (!clock.due(t)) return;
    std::vector<double> row{t};
    for (std::size_t i = 0; i < d; ++i) row.push_back(x(static_cast<Eigen::Index>(i)));
    row.push_back(extinction);
    if (pdmp) row.push_back(env);
    // at t = 0 the running average is the current value
    for (std::size_t i = 0; i <= d; ++i)
      row.push_back(t > 0.0 ? avg[i].average() : row[1 + (i < d ? i : d)]);
    rows.push_back(std::move(row));
  });
  SimulateOut out;
  json averages = json::object();
  for (std::size_t i = 0; i < d; ++i) averages[names[i]] = avg[i].average();
  out.summary = {{"final_state", to_json(last)},
                 {"averages", averages},
                 {"extinction_average", avg[d].average()}};
  if (pdmp) out.summary["switches"] = jumps;
  out.csv = format_csv(columns, rows);
  return out;
}

SimulateOut simulate_one(const RunConfig& rc, const ModelSpec& spec, NoiseStream& rng) {
  const IntegratorConfig& cfg = rc.cfg;
  const Eigen::VectorXd& x0 = rc.initial_state;
  return std::visit(
      Overloaded{
          [&](const Sirs& m) {
            return record_path(rc, spec, true, [&](auto&& emit) {
              pdmp_simulate(m, spec.q, Eigen::Vector3d(x0), spec.k0, cfg, rng,
                            [&](double t, const Eigen::Vector3d& x, int k) {
                              emit(t, Eigen::VectorXd(x), m.extinction(x), k);
                            });
            });
          },
          [&](const Rma& m) {
            return record_path(rc, spec, false, [&](auto&& emit) {
              sde_simulate(m, Eigen::Vector2d(x0), cfg, rng,
                           [&](double t, const Eigen::Vector2d& x, int) {
                             emit(t, Eigen::VectorXd(x), m.extinction(x), 0);
                           });
            });
          },
          [&](const Patchy& m) {
            return record_path(rc, spec, false, [&](auto&& emit) {
              sde_simulate(m, x0, cfg, rng, [&](double t, const Eigen::VectorXd& x, int) {
                emit(t, x, m.extinction(x), 0);
              });
            });
          },
          [&](const Sis& m) {
            return record_path(rc, spec, true, [&](auto&& emit) {
              pdmp_simulate(m, spec.q, x0, spec.k0, cfg, rng,
                            [&](double t, const Eigen::VectorXd& x, int k) {
                              emit(t, x, m.extinction(x), k);
                            });
            });
          },
          [&](const Seir& m) {
            return record_path(rc, spec, true, [&](auto&& emit) {
              pdmp_simulate(m, spec.q, Eigen::Vector3d(x0), spec.k0, cfg, rng,
                            [&](double t, const Eigen::Vector3d& x, int k) {
                              emit(t, Eigen::VectorXd(x), m.extinction(x), k);
                            });
            });
          },
      },
      spec.model);
}

// --- per-task runners --------------------------------------------------------

struct TaskResult {
  json results;
  bool failed = false;
};

TaskResult run_simulate(const RunConfig& rc, const std::filesystem::path& dir, int jobs) {
  std::vector<json> reps(static_cast<std::size_t>(rc.replicates));
  parallel_for(reps.size(), jobs, [&](std::size_t r) {
    NoiseStream rng(replicate_seed(rc, r));
    SimulateOut out = simulate_one(rc, rc.spec, rng);
    write_atomic(dir / csv_name(r), out.csv);
    out.summary["replicate"] = r;
    out.summary["seed"] = replicate_seed(rc, r);
    out.summary["csv"] = csv_name(r);
    reps[r] = std::move(out.summary);
  });
  return {{{"replicates", reps}}, false};
}

json threshold_extras(const ModelSpec& spec) {
  json extra = json::object();
  if (const auto* m = std::get_if<Sirs>(&spec.model)) {
    const Eigen::VectorXd p = stationary_law(spec.q);
    extra["pi_h"] = sirs_pi_h(m->params(), p);
    extra["r0"] = sirs_r0(m->params(), p);
  }
  if (const auto* m = std::get_if<Rma>(&spec.model))
    extra["boundary_mean"] = m->params().boundary_mean();
  if (const auto cf = closed_form_threshold(spec)) extra["closed_form"] = cf->value;
  return extra;
}

// Combines replicate estimates: mean value; SE from the replicate SEs, or
// the spread across replicates when that is larger.
json combine(const std::vector<ThresholdEstimate>& es, double band) {
  const double n = static_cast<double>(es.size());
  double mean = 0.0, var_se = 0.0;
  for (const auto& e : es) {
    mean += e.value / n;
    var_se += e.standard_error * e.standard_error / (n * n);
  }
  double se = std::sqrt(var_se);
  if (es.size() > 1) {
    double ss = 0.0;
    for (const auto& e : es) ss += (e.value - mean) * (e.value - mean);
    se = std::max(se, std::sqrt(ss / (n - 1.0) / n));
  }
  ThresholdEstimate combined = es.front();
  combined.value = mean;
  combined.standard_error = se;
  json out = estimate_json(combined);
  out["regime"] = to_string(classify_regime(combined, band));
  return out;
}

TaskResult run_threshold(const RunConfig& rc, int jobs) {
  std::vector<ThresholdEstimate> es(static_cast<std::size_t>(rc.replicates));
  parallel_for(es.size(), jobs, [&](std::size_t r) {
    NoiseStream rng(replicate_seed(rc, r));
    es[r] = estimate_threshold(rc.spec, rc.cfg, rng, rc.method, rc.batches);
  });
  json reps = json::array();
  for (std::size_t r = 0; r < es.size(); ++r) {
    json e = estimate_json(es[r]);
    e["replicate"] = r;
    e["seed"] = replicate_seed(rc, r);
    reps.push_back(e);
  }
  json results = combine(es, rc.rules.critical_band);
  results["replicates"] = reps;
  results.update(threshold_extras(rc.spec));
  return {results, false};
}

json tuning_json(const CriticalTuning& t) {
  return {{"parameter", t.parameter}, {"lo", t.lo},
          {"hi", t.hi},               {"value", t.value},
          {"residual", estimate_json(t.residual)},
          {"evaluations", t.evaluations}};
}

TuningOptions tuning_options(const RunConfig& rc) {
  TuningOptions o;
  o.tolerance = rc.tune->tolerance;
  o.max_evaluations = rc.tune->max_evaluations;
  o.max_horizon = rc.tune->max_horizon;
  o.method = rc.method;
  o.batches = rc.batches;
  return o;
}

void require_tune(const RunConfig& rc, Task task) {
  if (!rc.tune)
    throw Error(ErrorCode::SchemaError, "cli", "run",
                "options.tune is required for the " + std::string(to_string(task)) + " task");
}

TaskResult run_tune(const RunConfig& rc, int jobs) {
  require_tune(rc, Task::Tune);
  std::vector<CriticalTuning> ts(static_cast<std::size_t>(rc.replicates));
  parallel_for(ts.size(), jobs, [&](std::size_t r) {
    NoiseStream rng(replicate_seed(rc, r));
    ts[r] = tune_to_critical(rc.spec, rc.tune->parameter, rc.tune->lo, rc.tune->hi, rc.cfg, rng,
                             tuning_options(rc));
  });
  json reps = json::array();
  double mean = 0.0;
  for (std::size_t r = 0; r < ts.size(); ++r) {
    json t = tuning_json(ts[r]);
    t["replicate"] = r;
    t["seed"] = replicate_seed(rc, r);
    reps.push_back(t);
    mean += ts[r].value / static_cast<double>(ts.size());
  }
  return {{{"parameter", rc.tune->parameter}, {"value", mean}, {"replicates", reps}}, false};
}

TaskResult run_couple(const RunConfig& rc, const std::filesystem::path& dir, int jobs) {
  std::vector<CoupledRun> runs(static_cast<std::size_t>(rc.replicates));
  parallel_for(runs.size(), jobs, [&](std::size_t r) {
    NoiseStream rng(replicate_seed(rc, r));
    runs[r] = couple(rc.spec, rc.initial_state, rc.cfg, rng, rc.checkpoints);
    std::vector<std::string> cols(runs[r].columns.begin() + 1, runs[r].columns.end());
    write_atomic(dir / csv_name(r), format_csv(cols, runs[r].rows));
  });
  json reps = json::array();
  std::size_t total = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const CoupledRun& c = runs[r];
    total += c.violations;
    reps.push_back({{"replicate", r},
                    {"seed", replicate_seed(rc, r)},
                    {"csv", csv_name(r)},
                    {"grid_points", c.grid_points},
                    {"violations", c.violations},
                    {"worst_violation", c.worst_violation},
                    {"gap_mean", c.gap_mean},
                    {"gap_se", c.gap_se},
                    {"direction_gap", c.direction_gap},
                    {"growth_identity_residual", c.growth_identity_residual},
                    {"min_v", c.min_v}});
  }
  return {{{"violations", total}, {"replicates", reps}}, total > 0};
}

TaskResult run_experiment_task(const RunConfig& rc, const std::filesystem::path& dir, int jobs) {
  ModelSpec spec = rc.spec;
  json results = json::object();
  ThresholdEstimate threshold;
  NoiseStream rng(rc.seed);
  NoiseStream threshold_rng = rng.split(0x7468726573);
  if (rc.tune) {
    const CriticalTuning t = tune_to_critical(spec, rc.tune->parameter, rc.tune->lo, rc.tune->hi,
                                              rc.cfg, threshold_rng, tuning_options(rc));
    set_parameter(spec, rc.tune->parameter, t.value);
    threshold = t.residual;
    results["tuning"] = tuning_json(t);
  } else {
    threshold = estimate_threshold(spec, rc.cfg, threshold_rng, rc.method, rc.batches);
  }
  const ExperimentKind kind = rc.experiment_kind.value_or([&] {
    switch (classify_regime(threshold, rc.rules.critical_band)) {
    case Regime::Subcritical: return ExperimentKind::Subcritical;
    case Regime::Persistent: return ExperimentKind::Persistent;
    case Regime::Critical: break;
    }
    return ExperimentKind::Critical;
  }());

  ExperimentSettings st;
  st.cfg = rc.cfg;
  for (int r = 0; r < rc.replicates; ++r) st.seeds.push_back(replicate_seed(rc, static_cast<std::size_t>(r)));
  st.x0 = rc.initial_state;
  st.rules = rc.rules;
  st.checkpoints = rc.checkpoints;
  st.batches = rc.batches;
  st.jobs = jobs;
  const ExperimentReport rep = run_experiment(kind, spec, threshold, st);

  std::vector<std::string> cols{"avg_" + rep.plan.observable};
  if (!rep.plan.companion.empty()) cols.push_back("avg_" + rep.plan.companion);
  json seeds = json::array();
  for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
    const SeedRecord& s = rep.seeds[i];
    std::vector<std::vector<double>> rows;
    for (const auto& p : s.series) {
      std::vector<double> row{p[0], p[1]};
      if (!rep.plan.companion.empty()) row.push_back(p[2]);
      rows.push_back(std::move(row));
    }
    write_atomic(dir / csv_name(i), format_csv(cols, rows));
    seeds.push_back({{"csv", csv_name(i)}});
  }
  results.update(report_to_json(rep));
  for (std::size_t i = 0; i < seeds.size(); ++i) results["seeds"][i]["csv"] = seeds[i]["csv"];
  return {results, rep.verdict == Verdict::Fail};
}

TaskResult run_task(const RunConfig& rc, Task task, const std::filesystem::path& dir, int jobs) {
  switch (task) {
  case Task::Simulate: return run_simulate(rc, dir, jobs);
  case Task::Threshold: return run_threshold(rc, jobs);
  case Task::Tune: return run_tune(rc, jobs);
  case Task::Couple: return run_couple(rc, dir, jobs);
  case Task::Experiment: return run_experiment_task(rc, dir, jobs);
  }
  return {};
}

} // namespace

RunOutcome run(RunConfig rc, Task task, const std::filesystem::path& out_dir, int jobs) {
  if (rc.task && *rc.task != task)
    throw Error(ErrorCode::SchemaError, "cli", "run",
                "config task '" + std::string(to_string(*rc.task)) + "' does not match command '" +
                    std::string(to_string(task)) + "'");
  if (task == Task::Tune) require_tune(rc, task);
  const auto start = std::chrono::steady_clock::now();
  rc.effective["task"] = to_string(task);
  rc.effective["sim"]["seed"] = rc.seed;

  RunOutcome outcome;
  json summary = {{"tool", "critpop"},
                  {"schema_version", 1},
                  {"task", to_string(task)},
                  {"model", rc.model_id},
                  {"seed", rc.seed},
                  {"config", rc.effective}};
  bool failed = false;
  if (rc.sweep) {
    const Sweep sweep = *rc.sweep;
    std::vector<TaskResult> results(sweep.values.size());
    parallel_for(sweep.values.size(), jobs, [&](std::size_t i) {
      RunConfig point = rc;
      point.sweep.reset();
      set_parameter(point.spec, sweep.parameter, sweep.values[i]);
      results[i] = run_task(point, task, out_dir / ("point_" + std::to_string(i)), 1);
    });
    json points = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
      failed = failed || results[i].failed;
      points.push_back({{"index", i},
                        {"parameter", sweep.parameter},
                        {"parameter_value", sweep.values[i]},
                        {"directory", "point_" + std::to_string(i)},
                        {"status", results[i].failed ? "fail" : "ok"},
                        {"results", results[i].results}});
    }
    summary["points"] = points;
  } else {
    TaskResult r = run_task(rc, task, out_dir, jobs);
    failed = r.failed;
    summary["results"] = std::move(r.results);
  }
  summary["status"] = failed ? "fail" : "ok";
  summary["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  outcome.exit_code = failed ? 2 : 0;
  outcome.summary = std::move(summary);
  return outcome;
}

} // namespace critpop::cli
