#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "critpop/cli.hpp"
#include "critpop/error.hpp"
#include "critpop/switching.hpp"
#include "critpop/thresholds.hpp"

namespace critpop::cli {

using nlohmann::json;

std::string_view to_string(Task task) {
  switch (task) {
  case Task::Simulate: return "simulate";
  case Task::Threshold: return "threshold";
  case Task::Tune: return "tune";
  case Task::Couple: return "couple";
  case Task::Experiment: return "experiment";
  }
  return "?";
}

std::optional<Task> task_from_string(std::string_view name) {
  for (auto t : {Task::Simulate, Task::Threshold, Task::Tune, Task::Couple, Task::Experiment})
    if (to_string(t) == name) return t;
  return std::nullopt;
}

namespace {

std::optional<ThresholdMethod> method_from_string(std::string_view s) {
  for (auto m : {ThresholdMethod::ClosedForm, ThresholdMethod::BoundaryAverage,
                 ThresholdMethod::LogGrowth, ThresholdMethod::InteriorAverage})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

// Collects every violation instead of stopping at the first.
class Checker {
public:
  void fail(const std::string& path, const std::string& msg) { errors_.push_back(path + " " + msg); }
  bool clean() const { return errors_.empty(); }
  std::size_t count() const { return errors_.size(); }
  [[noreturn]] void raise() const {
    std::string msg = std::to_string(errors_.size()) + " violation(s):";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw Error(ErrorCode::SchemaError, "cli", "parse_config", msg);
  }

private:
  std::vector<std::string> errors_;
};

enum class Bound { Any, Positive, NonNegative };

// An object whose keys are consumed one by one; leftovers are reported.
class Obj {
public:
  Obj(const json* node, std::string path, Checker& c) : node_(node), path_(std::move(path)), c_(c) {
    if (node_ && !node_->is_object()) {
      c_.fail(path_, "must be an object");
      node_ = nullptr;
    }
  }
  bool present() const { return node_ != nullptr; }
  std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  const json* get(std::string_view key) {
    seen_.insert(std::string(key));
    if (!node_) return nullptr;
    const auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }
  void finish() {
    if (!node_) return;
    for (const auto& [k, v] : node_->items())
      if (!seen_.count(k)) c_.fail(at(k), "is not a recognized key");
  }
  Checker& checker() { return c_; }

private:
  const json* node_;
  std::string path_;
  Checker& c_;
  std::set<std::string> seen_;
};

bool satisfies(double v, Bound b) {
  switch (b) {
  case Bound::Any: return true;
  case Bound::Positive: return v > 0.0;
  case Bound::NonNegative: return v >= 0.0;
  }
  return false;
}

const char* describe(Bound b) { return b == Bound::Positive ? "must be > 0" : "must be >= 0"; }

std::optional<double> as_number(const json& j, const std::string& path, Checker& c, Bound b) {
  if (!j.is_number()) {
    c.fail(path, "must be a number");
    return std::nullopt;
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    c.fail(path, "must be finite");
    return std::nullopt;
  }
  if (!satisfies(v, b)) {
    c.fail(path, describe(b));
    return std::nullopt;
  }
  return v;
}

std::optional<double> number(Obj& o, std::string_view key, Bound b, bool required) {
  const json* j = o.get(key);
  if (!j) {
    if (required) o.checker().fail(o.at(key), "is required");
    return std::nullopt;
  }
  return as_number(*j, o.at(key), o.checker(), b);
}

double number_or(Obj& o, std::string_view key, double def, Bound b = Bound::Any) {
  return number(o, key, b, false).value_or(def);
}

std::optional<long long> integer(Obj& o, std::string_view key, long long min, bool required) {
  const json* j = o.get(key);
  if (!j) {
    if (required) o.checker().fail(o.at(key), "is required");
    return std::nullopt;
  }
  if (!j->is_number_integer()) {
    o.checker().fail(o.at(key), "must be an integer");
    return std::nullopt;
  }
  const long long v = j->get<long long>();
  if (v < min) {
    o.checker().fail(o.at(key), "must be >= " + std::to_string(min));
    return std::nullopt;
  }
  return v;
}

std::optional<std::string> string(Obj& o, std::string_view key, bool required) {
  const json* j = o.get(key);
  if (!j) {
    if (required) o.checker().fail(o.at(key), "is required");
    return std::nullopt;
  }
  if (!j->is_string()) {
    o.checker().fail(o.at(key), "must be a string");
    return std::nullopt;
  }
  return j->get<std::string>();
}

std::optional<Eigen::VectorXd> vector_from(const json& j, const std::string& path, Checker& c,
                                           Bound b = Bound::Any) {
  if (!j.is_array() || j.empty()) {
    c.fail(path, "must be a non-empty array of numbers");
    return std::nullopt;
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  bool ok = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto x = as_number(j[i], path + "[" + std::to_string(i) + "]", c, b);
    if (x) v(static_cast<Eigen::Index>(i)) = *x;
    else ok = false;
  }
  if (!ok) return std::nullopt;
  return v;
}

std::optional<Eigen::VectorXd> vector(Obj& o, std::string_view key, bool required,
                                      Bound b = Bound::Any) {
  const json* j = o.get(key);
  if (!j) {
    if (required) o.checker().fail(o.at(key), "is required");
    return std::nullopt;
  }
  return vector_from(*j, o.at(key), o.checker(), b);
}

std::optional<Eigen::MatrixXd> matrix(Obj& o, std::string_view key, bool required) {
  const json* j = o.get(key);
  const std::string path = o.at(key);
  Checker& c = o.checker();
  if (!j) {
    if (required) c.fail(path, "is required");
    return std::nullopt;
  }
  if (!j->is_array() || j->empty() || !(*j)[0].is_array() || (*j)[0].empty()) {
    c.fail(path, "must be a non-empty array of equal-length rows");
    return std::nullopt;
  }
  const std::size_t rows = j->size(), cols = (*j)[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  bool ok = true;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = (*j)[r];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.size() != cols) {
      c.fail(rp, "must have " + std::to_string(cols) + " entries");
      ok = false;
      continue;
    }
    for (std::size_t k = 0; k < cols; ++k) {
      const auto x = as_number(row[k], rp + "[" + std::to_string(k) + "]", c, Bound::Any);
      if (x) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = *x;
      else ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return m;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

// Iterates a required non-empty array of objects.
template <typename F>
void each_object(Obj& o, std::string_view key, F&& f) {
  const json* j = o.get(key);
  Checker& c = o.checker();
  if (!j) {
    c.fail(o.at(key), "is required");
    return;
  }
  if (!j->is_array() || j->empty()) {
    c.fail(o.at(key), "must be a non-empty array");
    return;
  }
  for (std::size_t i = 0; i < j->size(); ++i) {
    Obj e(&(*j)[i], o.at(key) + "[" + std::to_string(i) + "]", c);
    if (e.present()) f(e);
    e.finish();
  }
}

// Builds the model from `params`, records violations, fills `echo`.
std::optional<Model> parse_model(const std::string& id, Obj& p, json& echo, Checker& c) {
  const std::size_t before = c.count();
  std::optional<Model> model;
  auto build = [&](auto&& make) {
    if (c.count() != before) return;
    try {
      model = make();
    } catch (const Error& e) {
      c.fail("params", std::string("rejected: ") + e.what());
    }
  };

  if (id == "sirs") {
    SirsParams sp;
    sp.inflow = number_or(p, "inflow", 1.0, Bound::Positive);
    sp.mortality = number_or(p, "mortality", 1.0, Bound::Positive);
    sp.envs.clear();
    echo = {{"inflow", sp.inflow}, {"mortality", sp.mortality}, {"envs", json::array()}};
    each_object(p, "envs", [&](Obj& e) {
      SirsEnvironment env;
      env.beta = number(e, "beta", Bound::Positive, true).value_or(1.0);
      env.alpha = number_or(e, "alpha", 0.0, Bound::NonNegative);
      env.delta = number_or(e, "delta", 0.0, Bound::NonNegative);
      env.immunity_loss = number_or(e, "immunity_loss", 0.0, Bound::NonNegative);
      const std::string inc = string(e, "incidence", false).value_or("bilinear");
      if (inc == "saturated") env.incidence.kind = Incidence::Kind::Saturated;
      else if (inc != "bilinear") c.fail(e.at("incidence"), "must be \"bilinear\" or \"saturated\"");
      env.incidence.saturation = number_or(e, "saturation", 0.0, Bound::NonNegative);
      sp.envs.push_back(env);
      echo["envs"].push_back({{"beta", env.beta},
                              {"alpha", env.alpha},
                              {"delta", env.delta},
                              {"immunity_loss", env.immunity_loss},
                              {"incidence", inc},
                              {"saturation", env.incidence.saturation}});
    });
    build([&] { return Model(Sirs(sp)); });
  } else if (id == "rma") {
    RmaParams rp;
    rp.K = number_or(p, "K", rp.K, Bound::Positive);
    rp.alpha = number_or(p, "alpha", rp.alpha, Bound::Positive);
    rp.epsilon = number_or(p, "epsilon", rp.epsilon, Bound::NonNegative);
    echo = {{"K", rp.K}, {"alpha", rp.alpha}, {"epsilon", rp.epsilon}};
    build([&] { return Model(Rma(rp)); });
  } else if (id == "patchy") {
    PatchyParams pp;
    const auto a = vector(p, "a", true);
    const auto cc = vector(p, "c", true, Bound::Positive);
    const auto D = matrix(p, "D", false);
    const auto G = matrix(p, "Gamma", true);
    if (a) pp.a = *a;
    if (cc) pp.c = *cc;
    if (D) pp.D = *D;
    if (G) pp.Gamma = *G;
    build([&] {
      Patchy m(pp);
      echo = {{"a", to_json(m.params().a)},
              {"c", to_json(m.params().c)},
              {"D", to_json(m.params().D)},
              {"Gamma", to_json(m.params().Gamma)}};
      return Model(std::move(m));
    });
  } else if (id == "sis") {
    SisParams sp;
    echo = {{"envs", json::array()}};
    each_object(p, "envs", [&](Obj& e) {
      SisEnvironment env;
      const auto C = matrix(e, "C", true);
      const auto D = vector(e, "D", true, Bound::Positive);
      if (C) env.C = *C;
      if (D) env.D = *D;
      sp.envs.push_back(env);
      if (C && D) echo["envs"].push_back({{"C", to_json(*C)}, {"D", to_json(*D)}});
    });
    build([&] { return Model(Sis(sp)); });
  } else if (id == "seir") {
    SeirParams sp;
    sp.inflow = number_or(p, "inflow", 1.0, Bound::Positive);
    sp.gamma = number_or(p, "gamma", 1.0, Bound::Positive);
    sp.envs.clear();
    echo = {{"inflow", sp.inflow}, {"gamma", sp.gamma}, {"envs", json::array()}};
    each_object(p, "envs", [&](Obj& e) {
      SeirEnvironment env;
      env.beta = number(e, "beta", Bound::Positive, true).value_or(1.0);
      env.gamma1 = number(e, "gamma1", Bound::Positive, true).value_or(1.0);
      env.delta = number(e, "delta", Bound::Positive, true).value_or(1.0);
      sp.envs.push_back(env);
      echo["envs"].push_back({{"beta", env.beta}, {"gamma1", env.gamma1}, {"delta", env.delta}});
    });
    build([&] { return Model(Seir(sp)); });
  }
  return model;
}

void parse_rules(Obj& r, VerdictRules& rules, json& echo) {
  rules.seed_fraction = number_or(r, "seed_fraction", rules.seed_fraction, Bound::Positive);
  if (rules.seed_fraction > 1.0) r.checker().fail(r.at("seed_fraction"), "must be <= 1");
  rules.ceiling = number_or(r, "ceiling", rules.ceiling, Bound::Positive);
  rules.companion_tolerance =
      number_or(r, "companion_tolerance", rules.companion_tolerance, Bound::Positive);
  rules.stability = number_or(r, "stability", rules.stability, Bound::Positive);
  rules.floor = number_or(r, "floor", rules.floor, Bound::NonNegative);
  rules.growth_slack = number_or(r, "growth_slack", rules.growth_slack, Bound::NonNegative);
  rules.critical_band = number_or(r, "critical_band", rules.critical_band, Bound::NonNegative);
  echo = {{"seed_fraction", rules.seed_fraction},
          {"ceiling", std::isfinite(rules.ceiling) ? json(rules.ceiling) : json(nullptr)},
          {"companion_tolerance", rules.companion_tolerance},
          {"stability", rules.stability},
          {"floor", rules.floor},
          {"growth_slack", rules.growth_slack},
          {"critical_band", rules.critical_band}};
}

// Checks that `name` is settable on a copy of the ModelSpec.
void check_parameter(const ModelSpec& spec, const std::string& name, double value,
                     const std::string& path, Checker& c) {
  ModelSpec copy = spec;
  try {
    set_parameter(copy, name, value);
  } catch (const Error& e) {
    c.fail(path, std::string("rejected: ") + e.what());
  }
}

} // namespace

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto head = text.substr(0, byte == 0 ? 0 : byte - 1);
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(head.begin(), head.end(), '\n'));
    const std::size_t nl = head.rfind('\n');
    const std::size_t col = nl == std::string_view::npos ? head.size() + 1 : head.size() - nl;
    std::string what = e.what();
    if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    throw Error(ErrorCode::ParseError, "cli", "parse_config",
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }

  Checker c;
  RunConfig rc;
  json eff;
  Obj root(&doc, "", c);
  if (!root.present()) c.raise();

  const auto model_id = string(root, "model", true);
  const std::set<std::string> ids{"sirs", "rma", "patchy", "sis", "seir"};
  if (model_id && !ids.count(*model_id))
    c.fail("model", "must be one of sirs, rma, patchy, sis, seir");
  rc.model_id = model_id.value_or("");
  eff["model"] = rc.model_id;

  Obj params(root.get("params"), "params", c);
  json params_echo = json::object();
  std::optional<Model> model;
  if (model_id && ids.count(*model_id)) {
    if (!params.present()) c.fail("params", "is required");
    else model = parse_model(*model_id, params, params_echo, c);
  }
  params.finish();
  eff["params"] = params_echo;

  // switching, only meaningful for PDMP models
  const bool pdmp = rc.model_id == "sirs" || rc.model_id == "sis" || rc.model_id == "seir";
  Obj sw(root.get("switching"), "switching", c);
  RateMatrix q = RateMatrix::single();
  int k0 = 0;
  if (sw.present() && !pdmp && !rc.model_id.empty() && ids.count(rc.model_id)) {
    c.fail("switching", "is only valid for PDMP models (sirs, sis, seir)");
  } else if (sw.present()) {
    if (const auto rates = matrix(sw, "rates", true)) {
      try {
        q = validate_rate_matrix(*rates);
      } catch (const Error& e) {
        c.fail("switching.rates", std::string("rejected: ") + e.what());
      }
    }
    k0 = static_cast<int>(integer(sw, "initial", 0, false).value_or(0));
  }
  sw.finish();
  if (pdmp) eff["switching"] = {{"rates", to_json(q.matrix())}, {"initial", k0}};
  if (model && c.clean()) {
    try {
      rc.spec = make_spec(*model, q, k0);
    } catch (const Error& e) {
      c.fail("switching", std::string("rejected: ") + e.what());
    }
  }

  Obj sim(root.get("sim"), "sim", c);
  if (!sim.present()) c.fail("sim", "is required");
  rc.cfg.dt = number(sim, "dt", Bound::Positive, false).value_or(0.01);
  rc.cfg.horizon = number(sim, "horizon", Bound::Positive, true).value_or(1.0);
  rc.cfg.burn_in = number(sim, "burn_in", Bound::NonNegative, false).value_or(0.1 * rc.cfg.horizon);
  if (rc.cfg.burn_in >= rc.cfg.horizon) c.fail("sim.burn_in", "must be < sim.horizon");
  if (rc.cfg.dt > rc.cfg.horizon / 100.0) c.fail("sim.dt", "must be <= sim.horizon/100");
  rc.replicates = static_cast<int>(integer(sim, "replicates", 1, false).value_or(1));
  rc.seed = static_cast<std::uint64_t>(integer(sim, "seed", 0, false).value_or(1));
  rc.checkpoints = static_cast<int>(integer(sim, "checkpoints", 1, false).value_or(1000));
  rc.batches = static_cast<int>(
      integer(sim, "batches", BatchMeans::kMinBatches, false).value_or(BatchMeans::kDefaultBatches));
  sim.finish();
  eff["sim"] = {{"dt", rc.cfg.dt},
                {"burn_in", rc.cfg.burn_in},
                {"horizon", rc.cfg.horizon},
                {"replicates", rc.replicates},
                {"seed", rc.seed},
                {"checkpoints", rc.checkpoints},
                {"batches", rc.batches}};

  if (const auto task = string(root, "task", false)) {
    rc.task = task_from_string(*task);
    if (!rc.task) c.fail("task", "must be one of simulate, threshold, tune, couple, experiment");
    else eff["task"] = *task;
  }

  if (const json* init = root.get("initial_state")) {
    if (const auto v = vector_from(*init, "initial_state", c)) {
      if (c.clean() && v->size() != rc.spec.dimension())
        c.fail("initial_state", "must have " + std::to_string(rc.spec.dimension()) + " entries");
      rc.initial_state = *v;
    }
  }
  if (c.clean()) {
    rc.initial_state = rc.initial_state.size() ? rc.initial_state : default_initial_state(rc.spec);
    eff["initial_state"] = to_json(rc.initial_state);
  }

  Obj opts(root.get("options"), "options", c);
  json opts_echo = json::object();
  if (const auto m = string(opts, "method", false)) {
    rc.method = method_from_string(*m);
    if (!rc.method)
      c.fail("options.method",
             "must be one of closed-form, boundary-average, log-growth, interior-average");
    else opts_echo["method"] = *m;
  }
  {
    Obj t(opts.get("tune"), "options.tune", c);
    if (t.present()) {
      TuneOptions to;
      to.parameter = string(t, "parameter", true).value_or("");
      to.lo = number(t, "lo", Bound::Any, true).value_or(0.0);
      to.hi = number(t, "hi", Bound::Any, true).value_or(0.0);
      if (!(to.lo < to.hi)) c.fail("options.tune.lo", "must be < options.tune.hi");
      to.tolerance = number_or(t, "tolerance", to.tolerance, Bound::Positive);
      to.max_evaluations =
          static_cast<int>(integer(t, "max_evaluations", 2, false).value_or(to.max_evaluations));
      to.max_horizon = number_or(t, "max_horizon", to.max_horizon, Bound::NonNegative);
      if (c.clean()) {
        check_parameter(rc.spec, to.parameter, to.lo, "options.tune.parameter", c);
        check_parameter(rc.spec, to.parameter, to.hi, "options.tune.parameter", c);
      }
      opts_echo["tune"] = {{"parameter", to.parameter},       {"lo", to.lo},
                           {"hi", to.hi},                     {"tolerance", to.tolerance},
                           {"max_evaluations", to.max_evaluations},
                           {"max_horizon", to.max_horizon}};
      rc.tune = to;
    }
    t.finish();
  }
  if (const auto k = string(opts, "kind", false)) {
    if (*k != "auto") {
      try {
        rc.experiment_kind = experiment_kind_from_string(*k);
      } catch (const Error&) {
        c.fail("options.kind", "must be one of subcritical, critical, persistent, auto");
      }
    }
    opts_echo["kind"] = *k;
  } else {
    opts_echo["kind"] = "auto";
  }
  {
    Obj r(opts.get("rules"), "options.rules", c);
    json rules_echo;
    parse_rules(r, rc.rules, rules_echo);
    r.finish();
    opts_echo["rules"] = rules_echo;
  }
  opts.finish();
  eff["options"] = opts_echo;

  {
    Obj s(root.get("sweep"), "sweep", c);
    if (s.present()) {
      Sweep sweep;
      sweep.parameter = string(s, "parameter", true).value_or("");
      if (const auto v = vector(s, "values", true)) {
        sweep.values.assign(v->data(), v->data() + v->size());
        if (c.clean())
          for (std::size_t i = 0; i < sweep.values.size(); ++i)
            check_parameter(rc.spec, sweep.parameter, sweep.values[i],
                            "sweep.values[" + std::to_string(i) + "]", c);
      }
      eff["sweep"] = {{"parameter", sweep.parameter}, {"values", sweep.values}};
      rc.sweep = sweep;
    }
    s.finish();
  }

  root.finish();
  if (!c.clean()) c.raise();
  rc.effective = std::move(eff);
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cli", "load_config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace critpop::cli
