#include "kkz/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "kkz/kk_bundle.hpp"
#include "kkz/trajectory_io.hpp"

namespace kkz {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// JSON helpers

ojson num(double v) {
  if (std::isfinite(v)) return v;
  return io::format_double(v);
}

ojson vec(const Eigen::VectorXd& v) {
  auto a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::Config, msg); }

void allow_keys(const nlohmann::json& obj, const std::string& where,
                std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_error(where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
}

double get_number(const nlohmann::json& obj, const char* key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) config_error(where + "." + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where + "." + key + " must be finite");
  return d;
}

Eigen::VectorXd get_vector(const nlohmann::json& v, const std::string& where,
                           std::optional<int> size = std::nullopt) {
  if (!v.is_array()) config_error(where + " must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) config_error(where + " must be an array of numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  if (size && out.size() != *size)
    config_error(where + " must have " + std::to_string(*size) + " entries");
  if (!out.allFinite()) config_error(where + " must be finite");
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

const std::set<std::string> kCommands = {"simulate-bundle", "simulate-base", "lift",
                                         "compare",         "classify",      "check-field"};

struct Config {
  std::string command;
  std::string scenario;
  ScenarioParams params;
  std::string metric_kind = "minkowski";
  double metric_a = 0.0;
  std::optional<Vec4> x0, v0;
  std::optional<AlgebraCoeffs> charge, fiber_velocity;
  AlgebraCoeffs fiber;
  double tol = 1e-9;
  double s_max = 10.0;
  std::size_t samples = 512;
  double fd_scale = kDefaultFdScale;
  ClassifierOptions classifier;
  BreakpointOptions breakpoints;
  bool equivalence = true;
  std::optional<std::string> curve;
  std::size_t points = 16;
  double box = 2.0;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  fs::path base_dir;
};

BaseMetric make_metric(const Config& c) {
  if (c.metric_kind == "minkowski") return BaseMetric::minkowski();
  if (c.metric_kind == "exp-lapse") return BaseMetric::exp_lapse(c.metric_a);
  if (c.metric_kind == "linear-lapse") return BaseMetric::linear_lapse(c.metric_a);
  config_error("unknown metric kind '" + c.metric_kind + "'");
}

Config parse_config(const nlohmann::json& j, const RunRequest& req, const fs::path& base_dir) {
  allow_keys(j, "config",
             {"command", "scenario", "metric", "initial", "integrator", "classifier", "curve",
              "field_check", "seed", "output"});
  Config c;
  c.base_dir = base_dir;
  if (!j.contains("command") || !j["command"].is_string()) config_error("command is required");
  c.command = j["command"].get<std::string>();
  if (!kCommands.count(c.command)) config_error("unknown command '" + c.command + "'");

  if (!j.contains("scenario")) config_error("scenario is required");
  const auto& sc = j["scenario"];
  allow_keys(sc, "scenario", {"name", "params"});
  if (!sc.contains("name") || !sc["name"].is_string()) config_error("scenario.name is required");
  c.scenario = sc["name"].get<std::string>();
  if (sc.contains("params")) {
    if (!sc["params"].is_object()) config_error("scenario.params must be an object");
    for (const auto& [key, value] : sc["params"].items()) {
      if (!value.is_number()) config_error("scenario.params." + key + " must be a number");
      c.params[key] = value.get<double>();
    }
  }

  if (j.contains("metric")) {
    const auto& m = j["metric"];
    allow_keys(m, "metric", {"kind", "a"});
    if (!m.contains("kind") || !m["kind"].is_string()) config_error("metric.kind is required");
    c.metric_kind = m["kind"].get<std::string>();
    c.metric_a = get_number(m, "a", 0.0, "metric");
  }

  if (j.contains("initial")) {
    const auto& in = j["initial"];
    allow_keys(in, "initial", {"x0", "v0", "Q", "fiber", "fiber_velocity"});
    if (in.contains("x0")) c.x0 = get_vector(in["x0"], "initial.x0", 4);
    if (in.contains("v0")) c.v0 = get_vector(in["v0"], "initial.v0", 4);
    if (in.contains("Q")) c.charge = get_vector(in["Q"], "initial.Q");
    if (in.contains("fiber")) c.fiber = get_vector(in["fiber"], "initial.fiber");
    if (in.contains("fiber_velocity"))
      c.fiber_velocity = get_vector(in["fiber_velocity"], "initial.fiber_velocity");
    if (c.charge && c.fiber_velocity)
      config_error("initial.Q and initial.fiber_velocity are mutually exclusive");
  }

  if (j.contains("integrator")) {
    const auto& in = j["integrator"];
    allow_keys(in, "integrator", {"tol", "s_max", "samples", "fd_scale"});
    c.tol = get_number(in, "tol", c.tol, "integrator");
    c.s_max = get_number(in, "s_max", c.s_max, "integrator");
    c.fd_scale = get_number(in, "fd_scale", c.fd_scale, "integrator");
    if (in.contains("samples")) {
      if (!in["samples"].is_number_unsigned()) config_error("integrator.samples must be a positive integer");
      c.samples = in["samples"].get<std::size_t>();
    }
  }
  if (req.tol) c.tol = *req.tol;
  if (!(c.tol > 0.0)) config_error("integrator.tol must be positive");
  if (!(c.s_max > 0.0)) config_error("integrator.s_max must be positive");
  if (c.samples < 5) config_error("integrator.samples must be at least 5");
  if (!(c.fd_scale > 0.0)) config_error("integrator.fd_scale must be positive");

  if (j.contains("classifier")) {
    const auto& in = j["classifier"];
    allow_keys(in, "classifier",
               {"residual_threshold", "q_zero_tol", "timelike_margin", "joint_tol", "min_samples",
                "random_starts", "max_iterations", "shooting_tol", "charge_bound",
                "detect_breakpoints", "jump_factor", "window", "equivalence"});
    auto& o = c.classifier;
    o.residual_threshold = get_number(in, "residual_threshold", o.residual_threshold, "classifier");
    o.q_zero_tol = get_number(in, "q_zero_tol", o.q_zero_tol, "classifier");
    o.timelike_margin = get_number(in, "timelike_margin", o.timelike_margin, "classifier");
    o.joint_tol = get_number(in, "joint_tol", o.joint_tol, "classifier");
    o.shooting_tol = get_number(in, "shooting_tol", o.shooting_tol, "classifier");
    o.charge_bound = get_number(in, "charge_bound", o.charge_bound, "classifier");
    o.min_samples = static_cast<std::size_t>(get_number(in, "min_samples", 9, "classifier"));
    o.random_starts = static_cast<int>(get_number(in, "random_starts", 8, "classifier"));
    o.max_iterations = static_cast<int>(get_number(in, "max_iterations", 30, "classifier"));
    c.breakpoints.jump_factor = get_number(in, "jump_factor", 10.0, "classifier");
    c.breakpoints.window = static_cast<std::size_t>(get_number(in, "window", 8, "classifier"));
    for (const char* flag : {"detect_breakpoints", "equivalence"})
      if (in.contains(flag) && !in[flag].is_boolean())
        config_error(std::string("classifier.") + flag + " must be a boolean");
    c.breakpoints.detect = in.value("detect_breakpoints", true);
    c.equivalence = in.value("equivalence", true);
    if (!(o.residual_threshold > 0.0) || !(o.q_zero_tol >= 0.0) || o.random_starts < 0 ||
        o.max_iterations < 1 || !(o.charge_bound > 0.0) || !(o.shooting_tol > 0.0))
      config_error("classifier settings out of range");
  }
  c.classifier.fd_scale = c.fd_scale;

  if (j.contains("curve")) {
    if (!j["curve"].is_string()) config_error("curve must be a path");
    c.curve = j["curve"].get<std::string>();
  }
  if (j.contains("field_check")) {
    const auto& in = j["field_check"];
    allow_keys(in, "field_check", {"points", "box"});
    c.points = static_cast<std::size_t>(get_number(in, "points", 16, "field_check"));
    c.box = get_number(in, "box", 2.0, "field_check");
    if (c.points < 1 || !(c.box > 0.0)) config_error("field_check settings out of range");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (req.seed) c.seed = req.seed;
  if (j.contains("output")) {
    if (!j["output"].is_string()) config_error("output must be a path");
    c.output = j["output"].get<std::string>();
  }

  if ((c.command == "classify" || c.command == "check-field") && !c.seed)
    config_error("seed is required for " + c.command);
  if (c.command == "classify" && !c.curve) config_error("classify needs a curve file");
  const bool needs_initial = c.command == "simulate-bundle" || c.command == "simulate-base" ||
                             c.command == "compare" || (c.command == "lift" && !c.curve);
  if (needs_initial && (!c.x0 || !c.v0)) config_error(c.command + " needs initial.x0 and initial.v0");
  if ((c.command == "simulate-base" || c.command == "lift") && !c.charge)
    config_error(c.command + " needs initial.Q");
  if (c.seed) c.classifier.seed = *c.seed;
  return c;
}

ojson effective_config(const Config& c) {
  ojson j;
  j["command"] = c.command;
  ojson params = ojson::object();
  for (const auto& [k, v] : c.params) params[k] = v;
  j["scenario"] = {{"name", c.scenario}, {"params", params}};
  j["metric"] = {{"kind", c.metric_kind}, {"a", c.metric_a}};
  ojson initial = ojson::object();
  if (c.x0) initial["x0"] = vec(*c.x0);
  if (c.v0) initial["v0"] = vec(*c.v0);
  if (c.charge) initial["Q"] = vec(*c.charge);
  if (c.fiber.size()) initial["fiber"] = vec(c.fiber);
  if (c.fiber_velocity) initial["fiber_velocity"] = vec(*c.fiber_velocity);
  j["initial"] = initial;
  j["integrator"] = {{"tol", c.tol}, {"s_max", c.s_max}, {"samples", c.samples},
                     {"fd_scale", c.fd_scale}};
  const auto& o = c.classifier;
  j["classifier"] = {{"residual_threshold", o.residual_threshold},
                     {"q_zero_tol", o.q_zero_tol},
                     {"timelike_margin", o.timelike_margin},
                     {"joint_tol", o.joint_tol},
                     {"min_samples", o.min_samples},
                     {"random_starts", o.random_starts},
                     {"max_iterations", o.max_iterations},
                     {"shooting_tol", o.shooting_tol},
                     {"charge_bound", o.charge_bound},
                     {"detect_breakpoints", c.breakpoints.detect},
                     {"jump_factor", c.breakpoints.jump_factor},
                     {"window", c.breakpoints.window},
                     {"equivalence", c.equivalence}};
  if (c.curve) j["curve"] = *c.curve;
  j["field_check"] = {{"points", c.points}, {"box", c.box}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Outputs, collected in memory and written only after the command succeeds

struct Artifacts {
  std::map<std::string, std::string> files;
  ojson report = ojson::object();
  std::vector<std::pair<std::string, std::string>> plots;  // file, title

  void csv(const std::string& name, const std::string& text) { files[name] = text; }
  void plot(const std::string& name, const std::string& title, const std::string& xlabel,
            const std::string& ylabel, const std::vector<std::pair<double, double>>& pts) {
    std::ostringstream out;
    out << xlabel << ',' << ylabel << '\n';
    for (const auto& [x, y] : pts) out << io::format_double(x) << ',' << io::format_double(y) << '\n';
    files[name] = out.str();
    plots.emplace_back(name, title);
  }
};

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream out;
  io::write_csv(out, t);
  return out.str();
}

std::string bundle_csv(const BundleTrajectory& t) {
  std::ostringstream out;
  io::write_bundle_csv(out, t);
  return out.str();
}

ojson stats_json(const IntegratorStats& s) {
  return {{"tol", s.tol},
          {"accepted_steps", s.accepted},
          {"rejected_steps", s.rejected},
          {"rhs_evaluations", s.rhs_evals},
          {"recenterings", s.recenterings}};
}

void base_plots(Artifacts& a, const Trajectory& t, const std::string& prefix) {
  std::vector<std::pair<double, double>> xy, tx;
  for (const auto& smp : t.samples) {
    xy.emplace_back(smp.x[1], smp.x[2]);
    tx.emplace_back(smp.s, smp.x[0]);
  }
  a.plot(prefix + "_x1_x2.csv", prefix + ": x1 vs x2", "x1", "x2", xy);
  a.plot(prefix + "_s_x0.csv", prefix + ": s vs x0", "s", "x0", tx);
}

GroupElement initial_fiber(const Config& c, const GaugeFieldConfig& cfg) {
  if (c.fiber.size() == 0) return GroupElement::identity(cfg.group());
  if (c.fiber.size() != static_cast<Eigen::Index>(cfg.dim())) config_error("initial.fiber must have dim G entries");
  return exp_map({cfg.group(), c.fiber});
}

LieAlgebraElement algebra(const AlgebraCoeffs& v, const GaugeFieldConfig& cfg, const char* what) {
  if (v.size() != static_cast<Eigen::Index>(cfg.dim()))
    config_error(std::string(what) + " must have " + std::to_string(cfg.dim()) + " entries");
  return {cfg.group(), v};
}

std::pair<BundlePoint, BundleVelocity> bundle_initial(const Config& c, const GaugeFieldConfig& cfg) {
  const BundlePoint p{*c.x0, initial_fiber(c, cfg)};
  if (c.fiber_velocity) return {p, {*c.v0, algebra(*c.fiber_velocity, cfg, "initial.fiber_velocity")}};
  const auto q = c.charge ? algebra(*c.charge, cfg, "initial.Q") : LieAlgebraElement::zero(cfg.group());
  return {p, velocity_with_charge(cfg, p, *c.v0, q)};
}

void cmd_simulate_bundle(const Config& c, const GaugeFieldConfig& cfg, const BaseMetric& m,
                         Artifacts& a) {
  const auto [p0, w0] = bundle_initial(c, cfg);
  const auto traj = integrate_bundle_geodesic(
      cfg, m, p0, w0, c.s_max, {.tol = c.tol, .samples = c.samples, .fd_scale = c.fd_scale, .chart_anchor = {}});
  const auto charges = charge_along(cfg, traj);
  const double h0 = kk_metric(cfg, m, p0, w0, w0);
  double norm_drift = 0.0;
  std::vector<std::pair<double, double>> drift;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& smp = traj.samples[i];
    norm_drift = std::max(norm_drift, std::abs(kk_metric(cfg, m, smp.p, smp.w, smp.w) - h0));
    drift.emplace_back(smp.s, (charges.charge[i] - charges.charge.front()).norm());
  }
  const auto base = project(traj);
  a.csv("bundle.csv", bundle_csv(traj));
  a.csv("trajectory.csv", trajectory_csv(base));
  a.files["trajectory.json"] = io::to_json(base).dump(1) + "\n";
  base_plots(a, base, "base");
  a.plot("charge_drift.csv", "|omega(s) - omega(0)|", "s", "charge_drift", drift);
  a.report = {{"charge", vec(charges.charge.front().coeffs())},
              {"charge_drift", num(charges.max_deviation)},
              {"bundle_norm", num(h0)},
              {"bundle_norm_drift", num(norm_drift)},
              {"stats", stats_json(traj.stats)}};
}

void cmd_simulate_base(const Config& c, const GaugeFieldConfig& cfg, const BaseMetric& m,
                       Artifacts& a) {
  const auto q = algebra(*c.charge, cfg, "initial.Q");
  const auto traj = integrate_charged_motion(
      cfg, m, {*c.x0, *c.v0, q}, c.s_max, {.tol = c.tol, .samples = c.samples, .fd_scale = c.fd_scale});
  const double g0 = m.dot(traj.samples.front().x, traj.samples.front().v, traj.samples.front().v);
  const double k0 = cfg.form()(q, q);
  double g_drift = 0.0, k_drift = 0.0;
  std::vector<std::pair<double, double>> norm;
  for (const auto& smp : traj.samples) {
    const double g = m.dot(smp.x, smp.v, smp.v);
    const LieAlgebraElement qs(cfg.group(), smp.q);
    g_drift = std::max(g_drift, std::abs(g - g0));
    k_drift = std::max(k_drift, std::abs(cfg.form()(qs, qs) - k0));
    norm.emplace_back(smp.s, g - g0);
  }
  a.csv("trajectory.csv", trajectory_csv(traj));
  a.files["trajectory.json"] = io::to_json(traj).dump(1) + "\n";
  base_plots(a, traj, "base");
  a.plot("norm_drift.csv", "g(v,v) - g(v0,v0)", "s", "norm_drift", norm);
  a.report = {{"charge", vec(q.coeffs())},
              {"form_scale", cfg.form().c()},
              {"velocity_norm", num(g0)},
              {"velocity_norm_drift", num(g_drift)},
              {"charge_norm_drift", num(k_drift)},
              {"stats", stats_json(traj.stats)}};
}

void cmd_lift(const Config& c, const GaugeFieldConfig& cfg, const BaseMetric& m, Artifacts& a) {
  const auto q = algebra(*c.charge, cfg, "initial.Q");
  Trajectory base;
  if (c.curve) {
    const auto curve = io::read_curve((c.base_dir / *c.curve).string(), {.detect = false});
    if (curve.segments.size() != 1) fail(ErrorKind::InvalidInput, "lift needs a single-segment curve");
    base = with_fd_velocities(curve.segments.front());
  } else {
    base = integrate_charged_motion(cfg, m, {*c.x0, *c.v0, q}, c.s_max,
                                    {.tol = c.tol, .samples = c.samples, .fd_scale = c.fd_scale});
  }
  const auto lift = geodesic_lift(cfg, base, q, initial_fiber(c, cfg), {.tol = std::min(c.tol, 1e-10)});
  const auto charges = charge_along(cfg, lift);
  const auto res = bundle_geodesic_residual(cfg, m, lift, c.fd_scale);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < res.index.size(); ++i)
    pts.emplace_back(lift.samples[res.index[i]].s, res.residual[i]);
  a.csv("lift.csv", bundle_csv(lift));
  a.plot("lift_residual.csv", "bundle geodesic residual of the lift", "s", "residual", pts);
  a.report = {{"charge", vec(q.coeffs())},
              {"charge_deviation", num(charges.max_deviation)},
              {"geodesic_residual_max", num(res.max)},
              {"geodesic_residual_rms", num(res.rms)},
              {"geodesic_residual_normalized", num(res.normalized)},
              {"stats", stats_json(lift.stats)}};
}

void cmd_compare(const Config& c, const GaugeFieldConfig& cfg, const BaseMetric& m, Artifacts& a) {
  const auto [p0, w0] = bundle_initial(c, cfg);
  const auto r = compare_projection(cfg, m, p0, w0, c.s_max,
                                    {.tol = c.tol, .samples = c.samples, .fd_scale = c.fd_scale, .chart_anchor = {}});
  std::vector<std::pair<double, double>> dev;
  for (std::size_t i = 0; i < r.base.size(); ++i)
    dev.emplace_back(r.base.samples[i].s, (r.base.samples[i].x - r.bundle.samples[i].p.base).norm());
  a.csv("bundle.csv", bundle_csv(r.bundle));
  a.csv("trajectory.csv", trajectory_csv(r.base));
  a.files["trajectory.json"] = io::to_json(r.base).dump(1) + "\n";
  base_plots(a, r.base, "base");
  a.plot("deviation.csv", "|x_bundle(s) - x_direct(s)|", "s", "deviation", dev);
  a.report = to_json(r);
}

void cmd_classify(const Config& c, const GaugeFieldConfig& cfg, const BaseMetric& m, Artifacts& a) {
  // A curve the classifier cannot work with is a classification failure,
  // not a config error.
  try {
    const auto curve = io::read_curve((c.base_dir / *c.curve).string(), c.breakpoints);
    if (c.equivalence)
      a.report = to_json(equivalence_check(cfg, m, curve, c.classifier));
    else
      a.report = to_json(classify(cfg, m, curve, c.classifier));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidInput) throw;
    fail(ErrorKind::Classification, std::string("curve rejected: ") + e.what());
  }
  std::vector<std::pair<double, double>> res;
  const auto& segs = c.equivalence ? a.report["classification"]["segments"] : a.report["segments"];
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& fit = segs[k]["fit"];
    const double r = fit.is_null() ? std::numeric_limits<double>::infinity()
                     : fit["residual"].is_string() ? std::numeric_limits<double>::infinity()
                                                    : fit["residual"].get<double>();
    res.emplace_back(static_cast<double>(k), r);
  }
  a.plot("segment_residuals.csv", "dynamics residual per segment", "segment", "residual", res);
}

void cmd_check_field(const Config& c, const GaugeFieldConfig& cfg, Artifacts& a) {
  std::mt19937_64 rng(*c.seed);
  auto draw = [&] { return c.box * (2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0); };
  double worst_fd = 0.0, worst_bianchi = 0.0;
  auto points = ojson::array();
  std::vector<std::pair<double, double>> pts;
  std::size_t attempts = 0;
  while (points.size() < c.points) {
    if (++attempts > 1000 * c.points) fail(ErrorKind::Scenario, "field domain too small for the sample box");
    const Vec4 x(draw(), draw(), draw(), draw());
    if (!cfg.in_domain(x)) continue;
    // Keep the finite-difference stencils inside the domain as well.
    bool inside = true;
    for (int mu = 0; mu < 4 && inside; ++mu)
      for (double sgn : {-1.0, 1.0}) {
        Vec4 y = x;
        y[mu] += sgn * 1e3 * fd_step(x[mu], c.fd_scale);
        inside = inside && cfg.in_domain(y);
      }
    if (!inside) continue;
    double fd_gap = 0.0;
    if (cfg.has_analytic_curvature()) {
      const auto fa = cfg.analytic_curvature(x);
      const auto ff = curvature_fd(cfg, x, c.fd_scale);
      for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu) fd_gap = std::max(fd_gap, (fa(mu, nu) - ff(mu, nu)).norm());
    }
    const double bianchi = bianchi_residual(cfg, x, c.fd_scale);
    worst_fd = std::max(worst_fd, fd_gap);
    worst_bianchi = std::max(worst_bianchi, bianchi);
    pts.emplace_back(static_cast<double>(points.size()), bianchi);
    points.push_back({{"x", vec(x)}, {"curvature_fd_gap", num(fd_gap)}, {"bianchi", num(bianchi)}});
  }
  a.plot("bianchi.csv", "Bianchi residual per sample point", "point", "bianchi", pts);
  a.report = {{"analytic_curvature", cfg.has_analytic_curvature()},
              {"fd_scale", c.fd_scale},
              {"curvature_fd_gap_max", num(worst_fd)},
              {"bianchi_max", num(worst_bianchi)},
              {"points", points}};
}

std::string gnuplot_script(const Artifacts& a) {
  std::ostringstream out;
  out << "# gnuplot -persist plot.gp\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set terminal pngcairo size 900,600\n";
  for (const auto& [file, title] : a.plots) {
    const std::string png = fs::path(file).replace_extension(".png").string();
    out << "set output '" << png << "'\n"
        << "set title '" << title << "'\n"
        << "plot '" << file << "' using 1:2 with lines\n";
  }
  return out.str();
}

fs::path choose_out_dir(const Config& c, const RunRequest& req, const std::string& hash) {
  if (req.out_dir) return *req.out_dir;
  if (c.output) return c.base_dir / *c.output;
  const char* root = std::getenv("KKZ_OUTPUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("kkz-runs");
  return base / (c.command + "-" + hash.substr(0, 12));
}

void write_run(const fs::path& dir, const Artifacts& a, const ojson& manifest_base) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir.string() + "': " + ec.message());
  std::map<std::string, std::string> files = a.files;
  files["report.json"] = a.report.dump(1) + "\n";
  if (!a.plots.empty()) files["plot.gp"] = gnuplot_script(a);
  ojson manifest = manifest_base;
  auto listing = ojson::array();
  for (const auto& [name, text] : files)
    listing.push_back({{"name", name}, {"bytes", text.size()}, {"fnv1a64", fnv1a_hex(text)}});
  manifest["files"] = listing;
  files["manifest.json"] = manifest.dump(1) + "\n";
  for (const auto& [name, text] : files) io::write_text((dir / name).string(), text);
}

ojson tolerances_json(const Config& c) {
  return {{"integrator_tol", c.tol},
          {"fd_scale", c.fd_scale},
          {"residual_threshold", c.classifier.residual_threshold},
          {"q_zero_tol", c.classifier.q_zero_tol},
          {"timelike_margin", c.classifier.timelike_margin},
          {"joint_tol", c.classifier.joint_tol},
          {"shooting_tol", c.classifier.shooting_tol},
          {"charge_bound", c.classifier.charge_bound}};
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Scenario:
      return 3;
    case ErrorKind::Integration:
    case ErrorKind::ChartDomain:
    case ErrorKind::Geometry:
    case ErrorKind::Lift:
      return 4;
    case ErrorKind::Classification:
      return 5;
    case ErrorKind::Io:
      return 6;
  }
  return 1;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ojson to_json(const ClassificationReport& r) {
  ojson j;
  j["verdict"] = to_string(r.verdict);
  auto segs = ojson::array();
  for (const auto& s : r.segments) {
    ojson seg = {{"samples", s.samples},
                 {"timelike", s.timelike},
                 {"min_margin", num(s.min_margin)},
                 {"accepted", s.accepted},
                 {"reason", s.reason}};
    if (s.fit) {
      ojson fit = {{"charge", vec(s.fit->charge.coeffs())},
                   {"charge_norm", num(s.fit->charge.norm())},
                   {"residual", num(s.fit->residual)},
                   {"converged", s.fit->converged},
                   {"starts_tried", s.fit->starts_tried}};
      if (s.fit->trajectory_mismatch) fit["trajectory_mismatch"] = num(*s.fit->trajectory_mismatch);
      seg["fit"] = fit;
    } else {
      seg["fit"] = nullptr;
    }
    segs.push_back(seg);
  }
  j["segments"] = segs;
  auto jumps = ojson::array();
  for (double d : r.charge_jumps) jumps.push_back(num(d));
  j["charge_jumps"] = jumps;
  const auto& o = r.tolerances;
  j["tolerances"] = {{"residual_threshold", o.residual_threshold},
                     {"q_zero_tol", o.q_zero_tol},
                     {"timelike_margin", o.timelike_margin},
                     {"joint_tol", o.joint_tol},
                     {"min_samples", o.min_samples},
                     {"seed", o.seed},
                     {"random_starts", o.random_starts},
                     {"charge_bound", o.charge_bound}};
  return j;
}

ojson to_json(const EquivalenceReport& r) {
  auto lifts = ojson::array();
  for (double d : r.lift_residuals) lifts.push_back(num(d));
  return {{"verdict_a", r.verdict_a},
          {"verdict_b", r.verdict_b},
          {"agree", r.agree},
          {"lift_residuals", lifts},
          {"classification", to_json(r.classification)}};
}

ojson to_json(const DeviationReport& r) {
  return {{"charge", vec(r.charge.coeffs())},
          {"position_deviation", num(r.position_deviation)},
          {"velocity_deviation", num(r.velocity_deviation)},
          {"bundle_charge_drift", num(r.bundle_charge_drift)},
          {"bundle_norm_drift", num(r.bundle_norm_drift)},
          {"base_norm_drift", num(r.base_norm_drift)},
          {"base_charge_norm_drift", num(r.base_charge_norm_drift)},
          {"gauge_charge_mismatch", num(r.gauge_charge_mismatch)},
          {"norm_split_defect", num(r.norm_split_defect)},
          {"bundle_stats", stats_json(r.bundle.stats)},
          {"base_stats", stats_json(r.base.stats)}};
}

RunResult run(const RunRequest& request) {
  RunResult result;
  try {
    std::string text;
    fs::path base_dir = ".";
    if (request.config_text) {
      text = *request.config_text;
    } else {
      std::ifstream in(request.config_path, std::ios::binary);
      if (!in) fail(ErrorKind::Config, "cannot read config '" + request.config_path + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
      base_dir = fs::path(request.config_path).parent_path();
      if (base_dir.empty()) base_dir = ".";
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    const Config c = parse_config(j, request, base_dir);
    const auto cfg = scenario(c.scenario, c.params);
    const auto m = make_metric(c);

    const ojson effective = effective_config(c);
    const std::string hash = fnv1a_hex(nlohmann::json(effective).dump());
    Artifacts a;
    if (c.command == "simulate-bundle") cmd_simulate_bundle(c, cfg, m, a);
    else if (c.command == "simulate-base") cmd_simulate_base(c, cfg, m, a);
    else if (c.command == "lift") cmd_lift(c, cfg, m, a);
    else if (c.command == "compare") cmd_compare(c, cfg, m, a);
    else if (c.command == "classify") cmd_classify(c, cfg, m, a);
    else cmd_check_field(c, cfg, a);

    const fs::path dir = choose_out_dir(c, request, hash);
    ojson manifest = {{"tool", "kkz"},
                      {"version", kVersion},
                      {"command", c.command},
                      {"config_hash", hash},
                      {"seed", c.seed ? ojson(*c.seed) : ojson(nullptr)},
                      {"group", std::string(to_string(cfg.group()))},
                      {"form_scale", cfg.form().c()},
                      {"tolerances", tolerances_json(c)},
                      {"config", effective}};
    write_run(dir, a, manifest);

    result.out_dir = dir.string();
    result.summary = {{"status", "ok"},
                      {"command", c.command},
                      {"output", result.out_dir},
                      {"config_hash", hash},
                      {"report", a.report}};
  } catch (const Error& e) {
    result.exit_code = exit_code(e.kind());
    result.category = e.kind() == ErrorKind::InvalidInput ? "config" : to_string(e.kind());
    if (result.exit_code == 4) result.category = "integration";
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = 6;
    result.category = "io";
    result.message = e.what();
  }
  if (result.exit_code != 0)
    result.summary = {{"status", "error"},
                      {"category", result.category},
                      {"exit_code", result.exit_code},
                      {"message", result.message}};
  return result;
}

}  // namespace kkz
