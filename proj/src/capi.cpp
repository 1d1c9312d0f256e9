#include "kkz/kkzeeman.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "kkz/base_dynamics.hpp"
#include "kkz/kk_bundle.hpp"
#include "kkz/runner.hpp"
#include "kkz/trajectory_io.hpp"
#include "kkz/zeeman.hpp"

struct kkz_field {
  kkz::GaugeFieldConfig cfg;
};

struct kkz_trajectory {
  kkz::Trajectory traj;
};

namespace {

thread_local std::string last_error;

kkz_status status_of(kkz::ErrorKind kind) { return static_cast<kkz_status>(static_cast<int>(kind)); }

template <class F>
kkz_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return KKZ_OK;
  } catch (const kkz::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return KKZ_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return KKZ_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) kkz::fail(kkz::ErrorKind::InvalidInput, what);
}

kkz::BaseMetric metric_of(const char* kind, double a) {
  const std::string k = kind ? kind : "minkowski";
  if (k == "minkowski") return kkz::BaseMetric::minkowski();
  if (k == "exp-lapse") return kkz::BaseMetric::exp_lapse(a);
  if (k == "linear-lapse") return kkz::BaseMetric::linear_lapse(a);
  kkz::fail(kkz::ErrorKind::Config, "unknown metric kind '" + k + "'");
}

kkz::Vec4 vec4(const double* p) { return kkz::Vec4(p[0], p[1], p[2], p[3]); }

kkz::LieAlgebraElement charge_of(const kkz::GaugeFieldConfig& cfg, const double* q) {
  kkz::AlgebraCoeffs c(cfg.dim());
  for (int a = 0; a < cfg.dim(); ++a) c[a] = q ? q[a] : 0.0;
  return {cfg.group(), c};
}

kkz_integrator options_of(const kkz_integrator* opts) {
  kkz_integrator o;
  kkz_integrator_defaults(&o);
  return opts ? *opts : o;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* kkz_version(void) { return kkz::kVersion; }

const char* kkz_status_name(kkz_status status) {
  if (status == KKZ_OK) return "ok";
  if (status == KKZ_ERR_INTERNAL) return "internal";
  if (status < KKZ_OK || status > KKZ_ERR_INTERNAL) return "unknown";
  return kkz::to_string(static_cast<kkz::ErrorKind>(status));
}

const char* kkz_last_error(void) { return last_error.c_str(); }

void kkz_integrator_defaults(kkz_integrator* opts) {
  if (!opts) return;
  opts->tol = 1e-9;
  opts->s_max = 10.0;
  opts->samples = 512;
  opts->fd_scale = kkz::kDefaultFdScale;
}

kkz_status kkz_field_create(const char* scenario, const char* params_json, kkz_field** out) {
  return guarded([&] {
    require(scenario && out, "scenario name and output handle are required");
    kkz::ScenarioParams params;
    if (params_json) {
      const auto j = nlohmann::json::parse(params_json, nullptr, false);
      if (j.is_discarded() || !j.is_object())
        kkz::fail(kkz::ErrorKind::Config, "params must be a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) kkz::fail(kkz::ErrorKind::Config, "parameter '" + key + "' must be a number");
        params[key] = value.get<double>();
      }
    }
    *out = new kkz_field{kkz::scenario(scenario, params)};
  });
}

void kkz_field_destroy(kkz_field* field) { delete field; }

int kkz_field_dim(const kkz_field* field) { return field ? field->cfg.dim() : 0; }

kkz_status kkz_field_curvature(const kkz_field* field, const double x[4], double fd_scale,
                               double* out) {
  return guarded([&] {
    require(field && x && out, "null argument");
    const auto f = kkz::curvature(field->cfg, vec4(x), fd_scale);
    const int d = field->cfg.dim();
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) {
        const auto c = f(mu, nu);
        for (int a = 0; a < d; ++a) out[(4 * mu + nu) * d + a] = c[a];
      }
  });
}

kkz_status kkz_field_bianchi(const kkz_field* field, const double x[4], double fd_scale,
                             double* out) {
  return guarded([&] {
    require(field && x && out, "null argument");
    *out = kkz::bianchi_residual(field->cfg, vec4(x), fd_scale);
  });
}

kkz_status kkz_simulate_base(const kkz_field* field, const char* metric, double a,
                             const double x0[4], const double v0[4], const double* charge,
                             const kkz_integrator* opts, kkz_trajectory** out) {
  return guarded([&] {
    require(field && x0 && v0 && out, "null argument");
    const auto o = options_of(opts);
    const auto m = metric_of(metric, a);
    auto traj = kkz::integrate_charged_motion(
        field->cfg, m, {vec4(x0), vec4(v0), charge_of(field->cfg, charge)}, o.s_max,
        {.tol = o.tol, .samples = o.samples, .fd_scale = o.fd_scale});
    *out = new kkz_trajectory{std::move(traj)};
  });
}

kkz_status kkz_simulate_bundle(const kkz_field* field, const char* metric, double a,
                               const double x0[4], const double v0[4], const double* theta,
                               const double* charge, const kkz_integrator* opts,
                               kkz_trajectory** out) {
  return guarded([&] {
    require(field && x0 && v0 && out, "null argument");
    const auto& cfg = field->cfg;
    const auto o = options_of(opts);
    const auto m = metric_of(metric, a);
    const kkz::GroupElement g0 = theta ? kkz::exp_map(charge_of(cfg, theta))
                                       : kkz::GroupElement::identity(cfg.group());
    const kkz::BundlePoint p0{vec4(x0), g0};
    const auto w0 = kkz::velocity_with_charge(cfg, p0, vec4(v0), charge_of(cfg, charge));
    const auto bundle = kkz::integrate_bundle_geodesic(
        cfg, m, p0, w0, o.s_max,
        {.tol = o.tol, .samples = o.samples, .fd_scale = o.fd_scale, .chart_anchor = {}});
    *out = new kkz_trajectory{kkz::project(bundle)};
  });
}

void kkz_trajectory_destroy(kkz_trajectory* traj) { delete traj; }

size_t kkz_trajectory_size(const kkz_trajectory* traj) { return traj ? traj->traj.size() : 0; }

int kkz_trajectory_charge_dim(const kkz_trajectory* traj) {
  if (!traj || traj->traj.empty()) return 0;
  return static_cast<int>(traj->traj.samples.front().q.size());
}

int kkz_trajectory_has_velocity(const kkz_trajectory* traj) {
  return traj && traj->traj.has_velocity ? 1 : 0;
}

kkz_status kkz_trajectory_sample(const kkz_trajectory* traj, size_t i, double* s, double x[4],
                                 double v[4], double* q) {
  return guarded([&] {
    require(traj != nullptr, "null trajectory");
    if (i >= traj->traj.size()) kkz::fail(kkz::ErrorKind::InvalidInput, "sample index out of range");
    const auto& smp = traj->traj.samples[i];
    if (s) *s = smp.s;
    for (int mu = 0; mu < 4; ++mu) {
      if (x) x[mu] = smp.x[mu];
      if (v) v[mu] = smp.v[mu];
    }
    if (q)
      for (Eigen::Index a = 0; a < smp.q.size(); ++a) q[a] = smp.q[a];
  });
}

kkz_status kkz_trajectory_write_csv(const kkz_trajectory* traj, const char* path) {
  return guarded([&] {
    require(traj && path, "null argument");
    std::ostringstream out;
    kkz::io::write_csv(out, traj->traj);
    kkz::io::write_text(path, out.str());
  });
}

kkz_status kkz_trajectory_read_csv(const char* path, kkz_trajectory** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path);
    if (!in) kkz::fail(kkz::ErrorKind::Io, std::string("cannot open '") + path + "'");
    *out = new kkz_trajectory{kkz::io::read_csv(in)};
  });
}

kkz_status kkz_compare_projection(const kkz_field* field, const char* metric, double a,
                                  const double x0[4], const double v0[4], const double* charge,
                                  const kkz_integrator* opts, char** report_json) {
  return guarded([&] {
    require(field && x0 && v0 && report_json, "null argument");
    const auto& cfg = field->cfg;
    const auto o = options_of(opts);
    const auto m = metric_of(metric, a);
    const kkz::BundlePoint p0{vec4(x0), kkz::GroupElement::identity(cfg.group())};
    const auto w0 = kkz::velocity_with_charge(cfg, p0, vec4(v0), charge_of(cfg, charge));
    const auto r = kkz::compare_projection(
        cfg, m, p0, w0, o.s_max,
        {.tol = o.tol, .samples = o.samples, .fd_scale = o.fd_scale, .chart_anchor = {}});
    *report_json = dup_string(kkz::to_json(r).dump());
  });
}

kkz_status kkz_classify_json(const kkz_field* field, const char* metric, double a,
                             const char* curve_path, uint64_t seed, int equivalence,
                             char** report_json) {
  return guarded([&] {
    require(field && curve_path && report_json, "null argument");
    const auto m = metric_of(metric, a);
    const auto curve = kkz::io::read_curve(curve_path);
    kkz::ClassifierOptions opts;
    opts.seed = seed;
    const auto j = equivalence ? kkz::to_json(kkz::equivalence_check(field->cfg, m, curve, opts))
                               : kkz::to_json(kkz::classify(field->cfg, m, curve, opts));
    *report_json = dup_string(j.dump());
  });
}

void kkz_string_free(char* s) { std::free(s); }

int kkz_run(const char* config_path, const char* out_dir, const uint64_t* seed, const double* tol,
            char** summary_json) {
  kkz::RunRequest req;
  req.config_path = config_path ? config_path : "";
  if (out_dir) req.out_dir = out_dir;
  if (seed) req.seed = *seed;
  if (tol) req.tol = *tol;
  const auto result = kkz::run(req);
  last_error = result.message;
  if (summary_json) {
    try {
      *summary_json = dup_string(result.summary.dump());
    } catch (...) {
      *summary_json = nullptr;
    }
  }
  return result.exit_code;
}

}  // extern "C"
