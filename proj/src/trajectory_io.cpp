#include "kkz/trajectory_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kkz/error.hpp"

namespace kkz::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& text, std::size_t row) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size())
    fail(ErrorKind::InvalidInput, "row " + std::to_string(row) + ": not a number: '" + text + "'");
  return v;
}

std::vector<std::string> trajectory_columns(const Trajectory& t) {
  std::vector<std::string> cols = {"s", "x0", "x1", "x2", "x3"};
  if (t.has_velocity)
    for (const char* c : {"v0", "v1", "v2", "v3"}) cols.emplace_back(c);
  const auto d = t.empty() ? 0 : t.samples.front().q.size();
  for (Eigen::Index a = 0; a < d; ++a) cols.push_back("q" + std::to_string(a + 1));
  return cols;
}

std::vector<double> row_values(const Trajectory& t, const TrajectorySample& smp) {
  std::vector<double> row = {smp.s, smp.x[0], smp.x[1], smp.x[2], smp.x[3]};
  if (t.has_velocity) row.insert(row.end(), {smp.v[0], smp.v[1], smp.v[2], smp.v[3]});
  for (Eigen::Index a = 0; a < smp.q.size(); ++a) row.push_back(smp.q[a]);
  return row;
}

// Column layout check shared by CSV and JSON readers; returns (has_v, d).
std::pair<bool, int> parse_columns(const std::vector<std::string>& cols) {
  const std::vector<std::string> base = {"s", "x0", "x1", "x2", "x3"};
  if (cols.size() < base.size() || !std::equal(base.begin(), base.end(), cols.begin()))
    fail(ErrorKind::InvalidInput, "columns must start with s,x0,x1,x2,x3");
  std::size_t k = base.size();
  bool has_v = false;
  if (cols.size() >= k + 4 && cols[k] == "v0") {
    for (int mu = 0; mu < 4; ++mu)
      if (cols[k + mu] != "v" + std::to_string(mu))
        fail(ErrorKind::InvalidInput, "velocity columns must be v0,v1,v2,v3");
    has_v = true;
    k += 4;
  }
  int d = 0;
  for (; k < cols.size(); ++k, ++d)
    if (cols[k] != "q" + std::to_string(d + 1))
      fail(ErrorKind::InvalidInput, "unexpected column '" + cols[k] + "'");
  return {has_v, d};
}

TrajectorySample sample_from_row(const std::vector<double>& row, bool has_v, int d) {
  TrajectorySample smp;
  smp.s = row[0];
  smp.x = Vec4(row[1], row[2], row[3], row[4]);
  std::size_t k = 5;
  if (has_v) {
    smp.v = Vec4(row[5], row[6], row[7], row[8]);
    k = 9;
  }
  smp.q.resize(d);
  for (int a = 0; a < d; ++a) smp.q[a] = row[k + a];
  return smp;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_csv(std::ostream& out, const Trajectory& t) {
  const auto cols = trajectory_columns(t);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& smp : t.samples) {
    const auto row = row_values(t, smp);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

Trajectory read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::InvalidInput, "empty CSV input");
  const auto [has_v, d] = parse_columns(split(line));
  const std::size_t width = 5 + (has_v ? 4 : 0) + static_cast<std::size_t>(d);
  Trajectory t;
  t.has_velocity = has_v;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != width)
      fail(ErrorKind::InvalidInput, "row " + std::to_string(row_no) + ": expected " +
                                        std::to_string(width) + " columns");
    std::vector<double> row;
    row.reserve(width);
    for (const auto& c : cells) row.push_back(parse_double(c, row_no));
    t.samples.push_back(sample_from_row(row, has_v, d));
  }
  return t;
}

void write_bundle_csv(std::ostream& out, const BundleTrajectory& t) {
  const int d = algebra_dim(t.group);
  out << "s,x0,x1,x2,x3,v0,v1,v2,v3";
  if (t.group == GroupId::U1)
    out << ",g_re,g_im";
  else
    out << ",a_re,a_im,b_re,b_im";
  for (int a = 0; a < d; ++a) out << ",xi" << a + 1;
  out << '\n';
  for (const auto& smp : t.samples) {
    std::vector<double> row = {smp.s};
    for (int mu = 0; mu < 4; ++mu) row.push_back(smp.p.base[mu]);
    for (int mu = 0; mu < 4; ++mu) row.push_back(smp.w.base[mu]);
    const GroupMatrix& g = smp.p.fiber.matrix();
    row.push_back(g(0, 0).real());
    row.push_back(g(0, 0).imag());
    if (t.group == GroupId::SU2) {
      row.push_back(g(0, 1).real());
      row.push_back(g(0, 1).imag());
    }
    for (int a = 0; a < d; ++a) row.push_back(smp.w.fiber[a]);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const Trajectory& t) {
  nlohmann::ordered_json j;
  j["format"] = "kkz-trajectory";
  j["version"] = 1;
  j["columns"] = trajectory_columns(t);
  j["stats"] = {{"tol", t.stats.tol},
                {"accepted_steps", t.stats.accepted},
                {"rejected_steps", t.stats.rejected},
                {"rhs_evaluations", t.stats.rhs_evals}};
  auto rows = nlohmann::ordered_json::array();
  for (const auto& smp : t.samples) {
    auto row = nlohmann::ordered_json::array();
    // Non-finite values have no JSON literal; they are written as strings.
    for (double v : row_values(t, smp)) {
      if (std::isfinite(v))
        row.push_back(v);
      else
        row.push_back(format_double(v));
    }
    rows.push_back(std::move(row));
  }
  j["samples"] = std::move(rows);
  return j;
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    const auto cols = j.at("columns").get<std::vector<std::string>>();
    const auto [has_v, d] = parse_columns(cols);
    Trajectory t;
    t.has_velocity = has_v;
    std::size_t row_no = 0;
    for (const auto& r : j.at("samples")) {
      ++row_no;
      if (!r.is_array() || r.size() != cols.size())
        fail(ErrorKind::InvalidInput, "sample " + std::to_string(row_no) + " has wrong width");
      std::vector<double> row;
      for (const auto& v : r)
        row.push_back(v.is_string() ? parse_double(v.get<std::string>(), row_no) : v.get<double>());
      t.samples.push_back(sample_from_row(row, has_v, d));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("trajectory JSON: ") + e.what());
  }
}

PolygonalCurve curve_from_json(const nlohmann::json& j, const BreakpointOptions& options) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "curve JSON must be an object");
  if (!j.contains("segments")) return split_polygonal(trajectory_from_json(j), options);
  PolygonalCurve c;
  std::size_t offset = 0;
  for (const auto& seg : j.at("segments")) {
    if (!c.segments.empty()) c.breakpoints.push_back(offset);
    c.segments.push_back(trajectory_from_json(seg));
    offset += c.segments.back().size();
  }
  return c;
}

void write_curve_csv(std::ostream& out, const PolygonalCurve& curve) {
  if (curve.segments.empty()) fail(ErrorKind::InvalidInput, "curve has no segments");
  Trajectory all;
  all.has_velocity = curve.segments.front().has_velocity;
  for (const auto& seg : curve.segments) {
    if (seg.has_velocity != all.has_velocity)
      fail(ErrorKind::InvalidInput, "segments disagree on velocity columns");
    all.samples.insert(all.samples.end(), seg.samples.begin(), seg.samples.end());
  }
  write_csv(out, all);
}

nlohmann::ordered_json curve_to_json(const PolygonalCurve& curve) {
  auto segs = nlohmann::ordered_json::array();
  for (const auto& seg : curve.segments) segs.push_back(to_json(seg));
  return {{"format", "kkz-curve"}, {"version", 1}, {"segments", segs}};
}

PolygonalCurve read_curve(const std::string& path, const BreakpointOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open curve file '" + path + "'");
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".json") {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::InvalidInput, "curve file '" + path + "': " + e.what());
    }
    return curve_from_json(j, options);
  }
  return split_polygonal(read_csv(in), options);
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move '" + tmp + "' into place: " + ec.message());
}

}  // namespace kkz::io
