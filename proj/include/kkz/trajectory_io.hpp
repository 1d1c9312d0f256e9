#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "kkz/kk_bundle.hpp"
#include "kkz/trajectory.hpp"
#include "kkz/zeeman.hpp"

namespace kkz::io {

/// "%.17g", with inf, -inf and nan spelled out.
std::string format_double(double value);

/// Header `s,x0,x1,x2,x3,v0,v1,v2,v3[,q1..qd]`; position-only trajectories
/// omit the v columns.
void write_csv(std::ostream& out, const Trajectory& t);
/// Accepts the layout written by write_csv; rows with a repeated s are kept
/// as they are (see split_polygonal).
Trajectory read_csv(std::istream& in);

/// `s,x0..x3,v0..v3,<fiber>,xi1..xid` where the fiber is (re, im) for U(1)
/// and the first row (a_re, a_im, b_re, b_im) for SU(2).
void write_bundle_csv(std::ostream& out, const BundleTrajectory& t);

/// Column-oriented JSON variant with metadata.
nlohmann::ordered_json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// Curves as JSON: either {"segments": [trajectory, ...]} or one trajectory
/// that is split like CSV input.
PolygonalCurve curve_from_json(const nlohmann::json& j, const BreakpointOptions& options = {});

/// Segments one after another; consecutive segments share their joint
/// parameter, so the repeated s marks the breakpoint on re-reading.
void write_curve_csv(std::ostream& out, const PolygonalCurve& curve);
nlohmann::ordered_json curve_to_json(const PolygonalCurve& curve);

/// Reads a curve from a .csv or .json file; Io error when unreadable.
PolygonalCurve read_curve(const std::string& path, const BreakpointOptions& options = {});

/// Writes text atomically enough for a run directory (write then rename).
void write_text(const std::string& path, const std::string& text);

}  // namespace kkz::io
