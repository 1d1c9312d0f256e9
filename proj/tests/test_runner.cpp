#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kkz/runner.hpp"

using namespace kkz;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_text(const std::string& text, const fs::path& out) {
  RunRequest req;
  req.config_text = text;
  req.out_dir = out.string();
  return run(req);
}

const char* kCompare = R"({
  "command": "compare",
  "scenario": {"name": "u1-constant-B", "params": {"B": 0.5}},
  "initial": {"x0": [0, 1, 0.5, 0], "v0": [1.1575836902790224, 0.5, 0.3, 0], "Q": [0.3]},
  "integrator": {"tol": 1e-9, "s_max": 10, "samples": 256}
})";

}  // namespace

TEST_CASE("fnv1a_hex") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("exit codes are distinct per category") {
  CHECK(exit_code(ErrorKind::Config) == 2);
  CHECK(exit_code(ErrorKind::InvalidInput) == 2);
  CHECK(exit_code(ErrorKind::Scenario) == 3);
  CHECK(exit_code(ErrorKind::Integration) == 4);
  CHECK(exit_code(ErrorKind::Lift) == 4);
  CHECK(exit_code(ErrorKind::Classification) == 5);
  CHECK(exit_code(ErrorKind::Io) == 6);
}

TEST_CASE("compare run writes report, trajectories and manifest") {
  TempDir tmp("kkz-runner-compare");
  const auto out = tmp.path / "run";
  const auto r = run_text(kCompare, out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.summary["status"] == "ok");
  CHECK(r.summary["report"]["position_deviation"].get<double>() <= 1e-5);
  for (const auto* f : {"report.json", "manifest.json", "trajectory.csv", "trajectory.json", "bundle.csv",
                        "deviation.csv", "plot.gp"})
    CHECK(fs::exists(out / f));
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["tolerances"]["integrator_tol"] == 1e-9);
  for (const auto& f : manifest["files"])
    CHECK(f["fnv1a64"] == fnv1a_hex(slurp(out / f["name"].get<std::string>())));
  std::string header;
  std::getline(std::istringstream(slurp(out / "trajectory.csv")), header);
  CHECK(header == "s,x0,x1,x2,x3,v0,v1,v2,v3,q1");
}

TEST_CASE("overrides and reproducibility") {
  TempDir tmp("kkz-runner-repro");
  RunRequest req;
  req.config_text = kCompare;
  req.out_dir = (tmp.path / "a").string();
  req.tol = 1e-10;
  REQUIRE(run(req).exit_code == 0);
  req.out_dir = (tmp.path / "b").string();
  REQUIRE(run(req).exit_code == 0);
  const auto manifest = nlohmann::json::parse(slurp(tmp.path / "a" / "manifest.json"));
  CHECK(manifest["tolerances"]["integrator_tol"] == 1e-10);
  for (const auto& entry : fs::directory_iterator(tmp.path / "a"))
    CHECK(slurp(entry.path()) == slurp(tmp.path / "b" / entry.path().filename()));
}

TEST_CASE("failures are categorized and leave no artifacts") {
  TempDir tmp("kkz-runner-errors");
  struct Case {
    std::string config;
    int code;
    std::string category;
  };
  const std::vector<Case> cases = {
      {R"({"command": "simulate-base", "scenario": {"name": "u1-monopole"},
           "initial": {"x0": [0,0,0,0], "v0": [1,0,0,0], "Q": [0.1]}})", 3, "scenario"},
      {R"({"command": "simulate-base", "scenario": {"name": "u1-zero", "params": {"B": 1}},
           "initial": {"x0": [0,0,0,0], "v0": [1,0,0,0], "Q": [0.1]}})", 3, "scenario"},
      {R"({"command": "simulate-base", "scenario": {"name": "u1-zero"}, "colour": 1})", 2, "config"},
      {R"({"command": "simulate", "scenario": {"name": "u1-zero"}})", 2, "config"},
      {R"({"command": "classify", "scenario": {"name": "u1-zero"}, "curve": "c.csv"})", 2, "config"},
      {R"({"command": "simulate-base", "scenario": {"name": "u1-zero"},
           "initial": {"x0": [0,0,0,0], "v0": [1,0,0,0], "Q": [0.1, 0.2]}})", 2, "config"},
      {R"({"command": "classify", "scenario": {"name": "u1-zero"}, "curve": "/nonexistent/c.csv", "seed": 1})", 6, "io"},
      {R"({"command": "simulate-base", "scenario": {"name": "u1-coulomb"},
           "initial": {"x0": [0,2,0,0], "v0": [1,0,0,0], "Q": [1.0]}, "integrator": {"s_max": 50}})", 4, "integration"},
      {"{not json", 2, "config"},
  };
  int k = 0;
  for (const auto& c : cases) {
    const auto out = tmp.path / ("run" + std::to_string(k++));
    const auto r = run_text(c.config, out);
    CAPTURE(c.config);
    CHECK(r.exit_code == c.code);
    CHECK(r.category == c.category);
    CHECK(r.summary["status"] == "error");
    CHECK(r.summary["category"] == c.category);
    CHECK_FALSE(fs::exists(out));
  }
  {
    std::ofstream(tmp.path / "short.csv") << "s,x0,x1,x2,x3\n0,0,0,0,0\n1,1,0,0,0\n2,2,0,0,0\n";
    std::ofstream(tmp.path / "garbage.csv") << "hello\n";
    for (const auto* f : {"short.csv", "garbage.csv"}) {
      const auto out = tmp.path / (std::string("cls-") + f);
      const auto r = run_text(R"({"command": "classify", "scenario": {"name": "u1-zero"}, "seed": 1, "curve": ")" +
                                  (tmp.path / f).string() + R"("})",
                              out);
      CHECK(r.exit_code == 5);
      CHECK(r.category == "classification");
      CHECK_FALSE(fs::exists(out));
    }
  }
  RunRequest missing;
  missing.config_path = (tmp.path / "nope.json").string();
  CHECK(run(missing).exit_code == 2);
}

TEST_CASE("default output root comes from the environment") {
  TempDir tmp("kkz-runner-env");
  ::setenv("KKZ_OUTPUT_ROOT", tmp.path.c_str(), 1);
  RunRequest req;
  req.config_text = kCompare;
  const auto r = run(req);
  ::unsetenv("KKZ_OUTPUT_ROOT");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::path(r.out_dir).parent_path() == tmp.path);
  CHECK(fs::path(r.out_dir).filename().string().rfind("compare-", 0) == 0);
  CHECK(fs::exists(fs::path(r.out_dir) / "report.json"));
}

TEST_CASE("classify on the bundled fixtures") {
  TempDir tmp("kkz-runner-classify");
  const fs::path configs = fs::path(KKZ_SOURCE_DIR) / "configs";
  const std::vector<std::pair<std::string, bool>> expected = {
      {"classify-u1-constant-B-polygonal.json", true},
      {"classify-u1-zero-polygonal.json", true},
      {"classify-su2-constant-polygonal.json", true},
      {"classify-u1-constant-B-wobble.json", false},
  };
  for (const auto& [name, accept] : expected) {
    RunRequest req;
    req.config_path = (configs / name).string();
    req.out_dir = (tmp.path / name).string();
    const auto r = run(req);
    CAPTURE(name);
    REQUIRE(r.exit_code == 0);
    const auto& rep = r.summary["report"];
    CHECK(rep["verdict_a"] == accept);
    CHECK(rep["agree"] == true);
  }
  RunRequest req;
  req.config_path = (configs / "classify-u1-zero-polygonal.json").string();
  req.out_dir = (tmp.path / "zero").string();
  CHECK(run(req).summary["report"]["classification"]["verdict"] == "Goebel-continuous");
}
