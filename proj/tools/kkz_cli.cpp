#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kkz/kkzeeman.h"

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kaluza-Klein charged motion and Zeeman-topology curve classification"};
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool quiet = false;
  app.add_option("--config", config, "run configuration (JSON)")->required();
  app.add_option("--out", out, "output directory (default: config 'output', then $KKZ_OUTPUT_ROOT)");
  app.add_option("--seed", seed, "random seed, overrides the config");
  app.add_option("--tol", tol, "integrator tolerance, overrides the config")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "print nothing on success");
  app.set_version_flag("--version", kkz_version());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "{\"status\":\"error\",\"category\":\"config\",\"exit_code\":2,\"message\":\"%s\"}\n",
                 escape(e.what()).c_str());
    return 2;
  }

  char* summary = nullptr;
  const int code = kkz_run(config.c_str(), out.empty() ? nullptr : out.c_str(),
                           seed ? &*seed : nullptr, tol ? &*tol : nullptr, &summary);
  if (summary) {
    if (code != 0)
      std::fprintf(stderr, "%s\n", summary);
    else if (!quiet)
      std::printf("%s\n", summary);
    kkz_string_free(summary);
  }
  return code;
}
