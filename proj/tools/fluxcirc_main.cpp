// fluxcirc: command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "fluxcirc/fluxcirc.h"

namespace {

constexpr const char* kOutEnv = "FLUXCIRC_OUT";
constexpr const char* kFallbackOut = "fluxcirc-out";

void log_line(const char* line, void*) { std::fprintf(stderr, "[fluxcirc] %s\n", line); }

// One machine-readable line per failure, then the exit code for the status.
int report(fc_status s) {
  std::fprintf(stderr, "error: status=%s message=%s\n", fc_status_name(s), fc_last_error());
  switch (s) {
    case FC_ERR_CONFIG: return 2;
    case FC_ERR_NUMERICAL: return 3;
    case FC_ERR_IO: return 4;
    default: return 1;
  }
}

std::string pick_out_dir(const std::string& flag, const fc_config* cfg) {
  if (!flag.empty()) return flag;
  const char* from_config = "";
  fc_config_output_dir(cfg, &from_config);
  if (from_config && *from_config) return from_config;
  if (const char* env = std::getenv(kOutEnv); env && *env) return env;
  return kFallbackOut;
}

int cmd_run(const std::string& path, int workers, const std::string& out_flag) {
  fc_config* cfg = nullptr;
  if (fc_status s = fc_config_load(path.c_str(), &cfg); s != FC_OK) return report(s);
  const std::string out = pick_out_dir(out_flag, cfg);
  fc_result* res = nullptr;
  fc_status s = fc_run(cfg, workers, log_line, nullptr, &res);
  fc_config_free(cfg);
  if (s != FC_OK) return report(s);

  int code = 0;
  if (fc_status w = fc_result_write(res, out.c_str()); w != FC_OK) code = report(w);
  size_t tables = 0;
  fc_result_table_count(res, &tables);
  for (size_t i = 0; i < tables && code == 0; ++i) {
    const char* name = nullptr;
    size_t rows = 0;
    fc_result_table_name(res, i, &name);
    fc_result_row_count(res, i, &rows);
    std::printf("wrote %s/%s.csv (%zu rows)\n", out.c_str(), name, rows);
  }
  int failed = 0;
  fc_result_failed_points(res, &failed);
  fc_result_free(res);
  if (code == 0 && failed > 0) {
    std::fprintf(stderr, "error: status=numerical message=%d sweep point(s) did not converge; see converged column\n",
                 failed);
    code = 3;
  }
  return code;
}

int cmd_validate(const std::string& out_flag) {
  fc_result* res = nullptr;
  int passed = 0;
  if (fc_status s = fc_validate(nullptr, nullptr, &res, &passed); s != FC_OK) return report(s);
  size_t lines = 0;
  fc_result_report_count(res, &lines);
  for (size_t i = 0; i < lines; ++i) {
    const char* line = nullptr;
    fc_result_report_line(res, i, &line);
    std::printf("%s\n", line);
  }
  int code = passed ? 0 : 1;
  if (!out_flag.empty()) {
    if (fc_status w = fc_result_write(res, out_flag.c_str()); w != FC_OK) code = report(w);
  }
  fc_result_free(res);
  return code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluxon-ring circulator simulations"};
  app.set_version_flag("--version", std::string(fc_version()));
  app.require_subcommand(1);

  std::string config, out, validate_out;
  int workers = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by an INI config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("--workers", workers, "Worker threads (default: config, then all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out, std::string("Output directory (default: [output] directory, then $") + kOutEnv +
                                    ", then " + kFallbackOut + ")");

  auto* validate = app.add_subcommand("validate", "Run the invariant suite and print PASS/FAIL per check");
  validate->add_option("--out", validate_out, "Also write validate.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*run) return cmd_run(config, workers, out);
  return cmd_validate(validate_out);
}
