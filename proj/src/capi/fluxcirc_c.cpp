#include "fluxcirc/fluxcirc.h"

#include <filesystem>
#include <mutex>
#include <string>

#include "fluxcirc/config.hpp"
#include "fluxcirc/errors.hpp"
#include "fluxcirc/experiments.hpp"
#include "fluxcirc/fluxon.hpp"
#include "fluxcirc/spectrum.hpp"

struct fc_config {
  fluxcirc::ExperimentConfig cfg;
};

struct fc_result {
  fluxcirc::ExperimentOutput out;
  int precision = 17;
  std::vector<std::string> csv;
};

namespace {

thread_local std::string last_error;

fc_status fail(fc_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Maps the C++ exception hierarchy onto status codes.
template <class Fn>
fc_status guard(Fn&& fn) {
  last_error.clear();
  try {
    return fn();
  } catch (const fluxcirc::ConfigError& e) {
    return fail(FC_ERR_CONFIG, e.what());
  } catch (const fluxcirc::IoError& e) {
    return fail(FC_ERR_IO, e.what());
  } catch (const fluxcirc::DomainError& e) {
    return fail(FC_ERR_ARGUMENT, e.what());
  } catch (const fluxcirc::NumericalError& e) {
    return fail(FC_ERR_NUMERICAL, e.what());
  } catch (const fluxcirc::ConvergenceError& e) {
    return fail(FC_ERR_NUMERICAL, e.what());
  } catch (const std::exception& e) {
    return fail(FC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FC_ERR_INTERNAL, "unknown exception");
  }
}

fluxcirc::LogFn make_log(fc_log_fn log, void* user) {
  if (!log) return {};
  auto lock = std::make_shared<std::mutex>();
  return [log, user, lock](const std::string& line) {
    std::lock_guard<std::mutex> g(*lock);
    log(line.c_str(), user);
  };
}

fc_result* wrap(fluxcirc::ExperimentOutput out, int precision) {
  auto* r = new fc_result{std::move(out), precision, {}};
  for (const auto& t : r->out.tables) r->csv.push_back(fluxcirc::format_csv(t, precision));
  return r;
}

#define FC_REQUIRE(cond, what) \
  if (!(cond)) return fail(FC_ERR_ARGUMENT, what)

} // namespace

extern "C" {

const char* fc_version(void) { return "0.3.0"; }

const char* fc_last_error(void) { return last_error.c_str(); }

const char* fc_status_name(fc_status s) {
  switch (s) {
    case FC_OK: return "ok";
    case FC_ERR_ARGUMENT: return "argument";
    case FC_ERR_CONFIG: return "config";
    case FC_ERR_NUMERICAL: return "numerical";
    case FC_ERR_IO: return "io";
    case FC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

fc_status fc_config_load(const char* path, fc_config** out) {
  return guard([&] {
    FC_REQUIRE(path && out, "fc_config_load: null argument");
    *out = new fc_config{fluxcirc::load_config(path)};
    return FC_OK;
  });
}

fc_status fc_config_parse(const char* text, fc_config** out) {
  return guard([&] {
    FC_REQUIRE(text && out, "fc_config_parse: null argument");
    *out = new fc_config{fluxcirc::parse_config(text)};
    return FC_OK;
  });
}

fc_status fc_config_experiment(const fc_config* c, const char** name) {
  return guard([&] {
    FC_REQUIRE(c && name, "fc_config_experiment: null argument");
    *name = c->cfg.experiment.c_str();
    return FC_OK;
  });
}

fc_status fc_config_output_dir(const fc_config* c, const char** dir) {
  return guard([&] {
    FC_REQUIRE(c && dir, "fc_config_output_dir: null argument");
    *dir = c->cfg.out_dir.c_str();
    return FC_OK;
  });
}

void fc_config_free(fc_config* c) { delete c; }

fc_status fc_run(const fc_config* c, int workers, fc_log_fn log, void* user, fc_result** out) {
  return guard([&] {
    FC_REQUIRE(c && out, "fc_run: null argument");
    *out = wrap(fluxcirc::run_experiment(c->cfg, workers, make_log(log, user)), c->cfg.precision);
    return FC_OK;
  });
}

fc_status fc_validate(fc_log_fn log, void* user, fc_result** out, int* passed) {
  return guard([&] {
    FC_REQUIRE(out && passed, "fc_validate: null argument");
    auto r = fluxcirc::run_validation(make_log(log, user));
    *passed = r.checks_passed ? 1 : 0;
    *out = wrap(std::move(r), 17);
    return FC_OK;
  });
}

fc_status fc_result_table_count(const fc_result* r, size_t* count) {
  return guard([&] {
    FC_REQUIRE(r && count, "fc_result_table_count: null argument");
    *count = r->out.tables.size();
    return FC_OK;
  });
}

fc_status fc_result_table_name(const fc_result* r, size_t i, const char** name) {
  return guard([&] {
    FC_REQUIRE(r && name, "fc_result_table_name: null argument");
    FC_REQUIRE(i < r->out.tables.size(), "fc_result_table_name: index out of range");
    *name = r->out.tables[i].name.c_str();
    return FC_OK;
  });
}

fc_status fc_result_row_count(const fc_result* r, size_t i, size_t* rows) {
  return guard([&] {
    FC_REQUIRE(r && rows, "fc_result_row_count: null argument");
    FC_REQUIRE(i < r->out.tables.size(), "fc_result_row_count: index out of range");
    *rows = r->out.tables[i].rows.size();
    return FC_OK;
  });
}

fc_status fc_result_failed_points(const fc_result* r, int* failed) {
  return guard([&] {
    FC_REQUIRE(r && failed, "fc_result_failed_points: null argument");
    *failed = r->out.failed_points;
    return FC_OK;
  });
}

fc_status fc_result_report_count(const fc_result* r, size_t* count) {
  return guard([&] {
    FC_REQUIRE(r && count, "fc_result_report_count: null argument");
    *count = r->out.report.size();
    return FC_OK;
  });
}

fc_status fc_result_report_line(const fc_result* r, size_t i, const char** line) {
  return guard([&] {
    FC_REQUIRE(r && line, "fc_result_report_line: null argument");
    FC_REQUIRE(i < r->out.report.size(), "fc_result_report_line: index out of range");
    *line = r->out.report[i].c_str();
    return FC_OK;
  });
}

fc_status fc_result_csv(const fc_result* r, size_t i, const char** text) {
  return guard([&] {
    FC_REQUIRE(r && text, "fc_result_csv: null argument");
    FC_REQUIRE(i < r->csv.size(), "fc_result_csv: index out of range");
    *text = r->csv[i].c_str();
    return FC_OK;
  });
}

fc_status fc_result_write(const fc_result* r, const char* dir) {
  return guard([&] {
    FC_REQUIRE(r && dir && *dir, "fc_result_write: null or empty directory");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw fluxcirc::IoError(std::string("cannot create ") + dir + ": " + ec.message());
    for (const auto& t : r->out.tables) {
      fluxcirc::emit_csv(t, (std::filesystem::path(dir) / (t.name + ".csv")).string(), r->precision);
    }
    return FC_OK;
  });
}

void fc_result_free(fc_result* r) { delete r; }

fc_status fc_train_modulus(double length, int fluxons, double velocity, double* k) {
  return guard([&] {
    FC_REQUIRE(k, "fc_train_modulus: null output");
    *k = fluxcirc::solve_modulus(length, fluxons, velocity);
    return FC_OK;
  });
}

fc_status fc_mode_frequency(int ell, int fluxons, double length, double* omega) {
  return guard([&] {
    FC_REQUIRE(omega, "fc_mode_frequency: null output");
    *omega = fluxcirc::mode_frequency_static(ell, fluxons, fluxcirc::solve_modulus(length, fluxons, 0.0)).omega;
    return FC_OK;
  });
}

fc_status fc_dc_voltage(double length, int fluxons, double g, double bias, double* voltage) {
  return guard([&] {
    FC_REQUIRE(voltage, "fc_dc_voltage: null output");
    const auto train = fluxcirc::velocity_for_bias(bias, length, fluxons, g);
    *voltage = fluxcirc::dc_voltage(length, fluxons, train);
    return FC_OK;
  });
}

fc_status fc_lc_reflection(double omega, double inductance, double capacitance, double coupling, double z0,
                           double* re, double* im) {
  return guard([&] {
    FC_REQUIRE(re && im, "fc_lc_reflection: null output");
    const auto g = coupling > 0.0 ? fluxcirc::lc_reflection_capacitive(omega, inductance, capacitance, coupling, z0)
                                  : fluxcirc::lc_reflection_galvanic(omega, inductance, capacitance, z0);
    *re = g.real();
    *im = g.imag();
    return FC_OK;
  });
}

} // extern "C"
