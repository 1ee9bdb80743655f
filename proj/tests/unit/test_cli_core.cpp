#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <random>

#include "fluxcirc/config.hpp"
#include "fluxcirc/experiments.hpp"
#include "fluxcirc/table.hpp"

using namespace fluxcirc;

namespace {

const char* kMinimal = R"(
[device]
length = 26
fluxons = 8
g = 0.02

[experiment]
name = splitting
bias = 0:4e-4:5
)";

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

} // namespace

TEST_CASE("grid syntax") {
  CHECK(parse_grid("0:1:5") == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(parse_grid("3") == std::vector<double>{3});
  CHECK(parse_grid(" 1, 2 ,4") == std::vector<double>{1, 2, 4});
  CHECK(parse_grid("5:1:3") == std::vector<double>{5, 3, 1});
  const auto lg = parse_grid("log:1e-6:1e-3:4");
  REQUIRE(lg.size() == 4);
  CHECK(lg[1] == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK_THROWS_AS(parse_grid(""), ConfigError);
  CHECK_THROWS_AS(parse_grid("1,1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1,3,2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1:0"), ConfigError);
  CHECK_THROWS_AS(parse_grid("0:1"), ConfigError);
  CHECK_THROWS_AS(parse_grid("log:0:1:3"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1,abc"), ConfigError);
}

TEST_CASE("config: minimal file and defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.experiment == "splitting");
  CHECK(c.device.length == 26);
  CHECK(c.device.g == 0.02);
  CHECK(c.device.z() == doctest::Approx(0.0364));
  CHECK(c.numerics.dt_factor == 0.25);
  CHECK(c.precision == 17);
  CHECK(c.grid("bias").size() == 5);
  CHECK(c.number_or("missing", 1.5) == 1.5);
}

TEST_CASE("config: unknown keys and sections are rejected") {
  CHECK_THROWS_AS(parse_config(with("[output]\ncolour = red\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[plots]\nx = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config("[device]\nlenght = 26\n[experiment]\nname = iv\n"), ConfigError);
  // `omega` belongs to scattering runs, not to the analytic splitting.
  CHECK_THROWS_AS(parse_config(with("omega = 0.2\n")), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nname = dance\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[device]\nlength = 26\n"), ConfigError);
}

TEST_CASE("config: values are range checked") {
  CHECK_THROWS_AS(parse_config("[device]\nlength = -1\n[experiment]\nname = iv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[device]\nfluxons = 2.5\n[experiment]\nname = iv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[numerics]\ndt_factor = 0.7\n[experiment]\nname = iv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[numerics]\nmax_windows = 1\n[experiment]\nname = iv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[output]\nprecision = 20\n[experiment]\nname = iv\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nname = loss-g\ng = -0.1,0\n"), ConfigError);
  CHECK_NOTHROW(parse_config("[experiment]\nname = freq-sweep\n"));
  CHECK_THROWS_AS(parse_config("[experiment]\nname = freq-sweep\nomega = 0.2\ndetuning = 0\n"), ConfigError);
  CHECK_NOTHROW(parse_config("[experiment]\nname = freq-sweep\ndetuning = -0.01:0.01:5\nfluxons = 7,8,9\n"));
  CHECK_THROWS_AS(parse_config("[experiment]\nname = bias-sweep\ndrive_port = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nname = iv\npde = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[device]\ng = nan\n[experiment]\nname = iv\n"), ConfigError);
}

TEST_CASE("config: echo rebuilds the same config") {
  const auto a = parse_config(with("[numerics]\nnodes = 600\ntolerance = 2e-3\n[output]\nprecision = 12\n"));
  std::map<std::string, std::string> sections;
  for (const auto& [k, v] : a.echo()) {
    const auto dot = k.find('.');
    sections[k.substr(0, dot)] += k.substr(dot + 1) + " = " + v + "\n";
  }
  std::string text;
  for (const auto& [s, body] : sections) text += "[" + s + "]\n" + body;
  const auto b = parse_config(text);
  CHECK(b.echo() == a.echo());
}

TEST_CASE("csv: format, round trip, empty table") {
  ResultTable t;
  t.name = "demo";
  t.add_meta("device.length", "26");
  t.columns = {"x", "y", "note"};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 200; ++i) t.add_row({u(rng) * std::pow(10.0, i % 40 - 20), std::nextafter(1.0, 2.0), "ok"});
  t.add_row({std::numeric_limits<double>::denorm_min(), -0.0, std::string("x")});
  CHECK_THROWS_AS(t.add_row({1.0}), DomainError);
  CHECK_THROWS_AS(t.add_row({1.0, 2.0, std::string("a,b")}), DomainError);

  const std::string text = format_csv(t);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.rfind("# table: demo\n# device.length: 26\nx,y,note\n", 0) == 0);
  const auto back = parse_csv(text);
  CHECK(back.name == "demo");
  CHECK(back.meta == t.meta);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == t.rows.size());
  bool exact = true;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double a = std::get<double>(t.rows[i][j]), b = std::get<double>(back.rows[i][j]);
      exact &= std::memcmp(&a, &b, sizeof a) == 0;
    }
  }
  CHECK(exact);
  CHECK(format_csv(parse_csv(text)) == text);

  ResultTable empty;
  empty.columns = {"a", "b"};
  CHECK(format_csv(empty) == "a,b\n");
  CHECK(parse_csv("a,b\n").rows.empty());
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(0.1, 6) == "0.1");
}

TEST_CASE("csv: files") {
  const auto dir = std::filesystem::temp_directory_path() / "fluxcirc_csv_test";
  std::filesystem::create_directories(dir);
  ResultTable t;
  t.name = "f";
  t.columns = {"a"};
  t.add_row({1.25});
  emit_csv(t, (dir / "f.csv").string());
  CHECK(read_csv((dir / "f.csv").string()).number(0, "a") == 1.25);
  CHECK_THROWS_AS(emit_csv(t, (dir / "missing" / "f.csv").string()), IoError);
  CHECK_THROWS_AS(read_csv((dir / "nope.csv").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("curve helpers") {
  std::vector<double> x, y;
  for (int i = -50; i <= 50; ++i) {
    x.push_back(i * 0.1);
    y.push_back(1.0 / (1.0 + x.back() * x.back()));
  }
  CHECK(fwhm(x, y) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(first_crossing_below({0, 1, 2, 3}, {1, 0.95, 0.85, 0.7}, 0.89) == doctest::Approx(1.6));
  CHECK(std::isnan(first_crossing_below({0, 1}, {1, 0.95}, 0.89)));
  CHECK(std::isnan(fwhm({0, 1, 2}, {1, 2, 1.5})));
}

TEST_CASE("design point meets the TCM optimum") {
  JunctionParams jp;
  const auto ring = make_ring(jp, symmetric_ports(jp), default_nodes(jp.length));
  const auto d = design_point(ring);
  CHECK(std::abs(d.tcm.omega_plus - d.tcm.omega_minus) ==
        doctest::Approx(std::sqrt(3.0) * jp.z() / jp.length).epsilon(1e-6));
  CHECK(d.bias > 1.5e-4);
  CHECK(d.bias < 6e-4);
  CHECK(d.omega_d == doctest::Approx(resonance_omega(jp)).epsilon(1e-3));
  CHECK(resonance_omega(jp) * jp.plasma_frequency == doctest::Approx(7.53e9).epsilon(0.01));
}

TEST_CASE("analytic experiments produce their tables") {
  auto c = parse_config(kMinimal);
  auto out = run_experiment(c, 1);
  REQUIRE(out.tables.size() == 1);
  const auto& t = out.tables[0];
  CHECK(t.rows.size() == 5);
  CHECK(t.number(0, "delta") == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.number(4, "delta") > t.number(2, "delta"));

  c.device.g = 0.0;
  CHECK_THROWS_AS(run_experiment(c, 1), ConfigError);

  c = parse_config("[device]\nlength = 15\n[experiment]\nname = spectrum\nfluxons = 2:6:5\nmodes = 2\n");
  out = run_experiment(c, 1);
  // n = 2 has one mode below n, the rest have two.
  CHECK(out.tables[0].rows.size() == 9);
  CHECK(out.tables[0].number(0, "omega") == doctest::Approx(out.tables[0].number(0, "omega_partner")));

  c = parse_config("[device]\nlength = 15\ng = 0.02\n[experiment]\nname = iv\nfluxons = 2,8\nbias = 0.01,0.1\n");
  out = run_experiment(c, 1);
  CHECK(out.tables[0].rows.size() == 4);
  CHECK(std::isnan(out.tables[0].number(0, "pde_v_dc")));
  CHECK(out.tables[0].number(3, "asymptote") == doctest::Approx(2 * pi * 8 / 15));
}

TEST_CASE("iv: PDE voltage tracks the analytic curve") {
  JunctionParams jp;
  jp.length = 15;
  jp.g = 0.02;
  const auto m = pde_dc_voltage(jp, 0.02);
  const auto train = velocity_for_bias(0.02, 15, 8, 0.02);
  // <phi_t> = -2 pi n v / L, and v < 0 at positive bias.
  CHECK(m.voltage == doctest::Approx(-dc_voltage(15, 8, train)).epsilon(0.02));
  CHECK(m.drift < 0.01);
}

namespace {

// Header rows documented under "## <table>" in docs/csv_schemas.md.
std::map<std::string, std::string> documented_schemas() {
  std::ifstream in(std::string(FLUXCIRC_SOURCE_DIR) + "/docs/csv_schemas.md");
  REQUIRE(in);
  std::map<std::string, std::string> out;
  std::string line, heading;
  bool fence = false;
  while (std::getline(in, line)) {
    if (line.rfind("## ", 0) == 0) {
      heading = line.substr(3);
    } else if (line.rfind("```", 0) == 0) {
      fence = !fence;
    } else if (fence && !heading.empty() && line.find(',') != std::string::npos && !out.count(heading)) {
      out[heading] = line;
    }
  }
  return out;
}

std::string header_of(const ResultTable& t) {
  std::string h;
  for (const auto& c : t.columns) h += (h.empty() ? "" : ",") + c;
  return h;
}

} // namespace

TEST_CASE("csv: column order matches the documented schemas") {
  const auto docs = documented_schemas();
  const std::string tiny = "[device]\nlength = 10\nfluxons = 4\ng = 0.02\n"
                           "[numerics]\nnodes = 201\ntransient_periods = 1\ntransient_decay = 0\n"
                           "demod_periods = 1\nmax_windows = 2\n[experiment]\n";
  const std::vector<std::string> experiments = {
      "name = iv\nfluxons = 4\nbias = 0.1\n",
      "name = spectrum\nfluxons = 4\n",
      "name = splitting\nbias = 0\n",
      "name = bias-sweep\nbias = 0\n",
      "name = freq-sweep\nfluxons = 4\ndetuning = 0\n",
      "name = loss-g\ng = 0\n",
      "name = loss-p\np = 0\n",
      "name = power\npower_dbm = -100\n",
      "name = fluxon-sweep\nfluxons = 4\n",
      "name = coupling-compare\ncapacitance = 0\ndetuning = 0\n",
      "name = validate\n",
  };
  std::set<std::string> seen;
  for (const auto& e : experiments) {
    const auto out = run_experiment(parse_config(tiny + e), 1);
    for (const auto& t : out.tables) {
      INFO(t.name);
      REQUIRE(docs.count(t.name) == 1);
      CHECK(header_of(t) == docs.at(t.name));
      seen.insert(t.name);
    }
  }
  for (const auto& [name, header] : docs) CHECK_MESSAGE(seen.count(name) == 1, "documented but never emitted: " << name);
}
