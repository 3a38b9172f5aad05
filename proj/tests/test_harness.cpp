#include "doctest.h"

#include <cmath>
#include <string>

#include "blochrate/fit.hpp"
#include "blochrate/harness.hpp"

using namespace blochrate;

namespace {

const char* kMinimal = R"(
system:
  omega: [0, 1]
  gamma: 1
  V:
    - [1, 2, 1.0, 0.5]
field:
  freq: [1.0]
  modes:
    - {alpha: [1], re: 1.0}
    - {alpha: [-1], re: 1.0}
)";

const char* kRates = R"(
study: rates
system:
  omega: [0, 1]
  delta: [0, 1]
  gamma: 1
  V:
    - [1, 2, 1.0]
field:
  freq: [1.0]
  modes:
    - {alpha: [1], re: 1.0}
    - {alpha: [-1], re: 1.0}
scaling: {eps: [0.2, 0.1, 0.05], mu: 0.25, p: 0.25}
)";

const char* kRate = R"(
study: simulate-rate
system:
  omega: [0, 1, 2]
  gamma: 1
  temperature: 1
  W_thermal: 0.1
  V:
    - [1, 2, 1.0]
    - [2, 3, 0.5]
field:
  freq: [1.0]
  modes:
    - {alpha: [1], re: 1.0}
    - {alpha: [-1], re: 1.0}
scaling: {eps: [0.2, 0.1, 0.05], mu: 0.25, p: 1}
rate: {T: 2, snapshots: 20}
)";

std::string expect_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("parse_config defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.study == Study::SimulateBloch);
  CHECK(cfg.eps == std::vector<double>{0.1});
  CHECK(cfg.mu == 0.0);
  CHECK(cfg.p == 1.0);
  CHECK(cfg.jobs == 1);
  CHECK(cfg.initial(0) == 1.0);
  CHECK(cfg.initial(1) == 0.0);
  CHECK(cfg.oracle.S == std::vector<double>{250.0, 500.0, 1000.0, 2000.0});
  CHECK(cfg.converge.tolerance == 0.15);
  CHECK_FALSE(cfg.dioph.genericity.has_value());
  CHECK(cfg.system.V(0, 1) == Complex(1.0, 0.5));
  CHECK(cfg.system.V(1, 0) == Complex(1.0, -0.5));
  CHECK(cfg.system.gamma(0, 1) == 1.0);
  CHECK(cfg.system.gamma(0, 0) == 0.0);
}

TEST_CASE("parse_config tables and sections") {
  const auto cfg = parse_config(kRate);
  CHECK(cfg.study == Study::SimulateRate);
  CHECK(cfg.system.W(1, 0) == doctest::Approx(0.1));
  CHECK(cfg.system.W(0, 1) == doctest::Approx(0.1 * std::exp(-1.0)));
  CHECK(cfg.system.W(0, 2) == doctest::Approx(0.1 * std::exp(-2.0)));
  CHECK(validate_system(cfg.system).valid());
  CHECK(cfg.rate.T == 2.0);
  CHECK(cfg.rate.snapshots == 20);
  CHECK_FALSE(cfg.rate.form.has_value());

  const auto conv = parse_config(std::string(kMinimal) + "converge: {channel: d_vs_rhod1}\n");
  CHECK(conv.converge.channel == Channel::DvsRhod1);
  CHECK(conv.converge.tolerance == 0.2);

  const auto lad = parse_config("system:\n  generator: {kind: ladder, levels: 4, coupling: 1, decay: 0.5}\n");
  CHECK(lad.system.size() == 4);
  CHECK(lad.system.V(2, 3) == Complex(0.25));
  CHECK(lad.system.omega(3) == 3.0);
}

TEST_CASE("parse_config rejects malformed input") {
  CHECK(contains(expect_error(std::string(kMinimal) + "colour: red\n"), "unknown key 'colour'"));
  CHECK(contains(expect_error(std::string(kMinimal) + "colour: red\n"), "line "));
  CHECK(contains(expect_error(std::string(kMinimal) + "scaling: {eps: [0.1, 0.2]}\n"), "strictly decreasing"));
  CHECK(contains(expect_error(std::string(kMinimal) + "scaling: {eps: abc}\n"), "must be a number"));
  CHECK(contains(expect_error(std::string(kMinimal) + "initial: [1]\n"), "initial"));
  CHECK(contains(expect_error(std::string(kMinimal) + "converge: {channel: sideways}\n"), "unknown channel"));
  CHECK(contains(expect_error(std::string(kMinimal) + "study: nothing\n"), "unknown study"));
  CHECK(contains(expect_error("seed: 3\n"), "system section is required"));
  CHECK(contains(expect_error("system:\n  omega: [0, 1]\n  W_thermal: 1\n"), "temperature"));
  CHECK(contains(expect_error("system:\n  omega: [0, 1]\n  V:\n    - [1, 3, 1.0]\n"), "outside 1..2"));
  CHECK(contains(expect_error(std::string(kMinimal) + "scaling: {mu: 0.6}\n"), "mu"));
  CHECK(contains(expect_error("system: [unclosed\n"), "config"));
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), InvalidArgument);
}

TEST_CASE("parse_study spellings") {
  CHECK(parse_study("average-oracle") == Study::AverageOracle);
  CHECK(to_string(Study::Timelayer) == "timelayer");
  CHECK_THROWS_AS(parse_study("average_oracle"), InvalidArgument);
}

TEST_CASE("expected convergence exponents") {
  CHECK(expected_exponent(Channel::Coherence, 0.25) == doctest::Approx(0.75));
  CHECK(expected_exponent(Channel::DvsRhod1, 0.25) == doctest::Approx(0.5));
  CHECK(expected_exponent(Channel::DvsRhod2, 1.0 / 3.0) == doctest::Approx(1.0 / 3.0));
  CHECK(expected_exponent(Channel::DvsRhod2, 0.1) == doctest::Approx(0.1));
}

TEST_CASE("csv_text formatting") {
  CsvTable t{"x.csv", {"a", "b"}, {{0.1, 1.0}, {-2.5e-300, 3.0}}};
  CHECK(csv_text(t) == "a,b\n0.10000000000000001,1\n-2.5e-300,3\n");
}

TEST_CASE("results are deterministic across runs and worker counts") {
  for (const char* text : {kRates, kRate}) {
    auto cfg = parse_config(text);
    const auto a = run_study(cfg);
    cfg.jobs = 3;
    const auto b = run_study(cfg);
    CHECK(a.passed());
    CHECK(result_json_text(a, cfg) == result_json_text(b, cfg));
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(csv_text(a.tables[i]) == csv_text(b.tables[i]));
    CHECK_FALSE(contains(config_to_json(cfg).dump(), "\"jobs\""));
    CHECK(contains(result_json_text(a, cfg), "\"checks\""));
  }
}

TEST_CASE("fit_line and fit_loglog") {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.slope_stderr == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.points == 4);

  std::vector<double> x, y;
  for (double e : {1e-1, 1e-2, 1e-3, 1e-4}) {
    x.push_back(e);
    y.push_back(3.0 * std::pow(e, 0.75));
  }
  CHECK(fit_loglog(x, y).slope == doctest::Approx(0.75));
  CHECK_THROWS(fit_line({0, 1}, {0, 1}));
  CHECK_THROWS(fit_loglog({1, 2, 3}, {1, 0, 1}));
}
