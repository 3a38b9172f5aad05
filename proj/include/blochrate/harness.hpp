#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blochrate/bloch_solver.hpp"
#include "blochrate/diophantine.hpp"
#include "blochrate/model.hpp"

namespace blochrate {

enum class Study { SimulateBloch, SimulateRate, Rates, Converge, AverageOracle, Timelayer, Equilibrium, Dioph };

std::string to_string(Study s);
/// Accepts the CLI spelling, e.g. "average-oracle".
Study parse_study(const std::string& name);

enum class Channel { Coherence, DvsRhod1, DvsRhod2 };

std::string to_string(Channel c);

/// Which rate table drives the population equation.
enum class RateChoice { Averaged, Dominant };

struct ConvergeSpec {
  Channel channel = Channel::Coherence;
  double tolerance = 0.15;
};

struct OracleSpec {
  std::vector<double> S = {250.0, 500.0, 1000.0, 2000.0};
  int panels_per_unit = 20;
  double match_tolerance = 0.01;
  double slope_tolerance = 0.3;
};

struct TimelayerSpec {
  double horizon = 30.0;  // T = horizon / (c·ε^{−σ})
  int snapshots = 600;
  double tolerance = 0.2;
};

struct RateSpec {
  std::optional<RateChoice> form;  // default: dominant for μ>0, averaged for μ=0
  double T = 1.0;
  int snapshots = 100;
};

struct EquilibriumSpec {
  double T = 50.0;
  double tolerance = 1e-6;
};

struct GenericitySpec {
  std::vector<double> center;
  double radius = 0.5;
  std::vector<double> omegas;  // empty: the system energies
  int B_max = 8;
  int samples = 10000;
  std::vector<double> c;
  double ratio_band = 5.0;
};

struct DiophSpec {
  DiophParams params;
  std::optional<GenericitySpec> genericity;
};

struct ExperimentConfig {
  Study study = Study::SimulateBloch;
  LevelSystem system;
  QuasiPeriodicField field;
  std::vector<double> eps;  // strictly decreasing
  double mu = 0.0;
  double p = 1.0;
  RealVector initial;       // populations; defaults to all mass on level 1
  SolverConfig solver;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = "out";

  ConvergeSpec converge;
  OracleSpec oracle;
  TimelayerSpec timelayer;
  RateSpec rate;
  EquilibriumSpec equilibrium;
  DiophSpec dioph;

  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;
};

/// Parses the YAML grammar documented in README.md.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved configuration, defaults filled in.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct StudyResult {
  Study study = Study::SimulateBloch;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<CsvTable> tables;

  bool passed() const;
};

StudyResult run_study(const ExperimentConfig& cfg);

StudyResult run_simulate_bloch(const ExperimentConfig& cfg);
StudyResult run_simulate_rate(const ExperimentConfig& cfg);
StudyResult run_rates(const ExperimentConfig& cfg);
StudyResult run_convergence_study(const ExperimentConfig& cfg);
StudyResult run_averaging_oracle(const ExperimentConfig& cfg);
StudyResult run_timelayer_study(const ExperimentConfig& cfg);
StudyResult run_equilibrium_study(const ExperimentConfig& cfg);
StudyResult run_dioph_suite(const ExperimentConfig& cfg);

/// Expected exponent of the selected convergence channel.
double expected_exponent(Channel c, double mu);

/// Writes result.json and every CSV table into dir (created if missing).
void write_result(const StudyResult& result, const ExperimentConfig& cfg,
                  const std::filesystem::path& dir);

std::string result_json_text(const StudyResult& result, const ExperimentConfig& cfg);
std::string csv_text(const CsvTable& table);

}  // namespace blochrate
