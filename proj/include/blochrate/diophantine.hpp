#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blochrate/model.hpp"

namespace blochrate {

struct DiophParams {
  double eta = 0.1;
  double C_eta = 1.0;
  double N_eta = 1.0;
  double K = 1.0;
  int B_max = 10;

  void validate() const;
  /// Hyp. 4 compatibility with a scaling: N_η > 2μ/p.
  bool compatible_with(double mu, double p) const { return N_eta > 2.0 * mu / p; }
};

/// Level indices n,k are 1-based, as in the weights (1+n)^{1+η}.
struct Witness {
  MultiIndex alpha;
  int n = 0;
  int k = 0;
  double value = 0.0;     // α·ω + ω(n,k) (+ ε^p δ(n,k) where relevant)
  double weighted = 0.0;  // |value| times the weight
};

/// Weight (1+|α|)^{r−1+η}(1+n)^{1+η}(1+k)^{1+η} with 1-based n,k and l1 |α|.
double dioph_weight(const MultiIndex& alpha, int r, int n, int k, double eta);

/// All α ∈ ℤ^r with |α|₁ ≤ radius, sorted, optionally without 0.
std::vector<MultiIndex> enumerate_multi_indices(int r, int radius, bool include_zero);

struct DiophReport {
  bool holds_a = true;
  bool holds_b = true;
  double min_margin_a;  // +∞ when nothing was scanned
  double min_margin_b;
  Witness worst_a;
  MultiIndex worst_b;
  std::vector<Witness> resonances;
  int B_max = 0;
  long scanned = 0;
};

DiophReport check_dioph(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const DiophParams& params);

struct SpeedReport {
  bool vacuous = true;  // no pair with ω(n,k) ≠ 0
  bool holds = true;
  double min_margin;
  int n = 0;
  int k = 0;
};

SpeedReport check_speed(const LevelSystem& sys, const DiophParams& params);

/// Minimum weighted margin over the two small-divisor conditions and the
/// level-speed condition; +∞ when no non-resonant combination is in range.
double estimate_C_eta(const LevelSystem& sys, const QuasiPeriodicField& field, double eta,
                      int B_max);

struct PerturbedReport {
  std::vector<Witness> triples;  // value includes ε^p δ(n,k)
  double size_bound = 0.0;       // C_η ε^{-p} / (2 max|δ|)
  bool postcondition_holds = true;
  double eps_threshold = 0.0;    // below this ε the list is provably empty
  double max_delta = 0.0;
  std::string note;
};

PerturbedReport perturbed_violations(const LevelSystem& sys, const QuasiPeriodicField& field,
                                     const Scaling& scaling, const DiophParams& params);

struct GenericityConfig {
  std::vector<double> center;  // ball centre, length r
  double radius = 1.0;
  double eta = 0.1;
  std::vector<double> omegas;  // level energies
  int B_max = 8;
  int n_samples = 10000;
  std::vector<double> c_grid;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct GenericityRow {
  double c = 0.0;
  double fraction = 0.0;
  long violations = 0;
  long samples = 0;
};

/// Fraction of frequency vectors, uniform in the Euclidean ball, whose
/// minimum weighted margin is below c.
std::vector<GenericityRow> genericity_experiment(const GenericityConfig& cfg);

/// Minimum weighted margin min |α·ω + ω(n,k)|·weight over 0<|α|≤B_max and all n,k.
double min_weighted_margin(const std::vector<double>& freq, const std::vector<double>& omegas,
                           const std::vector<MultiIndex>& alphas, double eta);

}  // namespace blochrate
