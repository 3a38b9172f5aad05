#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blochrate/model.hpp"
#include "blochrate/sharp_ops.hpp"

namespace blochrate {

/// For each ordered pair (a,b), the support indices β with ω(a,b) + β·ω = 0.
/// Entry (k,n) of the dominant rate sums over at(k,n).
class ResonanceSet {
 public:
  ResonanceSet(int n, double tolerance) : n_(n), tol_(tolerance), sets_(static_cast<std::size_t>(n) * n) {}

  const std::vector<MultiIndex>& at(int a, int b) const { return sets_[index(a, b)]; }
  std::vector<MultiIndex>& at(int a, int b) { return sets_[index(a, b)]; }
  bool resonant(int a, int b) const { return !at(a, b).empty(); }
  int size() const { return n_; }
  double tolerance() const { return tol_; }

 private:
  std::size_t index(int a, int b) const { return static_cast<std::size_t>(a) * n_ + b; }
  int n_;
  double tol_;
  std::vector<std::vector<MultiIndex>> sets_;
};

/// 1e-9·(1 + max|ω(n,k)| + max|α·ω|).
double default_resonance_tolerance(const LevelSystem& sys, const QuasiPeriodicField& field);
/// 1e-12·(1 + max|δ(n,k)|).
double default_delta_tolerance(const LevelSystem& sys);

ResonanceSet resonance_set(const LevelSystem& sys, const QuasiPeriodicField& field,
                           std::optional<double> tol_res = std::nullopt);

/// C(n,m) = 2|V(n,m)|² Σ_{β∈res(n,m)} |φ_β|²; zero diagonal.
RealMatrix resonant_weight(const LevelSystem& sys, const QuasiPeriodicField& field,
                           const ResonanceSet& res);

/// Time-dependent rate Ψ_ε(s) at fast time s, closed double Fourier sum.
RealMatrix psi_time_dependent(const LevelSystem& sys, const QuasiPeriodicField& field,
                              const Scaling& scaling, double s);

RateMatrix psi_averaged(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling);

/// Requires μ > 0.
RateMatrix psi_dominant(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling, const ResonanceSet& res);

RateMatrix w_mod(const LevelSystem& sys, const RateMatrix& psi_dom);

struct SplitAB {
  RateMatrix A;
  RateMatrix B_eps;
  double nu = 0.0;
};

/// A on δ=0 resonant pairs, B^ε on δ≠0 resonant pairs. Requires μ > 0.
SplitAB split_AB(const LevelSystem& sys, const QuasiPeriodicField& field,
                 const Scaling& scaling, const ResonanceSet& res);

/// ε→0 limit B⁰ of B^ε: C/γ (μ<p), Cγ/(γ²+δ²) (μ=p), Cγ/δ² (μ>p).
RateMatrix b0_limit(const LevelSystem& sys, const QuasiPeriodicField& field, double mu, double p,
                    const ResonanceSet& res);

enum class ProjectorKind { KernelAB, KernelA };
enum class RateForm { InverseGamma, Lorentzian, GammaOverDeltaSq, Zero, AveragedLimit };

std::string to_string(ProjectorKind k);
std::string to_string(RateForm f);

struct RegimeInfo {
  double mu = 0.0;
  double p = 1.0;
  double ratio = 0.0;
  double sigma = 0.0;
  double nu = 0.0;
  bool finite_N = true;
  bool homogeneous = true;  // false: no homogeneous reduction
  ProjectorKind projector = ProjectorKind::KernelAB;
  std::optional<RateForm> form;
  std::string row;         // table row label
  std::string difference;  // what differs from the unperturbed case
  std::string notes;
};

/// Ratio comparisons use a relative tolerance of 1e-12 for the boundary rows.
RegimeInfo regime_classify(double mu, double p, bool finite_N, bool W_zero);

/// Single-power approximate rate. Throws InvalidArgument without a
/// homogeneous reduction, or for the γ/δ² form on a resonant pair with δ=0.
RateMatrix psi_app(const LevelSystem& sys, const QuasiPeriodicField& field,
                   const ResonanceSet& res, const RegimeInfo& regime);

/// (1/S)∫₀^S Ψ_ε(s) ds by composite Simpson with quad_steps panels (rounded up to even).
RealMatrix average_oracle(const LevelSystem& sys, const QuasiPeriodicField& field,
                          const Scaling& scaling, double S, int quad_steps);

}  // namespace blochrate
