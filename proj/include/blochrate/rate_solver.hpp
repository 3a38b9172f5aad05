#pragma once

#include <functional>
#include <vector>

#include "blochrate/diophantine.hpp"
#include "blochrate/model.hpp"
#include "blochrate/rates.hpp"
#include "blochrate/sharp_ops.hpp"

namespace blochrate {

struct PopulationTrajectory {
  std::vector<double> times;
  std::vector<RealVector> states;
};

/// exp(t·M)y0 at each requested time, one dense exponential per time.
PopulationTrajectory integrate_generator(const RealMatrix& generator, const RealVector& y0,
                                         const std::vector<double>& times);

/// Snapshots at t = k·T/steps, k = 0..steps.
PopulationTrajectory integrate_rate(const RateMatrix& rate, const Populations& rho_d0, double T,
                                    int steps);

std::vector<double> uniform_times(double T, int steps);

struct ProjectorSet {
  RealMatrix Pi0;        // coordinate projector off the decoupled levels
  RealMatrix Pi;         // orthogonal projector onto the relevant kernel inside range(Pi0)
  RealMatrix basis;      // orthonormal basis of range(Pi)
  std::vector<int> decoupled;  // 0-based indices of decoupled levels
  ProjectorKind kind = ProjectorKind::KernelAB;
  double ratio = 0.0;    // μ/p of the regime used

  /// Pi0 − Pi: the part of the state that relaxes in the layer.
  RealMatrix layer() const { return Pi0 - Pi; }
};

/// Decoupled levels come from identically zero rows and columns of wmod.
/// Throws NumericalError if a singular value sits near the rank threshold.
ProjectorSet build_projectors(const RateMatrix& A, const RateMatrix& B0, const RateMatrix& wmod,
                              const RegimeInfo& regime);

/// Smallest eigenvalue of −(A+B⁰)_♯ (or −A_♯ for the Ker A projector) on the
/// range of the layer projector; +∞ if that range is trivial.
double spectral_gap_c(const RateMatrix& A, const RateMatrix& B0, const ProjectorSet& proj);

struct LayerFit {
  bool detected = false;
  double rate = 0.0;            // fitted decay rate
  double plateau = 0.0;         // median of the final 10% of snapshots
  double initial = 0.0;
  double predicted_rate = 0.0;  // c·ε^{−σ}
  double exponent = 0.0;        // σ used for the prediction
  double duration = 0.0;        // first time the norm drops below 10·plateau
  double residual = 0.0;        // rms of the log-linear fit
  int points = 0;
  bool within_band = false;     // rate ∈ [1,3]·predicted
  std::vector<double> norms;    // ‖(Pi0−Pi) y(t)‖₂ per snapshot
};

/// Exponent of the layer decay rate: ν below μ/p = 2, μ from there on.
double layer_exponent(const RegimeInfo& regime);

LayerFit timelayer_analysis(const PopulationTrajectory& traj, const ProjectorSet& proj,
                            const Scaling& scaling, const RegimeInfo& regime, double gap_c);

/// Π(W + Ψ₀^nonsing)_♯Π. A nonzero psi0 is only accepted when μ/p = 2.
RealMatrix limit_system(const ProjectorSet& proj, const RateMatrix& W, const RateMatrix& psi0_nonsing);

struct LayeredSolution {
  PopulationTrajectory y;
  PopulationTrajectory z;
  std::vector<double> error;  // ‖Π(y−z)(t)‖₂
  double sup_error = 0.0;
  double fitted_C = 0.0;      // sup of error / (ε^e + exp(−c t ε^{−σ}))
  double expected_exponent = 0.0;
  double gap_c = 0.0;
  ProjectorSet proj;
  RegimeInfo regime;
};

/// Expected order of sup‖Π(y−z)‖: ν for μ/p<2, μ at μ/p=2, μ−2p beyond.
double layered_error_exponent(const RegimeInfo& regime);

LayeredSolution solve_layered(const LevelSystem& sys, const QuasiPeriodicField& field,
                              const Scaling& scaling, const Populations& rho_d0, double T,
                              int snapshots);

LevelSystem truncate(const LevelSystem& sys, int N_keep);

/// Generator of level n ≥ 0 quantities for a countable family.
struct LevelFamily {
  std::function<double(int)> omega;
  std::function<double(int)> delta;
  std::function<double(int, int)> gamma;
  std::function<double(int, int)> W;
  std::function<Complex(int, int)> V;
  std::function<double(int)> rho0;
  QuasiPeriodicField field;
  int max_levels = 1024;

  LevelSystem build(int n) const;
  RealVector initial(int n) const;
};

struct ChooseNReport {
  int N = 0;
  bool resonance_free_tail = false;  // no resonant pair touches a level ≥ N
  double rho_tail = 0.0;
  double W_tail = 0.0;
  double psi_tail = 0.0;
  int evaluations = 0;
};

/// Smallest N (doubling, then bisection) whose truncation surrogates are all
/// ≤ nu_tol. Throws NumericalError if none exists below min(2^14, max_levels).
ChooseNReport choose_N(const LevelFamily& family, const Scaling& scaling, const DiophParams& params,
                       double nu_tol);

}  // namespace blochrate
