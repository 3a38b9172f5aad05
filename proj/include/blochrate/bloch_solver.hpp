#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "blochrate/model.hpp"

namespace blochrate {

enum class StepMethod { LawsonRK4 };

struct SolverConfig {
  double T_final = 1.0;
  double h0 = 0.1;
  int snapshot_stride = 0;  // 0: pick a stride giving ~target_snapshots
  int target_snapshots = 400;
  StepMethod method = StepMethod::LawsonRK4;

  void validate() const;
};

struct SnapshotDiagnostics {
  double trace = 0.0;
  double herm_residual = 0.0;
  double min_diagonal = 0.0;
  double coherence_l1 = 0.0;
};

struct BlochTrajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<SnapshotDiagnostics> diagnostics;
  double step = 0.0;
  long steps = 0;
  double coherence_sup = 0.0;  // max over every accepted step, not just snapshots
};

struct ConservationReport {
  double trace_drift = 0.0;
  double herm_residual = 0.0;
  double negativity = 0.0;  // max(0, −min diagonal)
};

/// Right-hand side of the ε-scaled Bloch equation at macroscopic time t.
DensityMatrix bloch_rhs(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling, double t, const DensityMatrix& rho);

/// Nominal step h0·ε²/(1 + max|α·ω| + max|ω_ε(n,m)|).
double nominal_step(const LevelSystem& sys, const QuasiPeriodicField& field,
                    const Scaling& scaling, double h0);

/// Fixed-step integration in the interaction picture: the diagonal-in-(n,m)
/// linear part is propagated exactly, the coupling and Pauli terms by RK4.
BlochTrajectory integrate_bloch(const LevelSystem& sys, const QuasiPeriodicField& field,
                                const Scaling& scaling, const DensityMatrix& rho0,
                                const SolverConfig& cfg);

ConservationReport conservation_diagnostics(const BlochTrajectory& traj);

std::vector<std::pair<double, double>> coherence_norm_series(const BlochTrajectory& traj);

/// CSV with columns t, rho_1 .. rho_N, coherence_l1, trace, herm_residual.
void write_trajectory_csv(std::ostream& out, const BlochTrajectory& traj);

}  // namespace blochrate
