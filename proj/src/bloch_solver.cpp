#include "blochrate/bloch_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace blochrate {

namespace {

// Pieces of the Bloch right-hand side that do not depend on the state.
struct BlochOperator {
  ComplexMatrix linear;  // Ω^ε(n,m)/ε² off the diagonal, 0 on it
  ComplexMatrix V;
  RealMatrix pauli;      // W_♯
  const QuasiPeriodicField* field;
  double inv_eps;
  double inv_eps2;

  BlochOperator(const LevelSystem& sys, const QuasiPeriodicField& f, const Scaling& sc)
      : V(sys.V), field(&f), inv_eps(1.0 / sc.eps()), inv_eps2(1.0 / (sc.eps() * sc.eps())) {
    sys.check_shapes();
    const int n = sys.size();
    const double ep = std::pow(sc.eps(), sc.p());
    const double emu = std::pow(sc.eps(), sc.mu());
    linear = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = sys.omega_diff(i, j) + ep * sys.delta_diff(i, j);
        linear(i, j) = Complex(-emu * sys.gamma(i, j), -w) * inv_eps2;
      }
    pauli = sys.W.transpose();
    for (int i = 0; i < n; ++i) pauli(i, i) = -sys.W.row(i).sum();
  }

  // Coupling and Pauli terms.
  ComplexMatrix nonlinear(double t, const ComplexMatrix& rho) const {
    const double phi = field->empty() ? 0.0 : field->evaluate_complex(t * inv_eps2).real();
    ComplexMatrix out = (Complex(0.0, phi * inv_eps)) * (V * rho - rho * V);
    const RealVector d = rho.diagonal().real();
    out.diagonal() += (pauli * d).cast<Complex>();
    return out;
  }
};

SnapshotDiagnostics diagnose(const DensityMatrix& rho) {
  SnapshotDiagnostics d;
  d.trace = rho.trace().real();
  d.herm_residual = rho.hermiticity_residual();
  d.min_diagonal = rho.size() ? rho.diagonal().minCoeff() : 0.0;
  d.coherence_l1 = rho.coherence_l1();
  return d;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(h0 > 0.0)) throw InvalidArgument("h0 must be positive");
  if (!(T_final > 0.0)) throw InvalidArgument("T_final must be positive");
  if (snapshot_stride < 0) throw InvalidArgument("snapshot_stride must be nonnegative");
  if (target_snapshots < 1) throw InvalidArgument("target_snapshots must be positive");
}

DensityMatrix bloch_rhs(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling, double t, const DensityMatrix& rho) {
  if (rho.size() != sys.size()) throw InvalidArgument("bloch_rhs: dimension mismatch");
  const BlochOperator op(sys, field, scaling);
  return DensityMatrix(op.linear.cwiseProduct(rho.entries()) + op.nonlinear(t, rho.entries()));
}

double nominal_step(const LevelSystem& sys, const QuasiPeriodicField& field,
                    const Scaling& scaling, double h0) {
  const double ep = std::pow(scaling.eps(), scaling.p());
  double wmax = 0.0;
  for (int i = 0; i < sys.size(); ++i)
    for (int j = 0; j < sys.size(); ++j)
      wmax = std::max(wmax, std::abs(sys.omega_diff(i, j) + ep * sys.delta_diff(i, j)));
  return h0 * scaling.eps() * scaling.eps() / (1.0 + field.max_frequency() + wmax);
}

BlochTrajectory integrate_bloch(const LevelSystem& sys, const QuasiPeriodicField& field,
                                const Scaling& scaling, const DensityMatrix& rho0,
                                const SolverConfig& cfg) {
  cfg.validate();
  if (rho0.size() != sys.size()) throw InvalidArgument("integrate_bloch: dimension mismatch");
  const BlochOperator op(sys, field, scaling);

  const double h_nom = nominal_step(sys, field, scaling, cfg.h0);
  const double count = std::ceil(cfg.T_final / h_nom);
  if (!(h_nom > 0.0) || !std::isfinite(count) || count > 1e11)
    throw NumericalError("step size underflow at t=0");
  const long nsteps = std::max(1L, static_cast<long>(count));
  const double h = cfg.T_final / static_cast<double>(nsteps);
  const long stride = cfg.snapshot_stride > 0
                          ? cfg.snapshot_stride
                          : std::max(1L, nsteps / static_cast<long>(cfg.target_snapshots));

  const ComplexMatrix e_half = (op.linear * (0.5 * h)).array().exp().matrix();
  const ComplexMatrix e_full = e_half.cwiseProduct(e_half);

  BlochTrajectory traj;
  traj.step = h;
  traj.steps = nsteps;
  auto record = [&](double t, const ComplexMatrix& rho) {
    if (!rho.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite Bloch state at t=" << t;
      throw NumericalError(msg.str());
    }
    traj.times.push_back(t);
    traj.states.emplace_back(rho);
    traj.diagnostics.push_back(diagnose(traj.states.back()));
  };

  ComplexMatrix rho = rho0.entries();
  record(0.0, rho);
  traj.coherence_sup = traj.diagnostics.front().coherence_l1;
  for (long step = 1; step <= nsteps; ++step) {
    const double t = static_cast<double>(step - 1) * h;
    const ComplexMatrix k1 = op.nonlinear(t, rho);
    const ComplexMatrix k2 = op.nonlinear(t + 0.5 * h, e_half.cwiseProduct(rho + (0.5 * h) * k1));
    const ComplexMatrix half_rho = e_half.cwiseProduct(rho);
    const ComplexMatrix k3 = op.nonlinear(t + 0.5 * h, half_rho + (0.5 * h) * k2);
    const ComplexMatrix full_rho = e_full.cwiseProduct(rho);
    const ComplexMatrix k4 = op.nonlinear(t + h, full_rho + h * e_half.cwiseProduct(k3));
    rho = full_rho + (h / 6.0) * (e_full.cwiseProduct(k1) + 2.0 * e_half.cwiseProduct(k2 + k3) + k4);
    traj.coherence_sup = std::max(traj.coherence_sup, rho.cwiseAbs().sum() - rho.diagonal().cwiseAbs().sum());
    if (step % stride == 0 || step == nsteps) record(static_cast<double>(step) * h, rho);
  }
  return traj;
}

ConservationReport conservation_diagnostics(const BlochTrajectory& traj) {
  if (traj.diagnostics.empty()) throw InvalidArgument("empty trajectory");
  ConservationReport rep;
  const double trace0 = traj.diagnostics.front().trace;
  for (const auto& d : traj.diagnostics) {
    rep.trace_drift = std::max(rep.trace_drift, std::abs(d.trace - trace0));
    rep.herm_residual = std::max(rep.herm_residual, d.herm_residual);
    rep.negativity = std::max(rep.negativity, -d.min_diagonal);
  }
  return rep;
}

std::vector<std::pair<double, double>> coherence_norm_series(const BlochTrajectory& traj) {
  if (traj.times.empty()) throw InvalidArgument("empty trajectory");
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    out.emplace_back(traj.times[i], traj.diagnostics[i].coherence_l1);
  return out;
}

void write_trajectory_csv(std::ostream& out, const BlochTrajectory& traj) {
  const int n = traj.states.empty() ? 0 : traj.states.front().size();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",rho_" << i;
  out << ",coherence_l1,trace,herm_residual\n";
  out.precision(17);
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    out << traj.times[s];
    const RealVector d = traj.states[s].diagonal();
    for (int i = 0; i < n; ++i) out << ',' << d(i);
    const auto& diag = traj.diagnostics[s];
    out << ',' << diag.coherence_l1 << ',' << diag.trace << ',' << diag.herm_residual << '\n';
  }
}

}  // namespace blochrate
