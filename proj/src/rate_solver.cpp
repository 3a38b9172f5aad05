#include "blochrate/rate_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blochrate/linalg.hpp"

namespace blochrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool ratio_is_two(double ratio) { return std::abs(ratio - 2.0) <= 2e-12; }

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

// Mixed norm of the entries with max(n,k) ≥ cut.
double tail_mixed_norm(const RealMatrix& a, int cut) {
  const int n = static_cast<int>(a.rows());
  RealVector rows = RealVector::Zero(n), cols = RealVector::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (std::max(i, j) < cut) continue;
      const double x = std::abs(a(i, j));
      rows(i) += x;
      cols(j) += x;
    }
  return n ? rows.maxCoeff() + cols.maxCoeff() : 0.0;
}

}  // namespace

std::vector<double> uniform_times(double T, int steps) {
  if (!(T > 0.0)) throw InvalidArgument("final time must be positive");
  if (steps < 1) throw InvalidArgument("need at least one step");
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[k] = T * k / steps;
  return t;
}

PopulationTrajectory integrate_generator(const RealMatrix& generator, const RealVector& y0,
                                         const std::vector<double>& times) {
  if (generator.rows() != generator.cols() || generator.rows() != y0.size())
    throw InvalidArgument("integrate_generator: dimension mismatch");
  PopulationTrajectory traj;
  traj.times = times;
  const bool symmetric = generator == generator.transpose();
  for (double t : times) {
    if (!(t >= 0.0)) throw InvalidArgument("snapshot times must be nonnegative");
    if (t == 0.0) {
      traj.states.push_back(y0);
      continue;
    }
    const RealMatrix e = symmetric ? linalg::expm_symmetric(t * generator) : linalg::expm(t * generator);
    traj.states.push_back(e * y0);
    if (!traj.states.back().allFinite()) throw NumericalError("non-finite rate-equation state");
  }
  return traj;
}

PopulationTrajectory integrate_rate(const RateMatrix& rate, const Populations& rho_d0, double T,
                                    int steps) {
  if (rate.size() != rho_d0.size()) throw InvalidArgument("integrate_rate: dimension mismatch");
  return integrate_generator(sharpen(rate).matrix, rho_d0.values(), uniform_times(T, steps));
}

ProjectorSet build_projectors(const RateMatrix& A, const RateMatrix& B0, const RateMatrix& wmod,
                              const RegimeInfo& regime) {
  const int n = A.size();
  if (B0.size() != n || wmod.size() != n) throw InvalidArgument("build_projectors: dimension mismatch");
  ProjectorSet out;
  out.kind = regime.projector;
  out.ratio = regime.ratio;
  out.Pi0 = RealMatrix::Identity(n, n);
  for (int i = 0; i < n; ++i)
    if (wmod.entries().row(i).isZero(0.0) && wmod.entries().col(i).isZero(0.0)) {
      out.decoupled.push_back(i);
      out.Pi0(i, i) = 0.0;
    }

  const RealMatrix a = sharpen(A).matrix;
  const bool use_b = out.kind == ProjectorKind::KernelAB;
  const RealMatrix b = sharpen(B0).matrix;
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), use_b ? b.cwiseAbs().maxCoeff() : 0.0});
  const Eigen::Index rows = n + (use_b ? n : 0) + static_cast<Eigen::Index>(out.decoupled.size());
  RealMatrix stacked = RealMatrix::Zero(rows, n);
  stacked.topRows(n) = a;
  if (use_b) stacked.middleRows(n, n) = b;
  Eigen::Index r = n + (use_b ? n : 0);
  for (int i : out.decoupled) stacked(r++, i) = scale;

  if (linalg::rank_is_fragile(stacked)) throw NumericalError("kernel extraction: rank instability");
  out.basis = linalg::kernel_basis(stacked);
  out.Pi = linalg::projector(out.basis, n);
  return out;
}

double spectral_gap_c(const RateMatrix& A, const RateMatrix& B0, const ProjectorSet& proj) {
  const RealMatrix layer = proj.layer();
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(layer);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < layer.rows(); ++i)
    if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
  if (cols.empty()) return kInf;
  RealMatrix q(layer.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(cols[j]);

  RealMatrix m = sharpen(A).matrix;
  if (proj.kind == ProjectorKind::KernelAB) m += sharpen(B0).matrix;
  const RealMatrix sym = 0.5 * (m + m.transpose());
  const RealMatrix reduced = -(q.transpose() * sym * q);
  return Eigen::SelfAdjointEigenSolver<RealMatrix>(reduced).eigenvalues().minCoeff();
}

double layer_exponent(const RegimeInfo& regime) {
  return regime.ratio >= 2.0 || ratio_is_two(regime.ratio) ? regime.mu : regime.nu;
}

LayerFit timelayer_analysis(const PopulationTrajectory& traj, const ProjectorSet& proj,
                            const Scaling& scaling, const RegimeInfo& regime, double gap_c) {
  if (traj.states.size() < 3) throw InvalidArgument("timelayer_analysis: trajectory too short");
  LayerFit fit;
  fit.exponent = layer_exponent(regime);
  fit.predicted_rate = gap_c * std::pow(scaling.eps(), -fit.exponent);
  const RealMatrix layer = proj.layer();
  for (const auto& y : traj.states) fit.norms.push_back((layer * y).norm());

  const std::size_t count = fit.norms.size();
  const std::size_t tail = std::max<std::size_t>(1, count / 10);
  fit.plateau = median(std::vector<double>(fit.norms.end() - static_cast<std::ptrdiff_t>(tail), fit.norms.end()));
  fit.initial = fit.norms.front();
  if (!(fit.initial > 10.0 * fit.plateau)) return fit;

  const double hi = 0.5 * fit.initial, lo = 10.0 * fit.plateau;
  std::vector<double> ts, ls;
  bool entered = false;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = fit.norms[i];
    if (v <= hi && v >= lo) {
      entered = true;
      ts.push_back(traj.times[i]);
      ls.push_back(std::log(v));
    } else if (entered && v < lo) {
      fit.duration = traj.times[i];
      break;
    }
  }
  if (ts.size() < 3) throw NumericalError("timelayer_analysis: no decaying segment found");
  const Eigen::Index m = static_cast<Eigen::Index>(ts.size());
  RealMatrix design(m, 2);
  RealVector rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = ts[static_cast<std::size_t>(i)];
    rhs(i) = ls[static_cast<std::size_t>(i)];
  }
  const RealVector coef = design.colPivHouseholderQr().solve(rhs);
  fit.detected = true;
  fit.rate = -coef(1);
  fit.points = static_cast<int>(m);
  fit.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(m));
  // Slack absorbs rounding of the log-linear fit when the rate sits on the lower edge.
  fit.within_band = fit.rate >= fit.predicted_rate * (1.0 - 1e-6) && fit.rate <= 3.0 * fit.predicted_rate;
  return fit;
}

RealMatrix limit_system(const ProjectorSet& proj, const RateMatrix& W, const RateMatrix& psi0_nonsing) {
  if (W.size() != proj.Pi.rows() || psi0_nonsing.size() != proj.Pi.rows())
    throw InvalidArgument("limit_system: dimension mismatch");
  if (!psi0_nonsing.is_zero() && !ratio_is_two(proj.ratio))
    throw InvalidArgument("limit_system: nonsingular psi0 is only defined at mu/p = 2");
  return proj.Pi * sharpen(W + psi0_nonsing).matrix * proj.Pi;
}

double layered_error_exponent(const RegimeInfo& regime) {
  if (ratio_is_two(regime.ratio)) return regime.mu;
  if (regime.ratio > 2.0) return regime.mu - 2.0 * regime.p;
  return regime.nu;
}

LayeredSolution solve_layered(const LevelSystem& sys, const QuasiPeriodicField& field,
                              const Scaling& scaling, const Populations& rho_d0, double T,
                              int snapshots) {
  if (scaling.mu() == 0.0) throw InvalidArgument("solve_layered requires mu > 0");
  if (rho_d0.size() != sys.size()) throw InvalidArgument("solve_layered: dimension mismatch");
  LayeredSolution out;
  const ResonanceSet res = resonance_set(sys, field);
  const SplitAB split = split_AB(sys, field, scaling, res);
  const RateMatrix b0 = b0_limit(sys, field, scaling.mu(), scaling.p(), res);
  const RateMatrix W(sys.W);
  out.regime = regime_classify(scaling.mu(), scaling.p(), true, W.is_zero());
  const RateMatrix wmod = w_mod(sys, psi_dominant(sys, field, scaling, res));
  out.proj = build_projectors(split.A, b0, wmod, out.regime);
  out.gap_c = spectral_gap_c(split.A, b0, out.proj);
  out.expected_exponent = layered_error_exponent(out.regime);

  const double eps = scaling.eps();
  const RealMatrix full = std::pow(eps, -scaling.mu()) * sharpen(split.A).matrix +
                          std::pow(eps, -split.nu) * sharpen(split.B_eps).matrix + sharpen(W).matrix;
  const RateMatrix psi0 = ratio_is_two(out.regime.ratio) ? b0 : RateMatrix::zero(sys.size());
  const RealMatrix limit = limit_system(out.proj, W, psi0);
  const auto times = uniform_times(T, snapshots);
  out.y = integrate_generator(full, rho_d0.values(), times);
  out.z = integrate_generator(limit, out.proj.Pi * rho_d0.values(), times);

  const double sigma = layer_exponent(out.regime);
  const double e_pow = std::pow(eps, out.expected_exponent);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double err = (out.proj.Pi * (out.y.states[i] - out.z.states[i])).norm();
    out.error.push_back(err);
    out.sup_error = std::max(out.sup_error, err);
    const double layer = std::isfinite(out.gap_c) ? std::exp(-out.gap_c * times[i] * std::pow(eps, -sigma)) : 0.0;
    out.fitted_C = std::max(out.fitted_C, err / (e_pow + layer));
  }
  return out;
}

LevelSystem truncate(const LevelSystem& sys, int N_keep) {
  sys.check_shapes();
  if (N_keep < 1 || N_keep > sys.size()) throw InvalidArgument("truncate: N_keep out of range");
  LevelSystem out;
  out.omega = sys.omega.head(N_keep);
  out.delta = sys.delta.head(N_keep);
  out.gamma = sys.gamma.topLeftCorner(N_keep, N_keep);
  out.W = sys.W.topLeftCorner(N_keep, N_keep);
  out.V = sys.V.topLeftCorner(N_keep, N_keep);
  out.temperature = sys.temperature;
  return out;
}

LevelSystem LevelFamily::build(int n) const {
  if (n < 1) throw InvalidArgument("family size must be positive");
  LevelSystem sys;
  sys.omega.resize(n);
  sys.delta.resize(n);
  sys.gamma = RealMatrix::Zero(n, n);
  sys.W = RealMatrix::Zero(n, n);
  sys.V = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    sys.omega(i) = omega(i);
    sys.delta(i) = delta ? delta(i) : 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      sys.gamma(i, j) = gamma(i, j);
      sys.W(i, j) = W ? W(i, j) : 0.0;
      sys.V(i, j) = V(i, j);
    }
  }
  return sys;
}

RealVector LevelFamily::initial(int n) const {
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rho0(i);
  return v;
}

ChooseNReport choose_N(const LevelFamily& family, const Scaling& scaling, const DiophParams& params,
                       double nu_tol) {
  params.validate();
  if (!(nu_tol > 0.0)) throw InvalidArgument("nu_tol must be positive");
  const int cap = std::min(1 << 14, family.max_levels);
  if (cap < 1) throw InvalidArgument("family needs at least one level");

  const LevelSystem sys = family.build(cap);
  const RealVector rho = family.initial(cap);
  const ResonanceSet res = resonance_set(sys, family.field);
  const RealMatrix psi = scaling.mu() > 0.0 ? psi_dominant(sys, family.field, scaling, res).entries()
                                            : psi_averaged(sys, family.field, scaling).entries();
  RealVector rho_tail_sq(cap + 1);
  rho_tail_sq(cap) = 0.0;
  for (int i = cap - 1; i >= 0; --i) rho_tail_sq(i) = rho_tail_sq(i + 1) + rho(i) * rho(i);

  ChooseNReport rep;
  auto satisfied = [&](int n, bool keep) {
    ++rep.evaluations;
    const double r = std::sqrt(rho_tail_sq(n));
    const double w = tail_mixed_norm(sys.W, n);
    const double p = tail_mixed_norm(psi, n);
    if (keep) {
      rep.rho_tail = r;
      rep.W_tail = w;
      rep.psi_tail = p;
    }
    return r <= nu_tol && w <= nu_tol && p <= nu_tol;
  };

  int hi = 1;
  while (!satisfied(hi, false)) {
    if (hi >= cap) throw NumericalError("choose_N: no N below the cap satisfies the criteria");
    hi = std::min(2 * hi, cap);
  }
  int lo = hi / 2;  // lo fails (or is 0)
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (satisfied(mid, false))
      hi = mid;
    else
      lo = mid;
  }
  satisfied(hi, true);
  rep.N = hi;
  rep.resonance_free_tail = true;
  for (int i = 0; i < cap && rep.resonance_free_tail; ++i)
    for (int j = 0; j < cap; ++j)
      if (std::max(i, j) >= hi && res.resonant(i, j) && std::norm(sys.V(i, j)) > 0.0) {
        rep.resonance_free_tail = false;
        break;
      }
  return rep;
}

}  // namespace blochrate
