#include "blochrate/rates.hpp"

#include <algorithm>
#include <cmath>

namespace blochrate {

namespace {

constexpr double kRatioTol = 1e-12;

bool ratio_is(double ratio, double target) {
  return std::abs(ratio - target) <= kRatioTol * std::max(1.0, std::abs(target));
}

MultiIndex negate(const MultiIndex& a) {
  MultiIndex out(a);
  for (int& x : out) x = -x;
  return out;
}

// Σ_β (emu γ)/((emu γ)² + (ω(n,k) + β·ω + ep δ(k,n))²) |φ_β|², times 2|V(n,k)|².
RateMatrix lorentzian_rate(const LevelSystem& sys, const QuasiPeriodicField& field, double emu,
                           double ep) {
  const int n = sys.size();
  RealMatrix out = RealMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) {
      if (k == m) continue;
      const double v2 = std::norm(sys.V(m, k));
      if (v2 == 0.0) continue;
      const double g = emu * sys.gamma(k, m);
      double sum = 0.0;
      for (const auto& mode : field.modes()) {
        const double x = sys.omega_diff(m, k) + field.phase(mode.alpha) + ep * sys.delta_diff(k, m);
        sum += g / (g * g + x * x) * std::norm(mode.coeff);
      }
      out(k, m) = 2.0 * v2 * sum;
    }
  return RateMatrix(std::move(out));
}

double field_weight(const QuasiPeriodicField& field, const std::vector<MultiIndex>& betas) {
  double s = 0.0;
  for (const auto& b : betas) s += std::norm(field.coefficient(b));
  return s;
}

void require_shapes(const LevelSystem& sys, const ResonanceSet& res) {
  sys.check_shapes();
  if (res.size() != sys.size()) throw InvalidArgument("resonance set size differs from system");
}

}  // namespace

double default_resonance_tolerance(const LevelSystem& sys, const QuasiPeriodicField& field) {
  const double spread = sys.size() ? sys.omega.maxCoeff() - sys.omega.minCoeff() : 0.0;
  return 1e-9 * (1.0 + spread + field.max_frequency());
}

double default_delta_tolerance(const LevelSystem& sys) {
  const double spread = sys.size() ? sys.delta.maxCoeff() - sys.delta.minCoeff() : 0.0;
  return 1e-12 * (1.0 + spread);
}

ResonanceSet resonance_set(const LevelSystem& sys, const QuasiPeriodicField& field,
                           std::optional<double> tol_res) {
  sys.check_shapes();
  const double tol = tol_res.value_or(default_resonance_tolerance(sys, field));
  if (!(tol > 0.0)) throw InvalidArgument("resonance tolerance must be positive");
  const int n = sys.size();
  ResonanceSet res(n, tol);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      for (const auto& mode : field.modes())
        if (std::abs(sys.omega_diff(a, b) + field.phase(mode.alpha)) <= tol)
          res.at(a, b).push_back(mode.alpha);
    }
  // Enforce β ∈ res(a,b) ⇔ −β ∈ res(b,a) against threshold asymmetry.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (const auto& beta : res.at(a, b)) {
        auto& other = res.at(b, a);
        const MultiIndex nb = negate(beta);
        if (std::find(other.begin(), other.end(), nb) == other.end()) other.push_back(nb);
      }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) std::sort(res.at(a, b).begin(), res.at(a, b).end());
  return res;
}

RealMatrix resonant_weight(const LevelSystem& sys, const QuasiPeriodicField& field,
                           const ResonanceSet& res) {
  require_shapes(sys, res);
  const int n = sys.size();
  RealMatrix c = RealMatrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) c(a, b) = 2.0 * std::norm(sys.V(a, b)) * field_weight(field, res.at(a, b));
  return c;
}

RealMatrix psi_time_dependent(const LevelSystem& sys, const QuasiPeriodicField& field,
                              const Scaling& scaling, double s) {
  if (!(s >= 0.0)) throw InvalidArgument("psi_time_dependent: s must be nonnegative");
  sys.check_shapes();
  const int n = sys.size();
  const double emu = std::pow(scaling.eps(), scaling.mu());
  const double ep = std::pow(scaling.eps(), scaling.p());
  const auto& modes = field.modes();
  RealMatrix out = RealMatrix::Zero(n, n);
  if (s == 0.0) return out;

  // Per-mode factors shared by all level pairs.
  std::vector<Complex> carrier(modes.size());
  for (std::size_t j = 0; j < modes.size(); ++j)
    carrier[j] = modes[j].coeff * std::polar(1.0, field.phase(modes[j].alpha) * s);
  Complex total = 0.0;
  for (const auto& c : carrier) total += c;  // φ(s)

  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) {
      if (k == m) continue;
      const double v2 = std::norm(sys.V(m, k));
      if (v2 == 0.0) continue;
      Complex sum = 0.0;
      for (std::size_t b = 0; b < modes.size(); ++b) {
        const Complex d(emu * sys.gamma(k, m),
                        sys.omega_diff(k, m) + field.phase(modes[b].alpha) + ep * sys.delta_diff(k, m));
        sum += carrier[b] * (1.0 - std::exp(-d * s)) / d;
      }
      out(k, m) = 2.0 * v2 * (total * sum).real();
    }
  return out;
}

RateMatrix psi_averaged(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling) {
  sys.check_shapes();
  return lorentzian_rate(sys, field, std::pow(scaling.eps(), scaling.mu()),
                         std::pow(scaling.eps(), scaling.p()));
}

RateMatrix psi_dominant(const LevelSystem& sys, const QuasiPeriodicField& field,
                        const Scaling& scaling, const ResonanceSet& res) {
  if (scaling.mu() == 0.0) throw InvalidArgument("psi_dominant requires mu > 0; use psi_averaged");
  require_shapes(sys, res);
  const int n = sys.size();
  const double emu = std::pow(scaling.eps(), scaling.mu());
  const double ep = std::pow(scaling.eps(), scaling.p());
  const RealMatrix c = resonant_weight(sys, field, res);
  RealMatrix out = RealMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int m = 0; m < n; ++m) {
      if (k == m || c(k, m) == 0.0) continue;
      const double g = emu * sys.gamma(k, m);
      const double d = ep * sys.delta_diff(k, m);
      out(k, m) = c(k, m) * g / (g * g + d * d);
    }
  return RateMatrix(std::move(out));
}

RateMatrix w_mod(const LevelSystem& sys, const RateMatrix& psi_dom) {
  if (psi_dom.size() != sys.size()) throw InvalidArgument("w_mod: dimension mismatch");
  return RateMatrix(psi_dom.entries() + sys.W);
}

SplitAB split_AB(const LevelSystem& sys, const QuasiPeriodicField& field, const Scaling& scaling,
                 const ResonanceSet& res) {
  if (scaling.mu() == 0.0) throw InvalidArgument("split_AB requires mu > 0");
  require_shapes(sys, res);
  const int n = sys.size();
  const double mu = scaling.mu(), p = scaling.p(), eps = scaling.eps();
  const double tol_delta = default_delta_tolerance(sys);
  const RealMatrix c = resonant_weight(sys, field, res);
  RealMatrix a = RealMatrix::Zero(n, n), b = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || c(i, j) == 0.0) continue;
      const double g = sys.gamma(i, j);
      const double d = sys.delta_diff(i, j);
      if (std::abs(d) <= tol_delta) {
        a(i, j) = c(i, j) / g;
      } else if (mu <= p) {
        b(i, j) = c(i, j) * g / (g * g + std::pow(eps, 2.0 * (p - mu)) * d * d);
      } else {
        b(i, j) = c(i, j) * g / (std::pow(eps, 2.0 * (mu - p)) * g * g + d * d);
      }
    }
  return {RateMatrix(std::move(a)), RateMatrix(std::move(b)), scaling.nu()};
}

RateMatrix b0_limit(const LevelSystem& sys, const QuasiPeriodicField& field, double mu, double p,
                    const ResonanceSet& res) {
  require_shapes(sys, res);
  const int n = sys.size();
  const double tol_delta = default_delta_tolerance(sys);
  const RealMatrix c = resonant_weight(sys, field, res);
  RealMatrix b = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || c(i, j) == 0.0) continue;
      const double g = sys.gamma(i, j);
      const double d = sys.delta_diff(i, j);
      if (std::abs(d) <= tol_delta) continue;
      if (ratio_is(mu / p, 1.0))
        b(i, j) = c(i, j) * g / (g * g + d * d);
      else if (mu < p)
        b(i, j) = c(i, j) / g;
      else
        b(i, j) = c(i, j) * g / (d * d);
    }
  return RateMatrix(std::move(b));
}

std::string to_string(ProjectorKind k) {
  return k == ProjectorKind::KernelAB ? "ker_A_cap_ker_B0" : "ker_A";
}

std::string to_string(RateForm f) {
  switch (f) {
    case RateForm::InverseGamma: return "1/gamma";
    case RateForm::Lorentzian: return "gamma/(gamma^2+delta^2)";
    case RateForm::GammaOverDeltaSq: return "gamma/delta^2";
    case RateForm::Zero: return "0";
    case RateForm::AveragedLimit: return "1/gamma (all beta, Lorentzian limit)";
  }
  return "?";
}

RegimeInfo regime_classify(double mu, double p, bool finite_N, bool W_zero) {
  if (!(mu >= 0.0 && mu < 0.5)) throw InvalidArgument("mu must lie in [0,1/2)");
  if (!(p > 0.0)) throw InvalidArgument("p must be positive");
  RegimeInfo info;
  info.mu = mu;
  info.p = p;
  info.ratio = mu / p;
  info.finite_N = finite_N;
  info.nu = mu <= p ? mu : 2.0 * p - mu;
  const double r = info.ratio;

  if (finite_N) {
    if (ratio_is(r, 1.0)) {
      info.row = "mu/p = 1";
      info.sigma = mu;
      info.difference = "transition rates";
    } else if (r < 1.0) {
      info.row = "0 <= mu/p < 1";
      info.sigma = mu;
      info.difference = "none";
    } else if (r < 2.0 && !ratio_is(r, 2.0)) {
      info.row = "1 < mu/p < 2";
      info.sigma = 2.0 * p - mu;
      info.difference = "transition rates and time-layer";
    } else {
      info.row = "2 <= mu/p";
      info.sigma = mu;
      info.projector = ProjectorKind::KernelA;
      info.difference = "projector and asymptotic state";
      info.notes = ratio_is(r, 2.0) ? "B0 = C gamma/delta^2 enters the limit system"
                                    : "limit system is Pi_A W Pi_A";
    }
    return info;
  }

  if (r >= 2.0 || ratio_is(r, 2.0)) info.projector = ProjectorKind::KernelA;
  auto refuse = [&info](const std::string& why) {
    info.homogeneous = false;
    info.form.reset();
    info.row = "no homogeneous reduction";
    info.notes = why;
    return info;
  };

  if (mu == 0.0) {
    info.row = "mu = 0";
    info.sigma = 0.0;
    info.form = RateForm::AveragedLimit;
    info.notes = "sum over all beta";
    return info;
  }
  if (!W_zero) return refuse("requires W = 0 when mu > 0");
  if (ratio_is(r, 1.0)) {
    info.row = "mu/p = 1";
    info.sigma = mu;
    info.form = RateForm::Lorentzian;
  } else if (ratio_is(r, 2.0)) {
    info.row = "mu/p = 2";
    info.sigma = 0.0;
    info.form = RateForm::GammaOverDeltaSq;
  } else if (r < 2.0 / 3.0) {
    info.row = "0 < mu/p < 2/3";
    info.sigma = mu;
    info.form = RateForm::InverseGamma;
  } else if (r > 4.0 / 3.0 && r < 2.0) {
    info.row = "4/3 < mu/p < 2";
    info.sigma = 2.0 * p - mu;
    info.form = RateForm::GammaOverDeltaSq;
  } else if (r > 2.0) {
    info.row = "2 < mu/p";
    info.sigma = 0.0;
    info.form = RateForm::Zero;
  } else {
    return refuse("mu/p outside the single-power rows");
  }
  return info;
}

RateMatrix psi_app(const LevelSystem& sys, const QuasiPeriodicField& field, const ResonanceSet& res,
                   const RegimeInfo& regime) {
  if (!regime.homogeneous || !regime.form)
    throw InvalidArgument("regime admits no homogeneous reduction");
  require_shapes(sys, res);
  const int n = sys.size();
  if (*regime.form == RateForm::AveragedLimit) return lorentzian_rate(sys, field, 1.0, 0.0);

  const double tol_delta = default_delta_tolerance(sys);
  const RealMatrix c = resonant_weight(sys, field, res);
  RealMatrix out = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || c(i, j) == 0.0) continue;
      const double g = sys.gamma(i, j);
      const double d = sys.delta_diff(i, j);
      switch (*regime.form) {
        case RateForm::InverseGamma: out(i, j) = c(i, j) / g; break;
        case RateForm::Lorentzian: out(i, j) = c(i, j) * g / (g * g + d * d); break;
        case RateForm::GammaOverDeltaSq:
          if (std::abs(d) <= tol_delta)
            throw InvalidArgument("gamma/delta^2 form needs delta != 0 on every resonant pair");
          out(i, j) = c(i, j) * g / (d * d);
          break;
        case RateForm::Zero: out(i, j) = 0.0; break;
        case RateForm::AveragedLimit: break;
      }
    }
  return RateMatrix(std::move(out));
}

RealMatrix average_oracle(const LevelSystem& sys, const QuasiPeriodicField& field,
                          const Scaling& scaling, double S, int quad_steps) {
  if (!(S > 0.0)) throw InvalidArgument("average_oracle: S must be positive");
  if (quad_steps < 2) throw InvalidArgument("average_oracle: need at least 2 panels");
  const int m = quad_steps + (quad_steps % 2);
  const double h = S / m;
  RealMatrix acc = psi_time_dependent(sys, field, scaling, 0.0) + psi_time_dependent(sys, field, scaling, S);
  for (int i = 1; i < m; ++i)
    acc += (i % 2 ? 4.0 : 2.0) * psi_time_dependent(sys, field, scaling, i * h);
  return acc * (h / 3.0) / S;
}

}  // namespace blochrate
