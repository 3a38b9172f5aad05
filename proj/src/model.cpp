#include "blochrate/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace blochrate {

void LevelSystem::check_shapes() const {
  const Eigen::Index n = omega.size();
  if (n < 1) throw InvalidArgument("level system needs at least one level");
  auto square = [n](Eigen::Index r, Eigen::Index c) { return r == n && c == n; };
  if (delta.size() != n) throw InvalidArgument("delta has wrong length");
  if (!square(gamma.rows(), gamma.cols())) throw InvalidArgument("gamma has wrong shape");
  if (!square(W.rows(), W.cols())) throw InvalidArgument("W has wrong shape");
  if (!square(V.rows(), V.cols())) throw InvalidArgument("V has wrong shape");
  if (temperature && !(*temperature > 0.0))
    throw InvalidArgument("temperature must be positive");
}

int l1_norm(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += std::abs(a);
  return s;
}

QuasiPeriodicField::QuasiPeriodicField(std::vector<double> freq, std::vector<FourierMode> modes)
    : freq_(std::move(freq)) {
  if (freq_.empty()) throw InvalidArgument("field needs at least one base frequency");
  std::map<MultiIndex, Complex> merged;
  for (const auto& m : modes) {
    if (m.alpha.size() != freq_.size())
      throw InvalidArgument("multi-index dimension differs from frequency count");
    merged[m.alpha] += m.coeff;
  }
  double scale = 0.0;
  for (const auto& [a, c] : merged) scale += std::abs(c);
  for (const auto& [a, c] : merged) {
    MultiIndex neg(a);
    for (int& x : neg) x = -x;
    auto it = merged.find(neg);
    const Complex partner = it == merged.end() ? Complex(0.0) : it->second;
    if (std::abs(partner - std::conj(c)) > 1e-12 * std::max(scale, 1.0))
      throw InvalidArgument("field is not real: coefficient of -alpha is not the conjugate");
  }
  for (const auto& [a, c] : merged)
    if (c != Complex(0.0)) modes_.push_back({a, c});
}

double QuasiPeriodicField::phase(const MultiIndex& alpha) const {
  double s = 0.0;
  for (std::size_t j = 0; j < freq_.size(); ++j) s += alpha[j] * freq_[j];
  return s;
}

Complex QuasiPeriodicField::coefficient(const MultiIndex& alpha) const {
  for (const auto& m : modes_)
    if (m.alpha == alpha) return m.coeff;
  return 0.0;
}

int QuasiPeriodicField::support_bound() const {
  int b = 0;
  for (const auto& m : modes_) b = std::max(b, l1_norm(m.alpha));
  return b;
}

double QuasiPeriodicField::max_frequency() const {
  double b = 0.0;
  for (const auto& m : modes_) b = std::max(b, std::abs(phase(m.alpha)));
  return b;
}

double QuasiPeriodicField::coefficient_l1() const {
  double s = 0.0;
  for (const auto& m : modes_) s += std::abs(m.coeff);
  return s;
}

Complex QuasiPeriodicField::evaluate_complex(double t) const {
  Complex s = 0.0;
  for (const auto& m : modes_) s += m.coeff * std::polar(1.0, phase(m.alpha) * t);
  return s;
}

double field_value(const QuasiPeriodicField& field, double t) {
  const Complex v = field.evaluate_complex(t);
  if (std::abs(v.imag()) > 1e-12 * std::max(field.coefficient_l1(), 1.0)) {
    std::ostringstream msg;
    msg << "field value has imaginary part " << v.imag() << " at t=" << t;
    throw NumericalError(msg.str());
  }
  return v.real();
}

Scaling::Scaling(double eps, double mu, double p) : eps_(eps), mu_(mu), p_(p) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidArgument("eps must lie in (0,1]");
  if (!(mu >= 0.0 && mu < 0.5)) throw InvalidArgument("mu must lie in [0,1/2)");
  if (!(p > 0.0)) throw InvalidArgument("p must be positive");
}

double Scaling::nu() const { return mu_ <= p_ ? mu_ : 2.0 * p_ - mu_; }

DensityMatrix::DensityMatrix(ComplexMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw InvalidArgument("density matrix must be square");
}

double DensityMatrix::hermiticity_residual() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

RealVector DensityMatrix::diagonal() const { return entries_.diagonal().real(); }

double DensityMatrix::coherence_l1() const {
  return entries_.cwiseAbs().sum() - entries_.diagonal().cwiseAbs().sum();
}

Populations::Populations(RealVector values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_(i)) || values_(i) < 0.0)
      throw InvalidArgument("populations must be finite and nonnegative");
}

double hermiticity_tolerance(const ComplexMatrix& m) {
  const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  return 1e-10 * (1.0 + scale);
}

ValidationReport validate_system(const LevelSystem& sys) {
  ValidationReport rep;
  sys.check_shapes();
  const int n = sys.size();

  double gmin = std::numeric_limits<double>::infinity();
  bool gamma_sym = true, gamma_diag = true, gamma_neg = false;
  for (int i = 0; i < n; ++i) {
    if (sys.gamma(i, i) != 0.0) gamma_diag = false;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (sys.gamma(i, j) != sys.gamma(j, i)) gamma_sym = false;
      if (sys.gamma(i, j) < 0.0) gamma_neg = true;
      gmin = std::min(gmin, sys.gamma(i, j));
    }
  }
  rep.gamma_floor = n > 1 ? gmin : 0.0;
  if (!gamma_sym) rep.violations.push_back("gamma symmetry");
  if (!gamma_diag) rep.violations.push_back("gamma diagonal");
  if (gamma_neg) rep.violations.push_back("gamma sign");
  if (n > 1 && !(gmin > 0.0)) rep.violations.push_back("gamma floor");

  rep.hermiticity_residual = (sys.V - sys.V.adjoint()).cwiseAbs().maxCoeff();
  if (rep.hermiticity_residual > hermiticity_tolerance(sys.V))
    rep.violations.push_back("V hermiticity");

  bool w_neg = false, w_diag = false;
  for (int i = 0; i < n; ++i) {
    if (sys.W(i, i) != 0.0) w_diag = true;
    for (int j = 0; j < n; ++j)
      if (i != j && sys.W(i, j) < 0.0) w_neg = true;
  }
  if (w_neg) rep.violations.push_back("W sign");
  if (w_diag) rep.violations.push_back("W diagonal");

  if (sys.temperature) {
    const double T = *sys.temperature;
    double res = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        res = std::max(res, std::abs(sys.W(i, j) - std::exp(sys.omega_diff(i, j) / T) * sys.W(j, i)));
    rep.microreversibility_residual = res;
    if (res > 1e-12 * (1.0 + sys.W.cwiseAbs().maxCoeff()))
      rep.violations.push_back("microreversibility");
  }

  if (!sys.omega.allFinite() || !sys.delta.allFinite())
    rep.violations.push_back("bounded energies");
  return rep;
}

DensityMatrix well_prepared_state(const Populations& pop) {
  const int n = pop.size();
  ComplexMatrix rho = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) rho(i, i) = pop.values()(i);
  return DensityMatrix(std::move(rho));
}

}  // namespace blochrate
