#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blochrate {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using MultiIndex = std::vector<int>;

// Raised on malformed inputs (shapes, ranges, signs).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation cannot produce a trustworthy number.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N-level matter model. Tables are 0-based internally.
struct LevelSystem {
  RealVector omega;     // energies ω(n)
  RealVector delta;     // perturbations δ(n)
  RealMatrix gamma;     // transverse relaxation γ(n,m)
  RealMatrix W;         // Pauli coefficients W(n,m)
  ComplexMatrix V;      // dipole couplings V(n,m)
  std::optional<double> temperature;

  /// Throws InvalidArgument if the table shapes disagree with omega.
  void check_shapes() const;

  int size() const { return static_cast<int>(omega.size()); }
  double omega_diff(int n, int m) const { return omega(n) - omega(m); }
  double delta_diff(int n, int m) const { return delta(n) - delta(m); }
};

struct FourierMode {
  MultiIndex alpha;
  Complex coeff;
};

/// Real quasi-periodic signal φ(t) = Σ_α φ_α exp(i α·ω t) with finite support.
class QuasiPeriodicField {
 public:
  QuasiPeriodicField() = default;
  /// Merges duplicate multi-indices and checks φ_{-α} = conj(φ_α).
  QuasiPeriodicField(std::vector<double> freq, std::vector<FourierMode> modes);

  int rank() const { return static_cast<int>(freq_.size()); }
  const std::vector<double>& frequencies() const { return freq_; }
  const std::vector<FourierMode>& modes() const { return modes_; }

  double phase(const MultiIndex& alpha) const;
  Complex coefficient(const MultiIndex& alpha) const;
  bool empty() const { return modes_.empty(); }

  /// Largest l1 norm of a multi-index in the support.
  int support_bound() const;
  /// Largest |α·ω| over the support.
  double max_frequency() const;
  double coefficient_l1() const;

  Complex evaluate_complex(double t) const;

 private:
  std::vector<double> freq_;
  std::vector<FourierMode> modes_;
};

/// φ(t) as a real number. Throws NumericalError if the imaginary part exceeds
/// 1e-12 times the coefficient l1 norm.
double field_value(const QuasiPeriodicField& field, double t);

int l1_norm(const MultiIndex& alpha);

/// Exponents and small parameter. Construction enforces ε∈(0,1], μ∈[0,1/2), p>0.
class Scaling {
 public:
  Scaling(double eps, double mu, double p);

  double eps() const { return eps_; }
  double mu() const { return mu_; }
  double p() const { return p_; }
  /// Exponent of the B-part: μ if μ ≤ p, 2p−μ otherwise.
  double nu() const;
  Scaling with_eps(double eps) const { return Scaling(eps, mu_, p_); }

 private:
  double eps_, mu_, p_;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(ComplexMatrix entries);

  const ComplexMatrix& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }
  Complex trace() const { return entries_.trace(); }
  /// max |ρ(n,m) − conj ρ(m,n)|
  double hermiticity_residual() const;
  RealVector diagonal() const;
  /// l1 norm of the off-diagonal part.
  double coherence_l1() const;

 private:
  ComplexMatrix entries_;
};

class Populations {
 public:
  Populations() = default;
  /// Throws InvalidArgument on a negative or non-finite entry.
  explicit Populations(RealVector values);

  const RealVector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double total() const { return values_.sum(); }

 private:
  RealVector values_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  double hermiticity_residual = 0.0;
  double microreversibility_residual = 0.0;
  double gamma_floor = 0.0;

  bool valid() const { return violations.empty(); }
};

double hermiticity_tolerance(const ComplexMatrix& m);

ValidationReport validate_system(const LevelSystem& sys);

DensityMatrix well_prepared_state(const Populations& pop);

}  // namespace blochrate
