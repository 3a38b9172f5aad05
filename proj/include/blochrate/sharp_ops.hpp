#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "blochrate/model.hpp"

namespace blochrate {

/// Nonnegative coefficient table with zero diagonal.
class RateMatrix {
 public:
  RateMatrix() = default;
  /// Throws InvalidArgument on non-square input, a negative or non-finite
  /// off-diagonal entry, or a nonzero diagonal entry.
  explicit RateMatrix(RealMatrix entries);
  static RateMatrix zero(int n) { return RateMatrix(RealMatrix::Zero(n, n)); }

  const RealMatrix& entries() const { return entries_; }
  double operator()(int n, int m) const { return entries_(n, m); }
  int size() const { return static_cast<int>(entries_.rows()); }

  /// entries(n,m)=0 ⇔ entries(m,n)=0, with |x| < 1e-14·max treated as zero.
  bool has_property_p() const;
  bool is_symmetric(double rel_tol = 1e-12) const;
  bool is_zero() const { return entries_.isZero(0.0); }

  RateMatrix operator+(const RateMatrix& other) const;
  RateMatrix scaled(double s) const;

 private:
  RealMatrix entries_;
};

/// Generator M with M(n,k)=A(k,n) for n≠k and M(n,n)=−Σ_{m≠n} A(n,m).
struct SharpOperator {
  RealMatrix matrix;
  int size() const { return static_cast<int>(matrix.rows()); }
};

using Block = std::vector<int>;
using Partition = std::vector<Block>;

SharpOperator sharpen(const RateMatrix& a);
RealVector apply_sharp(const SharpOperator& op, const RealVector& v);

double mixed_norm(const RealMatrix& a);
double mixed_norm(const ComplexMatrix& a);
inline double mixed_norm(const RateMatrix& a) { return mixed_norm(a.entries()); }

/// (n,m) ↦ Σ_k A(n,k)u(k,m) − A(k,m)u(n,k).
ComplexMatrix schur_apply(const ComplexMatrix& a, const ComplexMatrix& u);

/// Connected components of the nonzero pattern, sorted by smallest member.
/// Throws InvalidArgument if property (P) fails.
Partition stable_blocks(const RateMatrix& a);

/// Element of Ker A_♯ matching rho0's mass on every stable block.
/// Throws NumericalError if a block of size ≥ 2 has kernel dimension ≠ 1.
Populations equilibrium_state(const RateMatrix& a, const Populations& rho0);

Populations thermodynamic_equilibrium(const RealVector& omega, double temperature);

struct SpectralReport {
  Eigen::VectorXcd eigenvalues;
  double max_real_eigenvalue = 0.0;
  std::vector<int> kernel_dims;  // one per stable block
  Partition blocks;
  bool rayleigh_checked = false;
  double max_rayleigh = 0.0;  // over random unit vectors, symmetric case only
};

SpectralReport spectral_check(const SharpOperator& op, bool symmetric, std::uint64_t seed = 0);

/// exp(t·M)v. Throws InvalidArgument for t < 0.
RealVector evolve_sharp(const SharpOperator& op, const RealVector& v, double t);

/// Smallest nonzero singular value of A_♯ for each requested truncation size.
std::vector<double> kernel_degeneration(const std::function<RateMatrix(int)>& family,
                                        const std::vector<int>& sizes);

}  // namespace blochrate
