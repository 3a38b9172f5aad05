#pragma once

#include "blochrate/model.hpp"

namespace blochrate::linalg {

/// Orthonormal basis of the numerical null space of m (columns). Singular
/// values at or below rel_tol·σ_max count as zero; a zero matrix has full kernel.
RealMatrix kernel_basis(const RealMatrix& m, double rel_tol = 1e-10);

/// Singular values (descending).
RealVector singular_values(const RealMatrix& m);

/// True when some singular value sits within a factor `margin` of the
/// rank threshold rel_tol·σ_max, i.e. the rank decision is fragile.
bool rank_is_fragile(const RealMatrix& m, double rel_tol = 1e-10, double margin = 100.0);

/// exp(m) by scaling and squaring with a Padé approximant.
RealMatrix expm(const RealMatrix& m);

/// exp(s) for symmetric s via eigendecomposition.
RealMatrix expm_symmetric(const RealMatrix& s);

/// Orthogonal projector onto the column span of an orthonormal basis.
RealMatrix projector(const RealMatrix& basis, Eigen::Index n);

}  // namespace blochrate::linalg
