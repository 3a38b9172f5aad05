#include "blochrate/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace blochrate::linalg {

RealVector singular_values(const RealMatrix& m) {
  if (m.size() == 0) return RealVector();
  return Eigen::BDCSVD<RealMatrix>(m).singularValues();
}

RealMatrix kernel_basis(const RealMatrix& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (n == 0) return RealMatrix(0, 0);
  if (m.rows() == 0) return RealMatrix::Identity(n, n);
  Eigen::BDCSVD<RealMatrix> svd(m, Eigen::ComputeFullV);
  const RealVector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (smax == 0.0) return RealMatrix::Identity(n, n);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * smax) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

bool rank_is_fragile(const RealMatrix& m, double rel_tol, double margin) {
  const RealVector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return false;
  const double thr = rel_tol * s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thr / margin && s(i) < thr * margin) return true;
  return false;
}

RealMatrix expm(const RealMatrix& m) { return m.exp(); }

RealMatrix expm_symmetric(const RealMatrix& s) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(s);
  const RealMatrix& q = es.eigenvectors();
  return q * es.eigenvalues().array().exp().matrix().asDiagonal() * q.transpose();
}

RealMatrix projector(const RealMatrix& basis, Eigen::Index n) {
  if (basis.cols() == 0) return RealMatrix::Zero(n, n);
  return basis * basis.transpose();
}

}  // namespace blochrate::linalg
