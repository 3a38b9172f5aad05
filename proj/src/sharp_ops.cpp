#include "blochrate/sharp_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "blochrate/linalg.hpp"
#include "blochrate/random.hpp"

namespace blochrate {

namespace {

double pattern_threshold(const RealMatrix& a) {
  return a.size() ? 1e-14 * a.cwiseAbs().maxCoeff() : 0.0;
}

bool nonzero(double x, double thr) { return std::abs(x) > thr || (thr == 0.0 && x != 0.0); }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

RealMatrix restrict_to(const RealMatrix& m, const Block& block) {
  const int k = static_cast<int>(block.size());
  RealMatrix out(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out(i, j) = m(block[i], block[j]);
  return out;
}

}  // namespace

RateMatrix::RateMatrix(RealMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw InvalidArgument("rate matrix must be square");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (entries_(i, i) != 0.0) throw InvalidArgument("rate matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < entries_.cols(); ++j)
      if (!std::isfinite(entries_(i, j)) || entries_(i, j) < 0.0)
        throw InvalidArgument("rate matrix has a negative or non-finite off-diagonal entry");
  }
}

bool RateMatrix::has_property_p() const {
  const double thr = pattern_threshold(entries_);
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      if (nonzero(entries_(i, j), thr) != nonzero(entries_(j, i), thr)) return false;
  return true;
}

bool RateMatrix::is_symmetric(double rel_tol) const {
  const double scale = entries_.size() ? entries_.cwiseAbs().maxCoeff() : 0.0;
  return (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

RateMatrix RateMatrix::operator+(const RateMatrix& other) const {
  if (other.size() != size()) throw InvalidArgument("rate matrix size mismatch");
  return RateMatrix(entries_ + other.entries_);
}

RateMatrix RateMatrix::scaled(double s) const {
  if (!(s >= 0.0)) throw InvalidArgument("rate matrix scale must be nonnegative");
  return RateMatrix(entries_ * s);
}

SharpOperator sharpen(const RateMatrix& a) {
  const int n = a.size();
  RealMatrix m = a.entries().transpose();
  for (int i = 0; i < n; ++i) m(i, i) = -a.entries().row(i).sum();
  return {std::move(m)};
}

RealVector apply_sharp(const SharpOperator& op, const RealVector& v) {
  if (v.size() != op.size()) throw InvalidArgument("apply_sharp: dimension mismatch");
  return op.matrix * v;
}

double mixed_norm(const RealMatrix& a) {
  if (a.size() == 0) return 0.0;
  const RealMatrix abs = a.cwiseAbs();
  return abs.colwise().sum().maxCoeff() + abs.rowwise().sum().maxCoeff();
}

double mixed_norm(const ComplexMatrix& a) { return mixed_norm(RealMatrix(a.cwiseAbs())); }

ComplexMatrix schur_apply(const ComplexMatrix& a, const ComplexMatrix& u) {
  if (a.rows() != a.cols() || u.rows() != a.rows() || u.cols() != a.cols())
    throw InvalidArgument("schur_apply: dimension mismatch");
  return a * u - u * a;
}

Partition stable_blocks(const RateMatrix& a) {
  if (!a.has_property_p()) throw InvalidArgument("rate matrix violates property (P)");
  const int n = a.size();
  const double thr = pattern_threshold(a.entries());
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (nonzero(a(i, j), thr)) uf.unite(i, j);
  Partition blocks;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = uf.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[root]].push_back(i);
  }
  return blocks;
}

Populations equilibrium_state(const RateMatrix& a, const Populations& rho0) {
  if (rho0.size() != a.size()) throw InvalidArgument("equilibrium_state: dimension mismatch");
  const RealMatrix m = sharpen(a).matrix;
  RealVector out = rho0.values();
  for (const Block& block : stable_blocks(a)) {
    if (block.size() < 2) continue;
    const RealMatrix ker = linalg::kernel_basis(restrict_to(m, block));
    if (ker.cols() != 1)
      throw NumericalError("stable block has kernel dimension " + std::to_string(ker.cols()));
    RealVector v = ker.col(0);
    if (v.sum() < 0.0) v = -v;
    double mass = 0.0;
    for (int idx : block) mass += rho0.values()(idx);
    const double total = v.sum();
    for (std::size_t i = 0; i < block.size(); ++i)
      out(block[i]) = std::max(0.0, v(static_cast<Eigen::Index>(i))) * mass / total;
  }
  return Populations(std::move(out));
}

Populations thermodynamic_equilibrium(const RealVector& omega, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (omega.size() == 0) throw InvalidArgument("empty energy list");
  const double lowest = omega.minCoeff();
  RealVector w = (-(omega.array() - lowest) / temperature).exp().matrix();
  return Populations(w / w.sum());
}

SpectralReport spectral_check(const SharpOperator& op, bool symmetric, std::uint64_t seed) {
  SpectralReport rep;
  const int n = op.size();
  if (n == 0) return rep;
  rep.eigenvalues = Eigen::EigenSolver<RealMatrix>(op.matrix, false).eigenvalues();
  rep.max_real_eigenvalue = rep.eigenvalues.real().maxCoeff();

  // Off-diagonal pattern of M is the transpose pattern of A.
  RealMatrix coeffs = op.matrix.transpose();
  coeffs.diagonal().setZero();
  coeffs = coeffs.cwiseMax(0.0);
  const RateMatrix a(coeffs);
  if (a.has_property_p()) {
    rep.blocks = stable_blocks(a);
    for (const Block& block : rep.blocks)
      rep.kernel_dims.push_back(
          static_cast<int>(linalg::kernel_basis(restrict_to(op.matrix, block)).cols()));
  }

  if (symmetric) {
    rep.rayleigh_checked = true;
    rep.max_rayleigh = -std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 200; ++trial) {
      RealVector x(n);
      for (int i = 0; i < n; ++i) x(i) = uniform(rng, -1.0, 1.0);
      const double norm2 = x.squaredNorm();
      if (norm2 == 0.0) continue;
      rep.max_rayleigh = std::max(rep.max_rayleigh, x.dot(op.matrix * x) / norm2);
    }
  }
  return rep;
}

RealVector evolve_sharp(const SharpOperator& op, const RealVector& v, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("evolve_sharp: time must be nonnegative");
  if (v.size() != op.size()) throw InvalidArgument("evolve_sharp: dimension mismatch");
  if (t == 0.0) return v;
  const RealMatrix tm = t * op.matrix;
  if (op.matrix == op.matrix.transpose())
    return linalg::expm_symmetric(tm) * v;
  return linalg::expm(tm) * v;
}

std::vector<double> kernel_degeneration(const std::function<RateMatrix(int)>& family,
                                        const std::vector<int>& sizes) {
  std::vector<double> out;
  for (int n : sizes) {
    const RealVector s = linalg::singular_values(sharpen(family(n)).matrix);
    double smallest = 0.0;
    const double thr = s.size() ? 1e-10 * s(0) : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > thr) smallest = s(i);
    out.push_back(smallest);
  }
  return out;
}

}  // namespace blochrate
