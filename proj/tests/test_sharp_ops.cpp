#include "doctest.h"

#include "blochrate/sharp_ops.hpp"
#include "support.hpp"

using namespace blochrate;

namespace {

RateMatrix table(std::initializer_list<std::initializer_list<double>> rows) {
  const int n = static_cast<int>(rows.size());
  RealMatrix m(n, n);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return RateMatrix(m);
}

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("RateMatrix rejects invalid tables") {
  CHECK_THROWS_AS(table({{0, -1}, {1, 0}}), InvalidArgument);
  CHECK_THROWS_AS(table({{1, 1}, {1, 0}}), InvalidArgument);
  CHECK_THROWS_AS(RateMatrix(RealMatrix::Zero(2, 3)), InvalidArgument);
}

TEST_CASE("sharpen on hand examples") {
  const double a = 0.7;
  RealMatrix expect(2, 2);
  expect << -a, a, a, -a;
  CHECK(sharpen(table({{0, a}, {a, 0}})).matrix.isApprox(expect));
  CHECK(sharpen(RateMatrix::zero(3)).matrix.isZero(0.0));

  RealMatrix e3(3, 3);
  e3 << -1, 2, 0, 1, -2, 0, 0, 0, 0;
  CHECK(sharpen(table({{0, 1, 0}, {2, 0, 0}, {0, 0, 0}})).matrix == e3);
}

TEST_CASE("apply_sharp") {
  const auto op = sharpen(table({{0, 1}, {1, 0}}));
  CHECK(apply_sharp(op, vec({1, 1})).isZero(0.0));
  CHECK(apply_sharp(op, vec({1, 0})) == vec({-1, 1}));
  CHECK(apply_sharp(sharpen(RateMatrix::zero(2)), vec({3, 4})).isZero(0.0));
  CHECK_THROWS_AS(apply_sharp(op, vec({1, 2, 3})), InvalidArgument);
}

TEST_CASE("columns of the generator sum to zero") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto op = sharpen(RateMatrix(testsys::random_rates(rng, n, false, 0.6)));
    RealVector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(rng, -1.0, 1.0);
    CHECK(std::abs(apply_sharp(op, v).sum()) <= 1e-12 * std::max(1.0, v.norm() * op.matrix.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("symmetric generators are nonpositive") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto op = sharpen(RateMatrix(testsys::random_rates(rng, n, true)));
    RealVector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(rng, -1.0, 1.0);
    CHECK(v.dot(apply_sharp(op, v)) <= 1e-12);
  }
}

TEST_CASE("mixed_norm") {
  CHECK(mixed_norm(table({{0, 1}, {1, 0}})) == 2.0);
  CHECK(mixed_norm(RateMatrix::zero(2)) == 0.0);
  CHECK(mixed_norm(table({{0, 2, 0}, {0, 0, 0}, {0, 0, 0}})) == 4.0);
}

TEST_CASE("schur_apply") {
  ComplexMatrix a(2, 2);
  a << 0, 1, 1, 0;
  CHECK(schur_apply(a, ComplexMatrix::Identity(2, 2)).isZero(0.0));
  CHECK(schur_apply(ComplexMatrix::Zero(2, 2), ComplexMatrix::Random(2, 2)).isZero(0.0));

  ComplexMatrix b = ComplexMatrix::Zero(2, 2), u = ComplexMatrix::Zero(2, 2);
  b(0, 1) = 1.0;
  u(0, 1) = 1.0;
  ComplexMatrix brute = ComplexMatrix::Zero(2, 2);
  for (int n = 0; n < 2; ++n)
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < 2; ++k) brute(n, m) += b(n, k) * u(k, m) - b(k, m) * u(n, k);
  CHECK(schur_apply(b, u).isApprox(brute));
  CHECK_THROWS_AS(schur_apply(b, ComplexMatrix::Zero(3, 3)), InvalidArgument);
}

TEST_CASE("schur_apply is bounded by the mixed norm on l1 and l-infinity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const RealMatrix a = testsys::random_rates(rng, n, false);
    ComplexMatrix u(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u(i, j) = Complex(uniform(rng, -1, 1), uniform(rng, -1, 1));
    const ComplexMatrix out = schur_apply(a.cast<Complex>(), u);
    // Entrywise l1 and sup norms of the matrix viewed as a sequence.
    CHECK(out.cwiseAbs().sum() <= mixed_norm(a) * u.cwiseAbs().sum() * (1 + 1e-12));
    CHECK(out.cwiseAbs().maxCoeff() <= mixed_norm(a) * u.cwiseAbs().maxCoeff() * (1 + 1e-12));
  }
}

TEST_CASE("stable_blocks") {
  CHECK(stable_blocks(table({{0, 1}, {1, 0}})) == Partition{{0, 1}});
  CHECK(stable_blocks(RateMatrix::zero(3)) == Partition{{0}, {1}, {2}});
  RealMatrix m = RealMatrix::Zero(4, 4);
  m(0, 1) = m(1, 0) = 1.0;
  m(2, 3) = 2.0;
  m(3, 2) = 0.5;
  CHECK(stable_blocks(RateMatrix(m)) == Partition{{0, 1}, {2, 3}});
  m(2, 3) = 0.0;
  CHECK_THROWS_AS(stable_blocks(RateMatrix(m)), InvalidArgument);
}

TEST_CASE("equilibrium_state") {
  const auto eq = equilibrium_state(table({{0, 1}, {1, 0}}), Populations(vec({1, 0})));
  CHECK(eq.values()(0) == doctest::Approx(0.5));
  CHECK(eq.values()(1) == doctest::Approx(0.5));

  const LevelSystem s = testsys::s3w();
  const auto gibbs = equilibrium_state(RateMatrix(s.W), Populations(vec({0.2, 0.3, 0.5})));
  const auto ref = thermodynamic_equilibrium(s.omega, 1.0);
  CHECK((gibbs.values() - ref.values()).cwiseAbs().maxCoeff() <= 1e-12);

  const auto frozen = equilibrium_state(RateMatrix::zero(2), Populations(vec({0.3, 0.7})));
  CHECK(frozen.values() == vec({0.3, 0.7}));
}

TEST_CASE("equilibrium_state on random symmetric and Pauli blocks") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const bool pauli = trial % 2;
    RateMatrix a;
    if (pauli) {
      a = RateMatrix(testsys::random_system(rng, n, true).W);
    } else {
      a = RateMatrix(testsys::random_rates(rng, n, true, 0.5));
    }
    const RealVector rho0 = testsys::random_populations(rng, n);
    const auto eq = equilibrium_state(a, Populations(rho0));
    CHECK(apply_sharp(sharpen(a), eq.values()).norm() <= 1e-10);
    for (const Block& b : stable_blocks(a)) {
      double m0 = 0.0, m1 = 0.0;
      for (int i : b) {
        m0 += rho0(i);
        m1 += eq.values()(i);
      }
      CHECK(std::abs(m0 - m1) <= 1e-12);
    }
  }
}

TEST_CASE("thermodynamic_equilibrium") {
  CHECK(thermodynamic_equilibrium(vec({0, 0}), 1.0).values()(0) == doctest::Approx(0.5));
  const auto p = thermodynamic_equilibrium(vec({0, 1}), 1.0).values();
  CHECK(p(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(p(1) == doctest::Approx(0.2689414213699951));
  CHECK(thermodynamic_equilibrium(vec({0, 1}), 1e6).values()(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(thermodynamic_equilibrium(vec({0, 1}), 0.0), InvalidArgument);
}

TEST_CASE("Pauli rates annihilate the Gibbs vector") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const LevelSystem s = testsys::random_system(rng, 2 + trial % 6, true);
    REQUIRE(validate_system(s).valid());
    const RealVector g = thermodynamic_equilibrium(s.omega, 1.0).values();
    CHECK(apply_sharp(sharpen(RateMatrix(s.W)), g).norm() <= 1e-12);
  }
}

TEST_CASE("spectral_check") {
  const auto rep = spectral_check(sharpen(table({{0, 1}, {1, 0}})), true, 1);
  std::vector<double> ev = {rep.eigenvalues(0).real(), rep.eigenvalues(1).real()};
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-2.0));
  CHECK(ev[1] == doctest::Approx(0.0));
  CHECK(rep.kernel_dims == std::vector<int>{1});
  CHECK(rep.rayleigh_checked);
  CHECK(rep.max_rayleigh <= 1e-10);

  const auto zero = spectral_check(sharpen(RateMatrix::zero(3)), true);
  CHECK(zero.eigenvalues.cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(31);
  const auto rnd = spectral_check(sharpen(RateMatrix(testsys::random_rates(rng, 6, true))), true, 2);
  CHECK(rnd.max_real_eigenvalue <= 1e-10);
}

TEST_CASE("evolve_sharp") {
  const auto op = sharpen(table({{0, 1}, {1, 0}}));
  const RealVector v = vec({1, 0});
  for (double t : {0.1, 1.0, 50.0}) {
    const RealVector y = evolve_sharp(op, v, t);
    CHECK(y(0) == doctest::Approx((1 + std::exp(-2 * t)) / 2));
    CHECK(y(1) == doctest::Approx((1 - std::exp(-2 * t)) / 2));
  }
  CHECK(evolve_sharp(op, v, 0.0) == v);
  CHECK(evolve_sharp(sharpen(RateMatrix::zero(2)), v, 7.0) == v);
  CHECK_THROWS_AS(evolve_sharp(op, v, -1.0), InvalidArgument);
}

TEST_CASE("evolve_sharp semigroup, mass and contraction") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const bool sym = trial % 2 == 0;
    const auto op = sharpen(RateMatrix(testsys::random_rates(rng, n, sym)));
    const RealVector v = testsys::random_populations(rng, n);
    const double s = uniform(rng, 0.0, 2.0), t = uniform(rng, 0.0, 2.0);
    const RealVector whole = evolve_sharp(op, v, s + t);
    CHECK((whole - evolve_sharp(op, evolve_sharp(op, v, s), t)).norm() <= 1e-9);
    CHECK(std::abs(whole.sum() - v.sum()) <= 1e-10);
    if (sym) CHECK(whole.norm() <= v.norm() * (1 + 1e-12));
  }
}

TEST_CASE("kernel_degeneration shrinks along a chain") {
  auto chain = [](int n) {
    RealMatrix a = RealMatrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
    return RateMatrix(a);
  };
  const auto gaps = kernel_degeneration(chain, {4, 8, 16, 32});
  REQUIRE(gaps.size() == 4);
  for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] < gaps[i - 1]);
}
