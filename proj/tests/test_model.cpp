#include "doctest.h"

#include <numbers>

#include "blochrate/model.hpp"
#include "support.hpp"

using namespace blochrate;

TEST_CASE("validate_system accepts the reference systems") {
  CHECK(validate_system(testsys::s2()).valid());
  const auto rep = validate_system(testsys::s3w());
  CHECK(rep.valid());
  CHECK(rep.microreversibility_residual < 1e-15);
}

TEST_CASE("validate_system reports a vanishing gamma") {
  LevelSystem s = testsys::s2();
  s.gamma.setZero();
  const auto rep = validate_system(s);
  REQUIRE_FALSE(rep.valid());
  CHECK(std::find(rep.violations.begin(), rep.violations.end(), "gamma floor") != rep.violations.end());
}

TEST_CASE("validate_system lists every broken invariant") {
  LevelSystem s = testsys::s3w();
  s.gamma(0, 1) = 2.0;         // asymmetric
  s.V(0, 1) = Complex(0, 1);   // V(2,1) stays 0: not Hermitian
  s.W(0, 1) = 1.0;             // detailed balance broken
  const auto rep = validate_system(s);
  auto has = [&](const char* v) {
    return std::find(rep.violations.begin(), rep.violations.end(), v) != rep.violations.end();
  };
  CHECK(has("gamma symmetry"));
  CHECK(has("V hermiticity"));
  CHECK(has("microreversibility"));
  CHECK(rep.microreversibility_residual > 0.5);
}

TEST_CASE("validate_system is side-effect free") {
  const LevelSystem s = testsys::s3w();
  const auto a = validate_system(s), b = validate_system(s);
  CHECK(a.violations == b.violations);
  CHECK(a.microreversibility_residual == b.microreversibility_residual);
}

TEST_CASE("check_shapes rejects mismatched tables") {
  LevelSystem s = testsys::s2();
  s.W = RealMatrix::Zero(3, 3);
  CHECK_THROWS_AS(s.check_shapes(), InvalidArgument);
}

TEST_CASE("well_prepared_state") {
  RealVector p(2);
  p << 1, 0;
  DensityMatrix rho = well_prepared_state(Populations(p));
  CHECK(rho.entries()(0, 0) == Complex(1.0));
  CHECK(rho.entries()(0, 1) == Complex(0.0));
  CHECK(rho.coherence_l1() == 0.0);
  CHECK(rho.hermiticity_residual() == 0.0);

  p << 0.5, 0.5;
  rho = well_prepared_state(Populations(p));
  CHECK(rho.diagonal()(1) == 0.5);

  p << 1, -0.1;
  CHECK_THROWS_AS(Populations{p}, InvalidArgument);
}

TEST_CASE("field_value on the reference fields") {
  const auto f = testsys::cos_field();
  CHECK(field_value(f, 0.0) == doctest::Approx(2.0));
  CHECK(field_value(f, std::numbers::pi) == doctest::Approx(-2.0));

  const QuasiPeriodicField g({1.0, std::sqrt(2.0)},
                             {{{1, 0}, 0.5}, {{-1, 0}, 0.5}, {{0, 1}, 0.5}, {{0, -1}, 0.5}});
  CHECK(field_value(g, 0.0) == doctest::Approx(2.0));
  CHECK(g.rank() == 2);
  CHECK(g.support_bound() == 1);
}

TEST_CASE("field construction enforces reality and merges modes") {
  CHECK_THROWS_AS(QuasiPeriodicField({1.0}, {{{1}, Complex(1, 1)}, {{-1}, Complex(1, 1)}}), InvalidArgument);
  CHECK_THROWS_AS(QuasiPeriodicField({1.0}, {{{1, 0}, 1.0}}), InvalidArgument);
  const QuasiPeriodicField f({1.0}, {{{1}, 0.5}, {{1}, 0.5}, {{-1}, 1.0}, {{2}, 0.0}, {{-2}, 0.0}});
  CHECK(f.modes().size() == 2);
  CHECK(f.coefficient({1}) == Complex(1.0));
  CHECK(f.coefficient({2}) == Complex(0.0));
}

TEST_CASE("field_value is real for random real fields") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int r = 1 + trial % 2;
    std::vector<double> freq(r);
    for (auto& w : freq) w = uniform(rng, 0.1, 3.0);
    std::vector<FourierMode> modes;
    for (int m = 0; m < 3; ++m) {
      MultiIndex a(r);
      for (auto& x : a) x = static_cast<int>(rng() % 7) - 3;
      if (std::all_of(a.begin(), a.end(), [](int x) { return x == 0; })) {
        modes.push_back({a, uniform(rng, -1.0, 1.0)});
        continue;
      }
      const Complex c(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
      MultiIndex neg = a;
      for (auto& x : neg) x = -x;
      modes.push_back({a, c});
      modes.push_back({neg, std::conj(c)});
    }
    const QuasiPeriodicField f(freq, modes);
    for (int k = 0; k < 100; ++k) {
      const double t = uniform(rng, -50.0, 50.0);
      CHECK_NOTHROW(field_value(f, t));
      CHECK(std::abs(f.evaluate_complex(t).imag()) <= 1e-12 * std::max(1.0, f.coefficient_l1()));
    }
  }
}

TEST_CASE("Scaling ranges and derived exponent") {
  CHECK_THROWS_AS(Scaling(0.0, 0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Scaling(1.5, 0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Scaling(0.1, 0.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Scaling(0.1, -0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(Scaling(0.1, 0.1, 0.0), InvalidArgument);
  CHECK(Scaling(0.1, 0.25, 1.0).nu() == doctest::Approx(0.25));
  CHECK(Scaling(0.1, 0.45, 0.3).nu() == doctest::Approx(0.15));
  CHECK(Scaling(0.1, 0.25, 1.0).with_eps(0.05).eps() == 0.05);
}

TEST_CASE("DensityMatrix diagnostics") {
  ComplexMatrix m(2, 2);
  m << 0.6, Complex(0.1, 0.2), Complex(0.1, -0.25), 0.4;
  const DensityMatrix rho(m);
  CHECK(rho.trace().real() == doctest::Approx(1.0));
  CHECK(rho.hermiticity_residual() == doctest::Approx(0.05));
  CHECK(rho.coherence_l1() == doctest::Approx(std::abs(Complex(0.1, 0.2)) + std::abs(Complex(0.1, -0.25))));
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix::Zero(2, 3)), InvalidArgument);
}
