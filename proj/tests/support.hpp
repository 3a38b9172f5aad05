#pragma once

#include <cmath>
#include <random>

#include "blochrate/model.hpp"
#include "blochrate/random.hpp"

namespace testsys {

using namespace blochrate;

inline LevelSystem blank(std::initializer_list<double> omega) {
  LevelSystem s;
  const int n = static_cast<int>(omega.size());
  s.omega = RealVector::Zero(n);
  int i = 0;
  for (double w : omega) s.omega(i++) = w;
  s.delta = RealVector::Zero(n);
  s.gamma = RealMatrix::Constant(n, n, 1.0);
  s.gamma.diagonal().setZero();
  s.W = RealMatrix::Zero(n, n);
  s.V = ComplexMatrix::Zero(n, n);
  return s;
}

inline void couple(LevelSystem& s, int n, int m, Complex v) {
  s.V(n - 1, m - 1) = v;
  s.V(m - 1, n - 1) = std::conj(v);
}

inline QuasiPeriodicField cos_field(double freq = 1.0, double amp = 1.0) {
  return QuasiPeriodicField({freq}, {{{1}, amp}, {{-1}, amp}});
}

// Two levels ω=(0,1), γ=1, V12=1.
inline LevelSystem s2() {
  LevelSystem s = blank({0.0, 1.0});
  couple(s, 1, 2, 1.0);
  return s;
}

inline LevelSystem s2_delta() {
  LevelSystem s = s2();
  s.delta(1) = 1.0;
  return s;
}

// Three levels with Pauli rates in detailed balance at T=1.
inline LevelSystem s3w() {
  LevelSystem s = blank({0.0, 1.0, 2.0});
  s.temperature = 1.0;
  s.W(1, 0) = 1.0;
  s.W(0, 1) = std::exp(-1.0);
  s.W(2, 1) = 1.0;
  s.W(1, 2) = std::exp(-1.0);
  return s;
}

// Random valid system: Hermitian V, symmetric γ ≥ 0.5, nonnegative W.
inline LevelSystem random_system(std::mt19937_64& rng, int n, bool pauli = false) {
  LevelSystem s;
  s.omega = RealVector::Zero(n);
  for (int i = 0; i < n; ++i) s.omega(i) = uniform(rng, 0.0, 3.0);
  s.delta = RealVector::Zero(n);
  for (int i = 0; i < n; ++i) s.delta(i) = uniform(rng, -1.0, 1.0);
  s.gamma = RealMatrix::Zero(n, n);
  s.W = RealMatrix::Zero(n, n);
  s.V = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      s.gamma(i, j) = s.gamma(j, i) = uniform(rng, 0.5, 2.0);
      const Complex v(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
      s.V(i, j) = v;
      s.V(j, i) = std::conj(v);
      if (pauli) {
        const double base = uniform(rng, 0.0, 0.5);
        s.W(j, i) = base;
        s.W(i, j) = base * std::exp((s.omega(i) - s.omega(j)));
      } else {
        s.W(i, j) = uniform(rng, 0.0, 0.5);
        s.W(j, i) = uniform(rng, 0.0, 0.5);
      }
    }
  if (pauli) s.temperature = 1.0;
  return s;
}

// Probability vector with random weights.
inline RealVector random_populations(std::mt19937_64& rng, int n) {
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(rng, 0.0, 1.0);
  return v / v.sum();
}

inline RealMatrix random_rates(std::mt19937_64& rng, int n, bool symmetric, double density = 1.0) {
  RealMatrix a = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || (symmetric && j < i)) continue;
      const double x = uniform01(rng) < density ? uniform(rng, 0.0, 2.0) : 0.0;
      a(i, j) = x;
      if (symmetric) a(j, i) = x;
    }
  return a;
}

}  // namespace testsys
