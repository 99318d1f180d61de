#pragma once

// Closed-form eigenvalues of small symmetric matrices. These sit in the
// per-element hot loops, so no iterative solvers here.

#include "stepbound/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace stepbound {

/// Eigenvalues of a symmetric matrix, ascending.
template <int Dim>
std::array<double, Dim> sym_eigenvalues(const Mat<Dim>& m) {
  static_assert(Dim >= 1 && Dim <= 3);
  if constexpr (Dim == 1) {
    return {m(0, 0)};
  } else if constexpr (Dim == 2) {
    const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
    const double mean = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    // lambda_min via the product keeps relative accuracy for nearly singular
    // SPD matrices
    const double hi = mean + rad;
    const double det = a * c - b * b;
    double lo = mean - rad;
    if (mean > 0.0 && hi > 0.0 && det > 0.0) lo = det / hi;
    return {lo, hi};
  } else {
    // Trigonometric solution of the characteristic cubic.
    const double a00 = m(0, 0), a11 = m(1, 1), a22 = m(2, 2);
    const double a01 = 0.5 * (m(0, 1) + m(1, 0));
    const double a02 = 0.5 * (m(0, 2) + m(2, 0));
    const double a12 = 0.5 * (m(1, 2) + m(2, 1));
    const double p1 = a01 * a01 + a02 * a02 + a12 * a12;
    const double q = (a00 + a11 + a22) / 3.0;
    if (p1 <= 1e-300) {
      std::array<double, 3> ev{a00, a11, a22};
      std::sort(ev.begin(), ev.end());
      return ev;
    }
    const double p2 = (a00 - q) * (a00 - q) + (a11 - q) * (a11 - q) +
                      (a22 - q) * (a22 - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Mat<3> b;
    b << a00 - q, a01, a02, a01, a11 - q, a12, a02, a12, a22 - q;
    b /= p;
    const double r = std::clamp(0.5 * b.determinant(), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e_hi = q + 2.0 * p * std::cos(phi);
    const double e_lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e_mid = 3.0 * q - e_hi - e_lo;
    std::array<double, 3> ev{e_lo, e_mid, e_hi};
    std::sort(ev.begin(), ev.end());
    return ev;
  }
}

template <int Dim>
double lambda_min(const Mat<Dim>& m) {
  return sym_eigenvalues<Dim>(m).front();
}

template <int Dim>
double lambda_max(const Mat<Dim>& m) {
  return sym_eigenvalues<Dim>(m).back();
}

/// Spectral norm of a general square matrix: sqrt(lambda_max(m^T m)).
template <int Dim>
double spectral_norm(const Mat<Dim>& m) {
  const Mat<Dim> g = m.transpose() * m;
  return std::sqrt(std::max(0.0, lambda_max<Dim>(g)));
}

/// Eigenvector of the largest eigenvalue of a symmetric 2x2 matrix.
inline Vec<2> principal_direction(const Mat<2>& m) {
  const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
  const double angle = 0.5 * std::atan2(2.0 * b, a - c);
  return Vec<2>(std::cos(angle), std::sin(angle));
}

}  // namespace stepbound
