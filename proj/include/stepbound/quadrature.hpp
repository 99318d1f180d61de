#pragma once

#include "stepbound/core.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace stepbound {

/// Quadrature rule on a simplex: points in barycentric coordinates, weights
/// summing to one (so the rule computes averages).
template <int Dim>
struct SimplexRule {
  std::vector<std::array<double, Dim + 1>> points;
  std::vector<double> weights;
};

namespace detail {

inline std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
  // nodes/weights on [0,1]
  switch (n) {
    case 1:
      return {{0.5, 1.0}};
    case 2: {
      const double a = 0.5 / std::sqrt(3.0);
      return {{0.5 - a, 0.5}, {0.5 + a, 0.5}};
    }
    case 3: {
      const double a = 0.5 * std::sqrt(0.6);
      return {{0.5 - a, 5.0 / 18}, {0.5, 8.0 / 18}, {0.5 + a, 5.0 / 18}};
    }
    default:
      break;
  }
  // Newton on Legendre polynomials for larger n
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    out.emplace_back(0.5 * (1 - x), 1.0 / ((1 - x * x) * dp * dp));
  }
  return out;
}

}  // namespace detail

/// Collapsed-coordinate Gauss product rule on the triangle with n^2 points;
/// exact for polynomials of degree 2n-2. Used as a high-order oracle.
inline SimplexRule<2> collapsed_rule_2d(int n) {
  SimplexRule<2> r;
  const auto g = detail::gauss_legendre_01(n);
  for (auto [u, wu] : g) {
    for (auto [v, wv] : g) {
      const double l1 = u, l2 = (1 - u) * v;
      r.points.push_back({1 - l1 - l2, l1, l2});
      r.weights.push_back(2.0 * wu * wv * (1 - u));
    }
  }
  return r;
}

/// Collapsed-coordinate rule on the tetrahedron with n^3 points.
inline SimplexRule<3> collapsed_rule_3d(int n) {
  SimplexRule<3> r;
  const auto g = detail::gauss_legendre_01(n);
  for (auto [u, wu] : g) {
    for (auto [v, wv] : g) {
      for (auto [t, wt] : g) {
        const double l1 = u, l2 = (1 - u) * v, l3 = (1 - u) * (1 - v) * t;
        r.points.push_back({1 - l1 - l2 - l3, l1, l2, l3});
        r.weights.push_back(6.0 * wu * wv * wt * (1 - u) * (1 - u) * (1 - v));
      }
    }
  }
  return r;
}

/// Fixed rules of degree 1, 2 or 4 (1D: 1-, 2-, 3-point Gauss; 2D: centroid,
/// 3-point, 6-point symmetric; 3D: centroid, 4-point, 27-point collapsed
/// Gauss product).
template <int Dim>
const SimplexRule<Dim>& simplex_rule(int order) {
  static const std::array<SimplexRule<Dim>, 3> rules = [] {
    std::array<SimplexRule<Dim>, 3> r;
    // order 1
    std::array<double, Dim + 1> c;
    c.fill(1.0 / (Dim + 1));
    r[0].points.push_back(c);
    r[0].weights.push_back(1.0);
    if constexpr (Dim == 1) {
      for (int n : {2, 3}) {
        auto& rule = r[n - 1];
        for (auto [x, w] : detail::gauss_legendre_01(n)) {
          rule.points.push_back({1 - x, x});
          rule.weights.push_back(w);
        }
      }
    } else if constexpr (Dim == 2) {
      for (int k = 0; k < 3; ++k) {
        std::array<double, 3> p{1.0 / 6, 1.0 / 6, 1.0 / 6};
        p[static_cast<std::size_t>(k)] = 2.0 / 3;
        r[1].points.push_back(p);
        r[1].weights.push_back(1.0 / 3);
      }
      const double a1 = 0.44594849091596488632, b1 = 1 - 2 * a1, w1 = 0.22338158967801146570;
      const double a2 = 0.09157621350977074346, b2 = 1 - 2 * a2, w2 = 0.10995174365532186764;
      for (auto [a, b, w] : {std::array{a1, b1, w1}, std::array{a2, b2, w2}}) {
        r[2].points.push_back({b, a, a});
        r[2].points.push_back({a, b, a});
        r[2].points.push_back({a, a, b});
        for (int k = 0; k < 3; ++k) r[2].weights.push_back(w);
      }
    } else {
      const double a = 0.5854101966249685, b = 0.1381966011250105;
      for (int k = 0; k < 4; ++k) {
        std::array<double, 4> p{b, b, b, b};
        p[static_cast<std::size_t>(k)] = a;
        r[1].points.push_back(p);
        r[1].weights.push_back(0.25);
      }
      r[2] = collapsed_rule_3d(3);
    }
    return r;
  }();
  switch (order) {
    case 1:
      return rules[0];
    case 2:
      return rules[1];
    case 4:
      return rules[2];
    default:
      throw UnsupportedError("quadrature order must be 1, 2 or 4, got " + std::to_string(order));
  }
}

/// Adaptive Gauss–Kronrod (7/15) integration of f over [a, b] to the given
/// absolute tolerance.
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double abs_tol, int max_depth = 50) {
  static constexpr std::array<double, 8> xk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                            0.207784955007898467600689403773245, 0.000000000000000};
  static constexpr std::array<double, 8> wk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  std::function<double(double, double, double, int)> rec = [&](double lo, double hi, double tol,
                                                               int depth) -> double {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double fc = f(c);
    double kron = wk[7] * fc, gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
      const double s = f(c - h * xk[j]) + f(c + h * xk[j]);
      kron += wk[j] * s;
      if (j % 2 == 1) gauss += wg[j / 2] * s;
    }
    kron *= h;
    gauss *= h;
    if (std::abs(kron - gauss) <= tol || depth >= max_depth) return kron;
    return rec(lo, c, 0.5 * tol, depth + 1) + rec(c, hi, 0.5 * tol, depth + 1);
  };
  return rec(a, b, abs_tol, 0);
}

}  // namespace stepbound
