#pragma once

// Mesh generators for d = 1 and d = 2.

#include "stepbound/core.hpp"
#include "stepbound/linalg.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/quadrature.hpp"
#include "stepbound/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stepbound {

namespace detail {

inline SimplicialMesh<1> mesh_from_points_1d(const std::vector<double>& x, MeshPolicy policy = {}) {
  const std::size_t n = x.size() - 1;
  std::vector<Vec<1>> nodes(x.size());
  std::vector<NodeMarker> markers(x.size(), NodeMarker::Interior);
  for (std::size_t i = 0; i < x.size(); ++i) nodes[i](0) = x[i];
  markers.front() = markers.back() = NodeMarker::Dirichlet;
  std::vector<std::array<index_t, 2>> elems(n);
  for (std::size_t k = 0; k < n; ++k) elems[k] = {static_cast<index_t>(k), static_cast<index_t>(k + 1)};
  return SimplicialMesh<1>(std::move(nodes), std::move(elems), std::move(markers), {}, policy);
}

}  // namespace detail

/// n equal elements on (0,1), Dirichlet at both ends.
inline SimplicialMesh<1> gen_uniform_1d(index_t n, MeshPolicy policy = {}) {
  if (n < 1) throw ValidationError("element count must be at least 1");
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (index_t i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(n);
  return detail::mesh_from_points_1d(x, policy);
}

/// Nodes 0 = x_0 < ... < x_n = 1 with equal integrals of w over every element.
inline SimplicialMesh<1> gen_equidistributed_1d(index_t n, const std::function<double(double)>& w) {
  if (n < 2) throw ValidationError("element count must be at least 2");
  auto weight = [&w](double x) {
    const double v = w(x);
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError("weight must be positive, got " + std::to_string(v) + " at x=" + std::to_string(x));
    return v;
  };
  double rough = 0;
  for (int i = 0; i < 64; ++i) rough += weight((i + 0.5) / 64.0) / 64.0;
  const double tol = 1e-14 * rough;
  const double total = integrate_adaptive(weight, 0.0, 1.0, tol);

  std::vector<double> x(static_cast<std::size_t>(n) + 1, 0.0);
  double cum = 0;
  for (index_t i = 1; i < n; ++i) {
    const double a = x[static_cast<std::size_t>(i) - 1];
    const double target = static_cast<double>(i) * total / static_cast<double>(n) - cum;
    auto g = [&](double t) { return integrate_adaptive(weight, a, t, tol) - target; };
    double lo = a, hi = 1.0;
    double t = std::min(hi, a + target / weight(a));
    double gt = g(t);
    int it = 0;
    for (; it < 200; ++it) {
      if (std::abs(gt) <= 1e-15 * total) break;
      (gt < 0 ? lo : hi) = t;
      if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;
      double next = t - gt / weight(t);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
      gt = g(t);
    }
    if (it == 200)
      throw NumericalError("equidistribution did not converge at node " + std::to_string(i) +
                           ", residual " + std::to_string(gt));
    x[static_cast<std::size_t>(i)] = t;
    cum += target + gt;
  }
  x.back() = 1.0;
  return detail::mesh_from_points_1d(x);
}

/// Mesh on (0,1) whose discrete metric volumes |K| * sqrt(M_K) are all equal,
/// with M_K the element average of `metric` under the given rule. Built by
/// shooting on the common metric length.
inline SimplicialMesh<1> gen_metric_uniform_1d(index_t n, const TensorField<1>& metric, int quad_order = 4) {
  if (n < 2) throw ValidationError("element count must be at least 2");
  auto avg = [&](double a, double b) {
    std::array<Vec<1>, 2> v;
    v[0](0) = a;
    v[1](0) = b;
    const double m = metric.average(v, quad_order)(0, 0);
    if (!(m > 0.0) || !std::isfinite(m)) throw ValidationError("metric must be positive");
    return m;
  };
  auto length = [&](double a, double b) { return (b - a) * std::sqrt(avg(a, b)); };

  // Element end point with metric length c, or nullopt if (a,1] is too short.
  auto advance = [&](double a, double c) -> std::optional<double> {
    if (length(a, 1.0) < c) return std::nullopt;
    double lo = a, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 2 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (length(a, mid) < c ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto march = [&](double c, std::vector<double>* out) -> bool {
    double a = 0;
    if (out) out->assign(1, 0.0);
    for (index_t i = 1; i < n; ++i) {
      auto b = advance(a, c);
      if (!b) return true;
      a = *b;
      if (out) out->push_back(a);
    }
    return length(a, 1.0) <= c;
  };

  double lo = 0, hi = length(0.0, 1.0);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    // true when mid is at least the common length
    (march(mid, nullptr) ? hi : lo) = mid;
  }
  std::vector<double> x;
  march(lo, &x);
  if (static_cast<index_t>(x.size()) != n) throw NumericalError("metric-uniform shooting failed");
  x.push_back(1.0);
  return detail::mesh_from_points_1d(x);
}

enum class Diagonal { Right, Left, Alternating };

inline Diagonal parse_diagonal(const std::string& s) {
  if (s == "right") return Diagonal::Right;
  if (s == "left") return Diagonal::Left;
  if (s == "alt" || s == "alternating") return Diagonal::Alternating;
  throw ValidationError("unknown diagonal pattern '" + s + "'");
}

inline std::string to_string(Diagonal d) {
  switch (d) {
    case Diagonal::Right:
      return "right";
    case Diagonal::Left:
      return "left";
    case Diagonal::Alternating:
      return "alternating";
  }
  return "?";
}

/// Grid spacing law. Geometric spacings grow by `ratio` per cell away from 0,
/// so ratio > 1 refines towards x = 0 (resp. y = 0).
struct Grading {
  enum class Kind { Uniform, Geometric } kind = Kind::Uniform;
  double ratio_x = 1.0;
  double ratio_y = 1.0;

  static Grading uniform() { return {}; }
  static Grading geometric(double rx, double ry) { return {Kind::Geometric, rx, ry}; }
};

/// Node coordinates 0 = t_0 < ... < t_n = 1 with geometric spacing.
inline std::vector<double> geometric_points(index_t n, double ratio) {
  if (n < 1) throw ValidationError("cell count must be at least 1");
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ValidationError("grading ratio must be positive");
  std::vector<double> t(static_cast<std::size_t>(n) + 1, 0.0);
  if (ratio == 1.0) {
    for (index_t i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(n);
    return t;
  }
  const double h0 = (ratio - 1.0) / (std::pow(ratio, static_cast<double>(n)) - 1.0);
  double smallest = std::min(h0, h0 * std::pow(ratio, static_cast<double>(n - 1)));
  if (!(smallest > 1e-14) || !std::isfinite(h0))
    throw ValidationError("degenerate grading: the first cell width underflows");
  double h = h0;
  for (index_t i = 1; i < n; ++i) {
    t[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i) - 1] + h;
    h *= ratio;
  }
  t.back() = 1.0;
  return t;
}

struct Box2 {
  double x0, x1, y0, y1;
  bool contains(const Vec<2>& p) const { return p(0) > x0 && p(0) < x1 && p(1) > y0 && p(1) < y1; }
};

/// Triangulated tensor-product grid on the given coordinate lines. Elements
/// whose centroid lies inside `hole` are dropped (with their unused nodes).
/// `dirichlet(p)` marks boundary nodes as Dirichlet; other boundary nodes
/// become Neumann. Nodes on the hole boundary are always Dirichlet.
inline SimplicialMesh<2> gen_tensor_grid_2d(const std::vector<double>& xs, const std::vector<double>& ys,
                                            Diagonal diagonal, std::optional<Box2> hole = std::nullopt,
                                            const std::function<bool(const Vec<2>&)>& dirichlet = {},
                                            const std::function<int(const Vec<2>&)>& region = {},
                                            MeshPolicy policy = {}) {
  const auto nx = static_cast<index_t>(xs.size()) - 1, ny = static_cast<index_t>(ys.size()) - 1;
  if (nx < 1 || ny < 1) throw ValidationError("grid needs at least one cell per direction");
  auto id = [nx](index_t i, index_t j) { return j * (nx + 1) + i; };
  std::vector<Vec<2>> nodes;
  nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (index_t j = 0; j <= ny; ++j) {
    for (index_t i = 0; i <= nx; ++i) nodes.emplace_back(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
  }
  std::vector<std::array<index_t, 3>> elems;
  std::vector<int> tags;
  for (index_t j = 0; j < ny; ++j) {
    for (index_t i = 0; i < nx; ++i) {
      const Vec<2> mid(0.5 * (xs[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i) + 1]),
                       0.5 * (ys[static_cast<std::size_t>(j)] + ys[static_cast<std::size_t>(j) + 1]));
      if (hole && hole->contains(mid)) continue;
      const index_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const bool right = diagonal == Diagonal::Right || (diagonal == Diagonal::Alternating && (i + j) % 2 == 0);
      if (right) {
        elems.push_back({a, b, c});
        elems.push_back({a, c, d});
      } else {
        elems.push_back({a, b, d});
        elems.push_back({b, c, d});
      }
      if (region) {
        const int tag = region(mid);
        tags.push_back(tag);
        tags.push_back(tag);
      }
    }
  }

  // boundary edges are those used by exactly one element
  std::map<std::pair<index_t, index_t>, int> edge_count;
  for (const auto& e : elems) {
    for (int a = 0; a < 3; ++a) {
      index_t u = e[static_cast<std::size_t>(a)], v = e[static_cast<std::size_t>((a + 1) % 3)];
      ++edge_count[{std::min(u, v), std::max(u, v)}];
    }
  }
  std::vector<char> on_boundary(nodes.size(), 0);
  for (const auto& [edge, count] : edge_count) {
    if (count == 1) on_boundary[static_cast<std::size_t>(edge.first)] = on_boundary[static_cast<std::size_t>(edge.second)] = 1;
  }

  std::vector<index_t> remap(nodes.size(), -1);
  for (const auto& e : elems) {
    for (index_t v : e) remap[static_cast<std::size_t>(v)] = 0;
  }
  std::vector<Vec<2>> kept;
  std::vector<NodeMarker> markers;
  const double lx = xs.back() - xs.front(), ly = ys.back() - ys.front();
  const double tol = 1e-12 * std::max(lx, ly);
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<index_t>(kept.size());
    kept.push_back(nodes[v]);
    NodeMarker m = NodeMarker::Interior;
    if (on_boundary[v]) {
      const Vec<2>& p = nodes[v];
      const bool outer = std::abs(p(0) - xs.front()) < tol || std::abs(p(0) - xs.back()) < tol ||
                         std::abs(p(1) - ys.front()) < tol || std::abs(p(1) - ys.back()) < tol;
      m = (!outer || !dirichlet || dirichlet(p)) ? NodeMarker::Dirichlet : NodeMarker::Neumann;
    }
    markers.push_back(m);
  }
  for (auto& e : elems) {
    for (auto& v : e) v = remap[static_cast<std::size_t>(v)];
  }
  return SimplicialMesh<2>(std::move(kept), std::move(elems), std::move(markers), std::move(tags), policy);
}

/// nx-by-ny grid on the unit square, two triangles per cell, all boundary
/// nodes Dirichlet.
inline SimplicialMesh<2> gen_structured_2d(index_t nx, index_t ny, Grading grading = {},
                                           Diagonal diagonal = Diagonal::Right,
                                           std::optional<Box2> hole = std::nullopt, MeshPolicy policy = {}) {
  if (nx < 1 || ny < 1) throw ValidationError("grid counts must be at least 1");
  const bool geo = grading.kind == Grading::Kind::Geometric;
  const auto xs = geometric_points(nx, geo ? grading.ratio_x : 1.0);
  const auto ys = geometric_points(ny, geo ? grading.ratio_y : 1.0);
  return gen_tensor_grid_2d(xs, ys, diagonal, hole, {}, {}, policy);
}

/// Quasi-uniform mesh of (0,1)^2 minus the closed square [4/9,5/9]^2 on a
/// 9k-by-9k alternating grid, homogeneous Dirichlet on all boundaries.
inline SimplicialMesh<2> gen_square_with_hole(index_t k) {
  if (k < 1) throw ValidationError("refinement level must be at least 1");
  return gen_structured_2d(9 * k, 9 * k, {}, Diagonal::Alternating, Box2{4.0 / 9, 5.0 / 9, 4.0 / 9, 5.0 / 9});
}

namespace detail {

/// Points on [a,b] with n cells, clustered towards both ends with tanh
/// stretching of strength beta (0 gives uniform spacing).
inline std::vector<double> stretched_points(double a, double b, index_t n, double beta) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (index_t i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n);
    const double g = beta > 0 ? 0.5 * (1.0 + std::tanh(beta * (2 * s - 1)) / std::tanh(beta)) : s;
    t[static_cast<std::size_t>(i)] = a + (b - a) * g;
  }
  t.front() = a;
  t.back() = b;
  return t;
}

inline std::vector<double> piecewise_stretched(const std::vector<double>& breaks, double h, double beta) {
  std::vector<double> out{breaks.front()};
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const auto n = std::max<index_t>(2, static_cast<index_t>(std::ceil((breaks[s + 1] - breaks[s]) / h - 1e-9)));
    const auto seg = stretched_points(breaks[s], breaks[s + 1], n, beta);
    out.insert(out.end(), seg.begin() + 1, seg.end());
  }
  return out;
}

}  // namespace detail

/// Structured stand-in for the aquifer problem on (0,100)^2 with two thin
/// low-permeability strips (0,80)x(64,68) and (20,100)x(40,44), tagged as
/// region 1 (the rest is region 0). Grid lines follow the strip edges and are
/// clustered towards them. Dirichlet on x = 0 and x = 100, Neumann on the
/// top and bottom.
inline SimplicialMesh<2> gen_groundwater_like(double h = 5.0, double beta = 1.5,
                                              Diagonal diagonal = Diagonal::Alternating) {
  if (!(h > 0 && h <= 50)) throw ValidationError("groundwater mesh size must lie in (0, 50]");
  const auto xs = detail::piecewise_stretched({0, 20, 80, 100}, h, beta);
  const auto ys = detail::piecewise_stretched({0, 40, 44, 64, 68, 100}, h, beta);
  const Box2 strip1{0, 80, 64, 68}, strip2{20, 100, 40, 44};
  auto region = [=](const Vec<2>& c) { return strip1.contains(c) || strip2.contains(c) ? 1 : 0; };
  auto dirichlet = [](const Vec<2>& p) { return p(0) < 1e-9 || p(0) > 100 - 1e-9; };
  return gen_tensor_grid_2d(xs, ys, diagonal, std::nullopt, dirichlet, region);
}

/// Diffusion field for gen_groundwater_like: I outside the strips and
/// `ratio` * I inside.
inline TensorField<2> groundwater_field(double ratio = 1e-6) {
  return TensorField<2>::by_region({{0, Mat<2>::Identity()}, {1, ratio * Mat<2>::Identity()}}, "groundwater");
}

namespace detail {

inline Vec<2> oriented(Vec<2> v, const Vec<2>& ref) { return v.dot(ref) < 0 ? Vec<2>(-v) : v; }

}  // namespace detail

/// Structured mesh whose long element edges follow the principal diffusion
/// direction. Rows of nodes are traced along the principal eigenvector field
/// of D, seeded on the perpendicular curve through `center`; consecutive
/// rows are `width` apart and points along a row are width*sqrt(kappa) apart,
/// kappa being the anisotropy of D at the center. All boundary nodes are
/// Dirichlet.
inline SimplicialMesh<2> gen_diffusion_aligned_2d(const TensorField<2>& field, const Vec<2>& center, double width,
                                                  index_t n_across, index_t n_along) {
  if (!(width > 0)) throw ValidationError("width must be positive");
  if (n_across < 2 || n_along < 2) throw ValidationError("need at least 2 cells in each direction");
  const Mat<2> d0 = field.eval(center);
  const auto ev = sym_eigenvalues<2>(d0);
  const double along = width * std::sqrt(ev[1] / ev[0]);

  auto direction = [&](const Vec<2>& p, const Vec<2>& ref, bool perp) {
    Vec<2> v = principal_direction(field.eval(p));
    if (perp) v = Vec<2>(-v(1), v(0));
    return detail::oriented(v, ref);
  };
  // RK4 integral curve of the (sign-continuous) direction field.
  auto trace = [&](Vec<2> p, double step, index_t count, bool perp) {
    std::vector<Vec<2>> pts{p};
    Vec<2> ref = direction(p, perp ? Vec<2>(0, 1) : Vec<2>(1, 0), perp) * (step < 0 ? -1.0 : 1.0);
    const int sub = 8;
    const double h = std::abs(step) / sub;
    for (index_t i = 0; i < count; ++i) {
      for (int k = 0; k < sub; ++k) {
        const Vec<2> k1 = direction(p, ref, perp);
        const Vec<2> k2 = direction(p + 0.5 * h * k1, k1, perp);
        const Vec<2> k3 = direction(p + 0.5 * h * k2, k2, perp);
        const Vec<2> k4 = direction(p + h * k3, k3, perp);
        const Vec<2> dir = (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
        p += h * dir;
        ref = dir;
      }
      pts.push_back(p);
    }
    return pts;
  };

  auto join = [&](const Vec<2>& p, double step, index_t count, bool perp) {
    auto back = trace(p, -step, count / 2, perp);
    auto fwd = trace(p, step, count - count / 2, perp);
    std::vector<Vec<2>> row(back.rbegin(), back.rend());
    row.insert(row.end(), fwd.begin() + 1, fwd.end());
    return row;
  };

  const auto seeds = join(center, width, n_across, true);
  std::vector<Vec<2>> nodes;
  for (const auto& s : seeds) {
    const auto row = join(s, along, n_along, false);
    nodes.insert(nodes.end(), row.begin(), row.end());
  }
  const index_t m = n_along + 1;
  std::vector<std::array<index_t, 3>> elems;
  for (index_t j = 0; j < n_across; ++j) {
    for (index_t i = 0; i < n_along; ++i) {
      const index_t a = j * m + i, b = a + 1, c = (j + 1) * m + i + 1, d = (j + 1) * m + i;
      elems.push_back({a, b, c});
      elems.push_back({a, c, d});
    }
  }
  std::vector<NodeMarker> markers(nodes.size(), NodeMarker::Interior);
  for (index_t j = 0; j <= n_across; ++j) {
    for (index_t i = 0; i <= n_along; ++i) {
      if (j == 0 || j == n_across || i == 0 || i == n_along)
        markers[static_cast<std::size_t>(j * m + i)] = NodeMarker::Dirichlet;
    }
  }
  return SimplicialMesh<2>(std::move(nodes), std::move(elems), std::move(markers));
}

}  // namespace stepbound
