#pragma once

#include "stepbound/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stepbound {

enum class NodeMarker : int { Interior = 0, Dirichlet = 1, Neumann = 2 };

inline bool is_free(NodeMarker m) noexcept { return m != NodeMarker::Dirichlet; }

/// The equilateral reference simplex with unit volume.
///
/// d=1: [0,1]; d=2: triangle (0,0),(l,0),(l/2,l*sqrt(3)/2) with l = 2/3^{1/4};
/// d=3: regular tetrahedron with edge (6*sqrt(2))^{1/3}. All edges have the
/// same length, which is reported as `longest_edge()`.
template <int Dim>
struct ReferenceSimplex {
  static constexpr double edge_length() {
    if constexpr (Dim == 1) {
      return 1.0;
    } else if constexpr (Dim == 2) {
      return 2.0 / 1.3160740129524924;  // 3^{1/4}
    } else {
      return 2.0396489026555056;  // (6 sqrt 2)^{1/3}
    }
  }

  static double longest_edge() { return edge_length(); }

  /// Vertex j of the reference simplex.
  static Vec<Dim> vertex(int j) {
    const double l = edge_length();
    Vec<Dim> v = Vec<Dim>::Zero();
    if (j == 0) return v;
    if constexpr (Dim == 1) {
      v(0) = l;
    } else if constexpr (Dim == 2) {
      if (j == 1) {
        v << l, 0.0;
      } else {
        v << 0.5 * l, 0.5 * std::numbers::sqrt3 * l;
      }
    } else {
      if (j == 1) {
        v << l, 0.0, 0.0;
      } else if (j == 2) {
        v << 0.5 * l, 0.5 * std::numbers::sqrt3 * l, 0.0;
      } else {
        v << 0.5 * l, std::numbers::sqrt3 / 6.0 * l, std::sqrt(2.0 / 3.0) * l;
      }
    }
    return v;
  }

  /// Columns are the edge vectors vertex(j) - vertex(0), j = 1..d.
  static Mat<Dim> edge_matrix() {
    Mat<Dim> e;
    for (int j = 1; j <= Dim; ++j) e.col(j - 1) = vertex(j);
    return e;
  }

  /// Gradients of the reference barycentric functions, one column per vertex.
  static Eigen::Matrix<double, Dim, Dim + 1> gradients() {
    const Mat<Dim> inv_t = edge_matrix().inverse().transpose();
    Eigen::Matrix<double, Dim, Dim + 1> g;
    g.col(0).setZero();
    for (int j = 1; j <= Dim; ++j) {
      g.col(j) = inv_t.col(j - 1);
      g.col(0) -= g.col(j);
    }
    return g;
  }
};

/// Gradient constant C = |grad phi_i|^2 on the equilateral unit reference
/// simplex: d/(d+1) * (sqrt(d+1)/d!)^{2/d}.
inline double c_nabla(int dim) {
  double fact = 1.0;
  for (int k = 2; k <= dim; ++k) fact *= k;
  return static_cast<double>(dim) / (dim + 1) *
         std::pow(std::sqrt(static_cast<double>(dim + 1)) / fact, 2.0 / dim);
}

/// Affine map from the reference simplex onto a mesh element.
template <int Dim>
struct AffineMap {
  Mat<Dim> jacobian;  ///< F_K' = E_K * Ehat^{-1}
  Vec<Dim> origin;    ///< image of reference vertex 0
  double volume = 0;  ///< det(F_K') = |K|

  Vec<Dim> apply(const Vec<Dim>& xi) const { return origin + jacobian * xi; }
};

/// Validation knobs for constructing a mesh. The defaults enforce a well-posed
/// parabolic problem; element-level tests relax the boundary requirements.
struct MeshPolicy {
  bool require_free_nodes = true;
  bool require_dirichlet = true;
};

/// Immutable simplicial mesh in Dim dimensions.
///
/// Construction validates connectivity and reorders element vertices so every
/// signed volume is positive.
template <int Dim>
class SimplicialMesh {
 public:
  static_assert(Dim >= 1 && Dim <= 3, "meshes are supported for d = 1, 2, 3");
  static constexpr int dim = Dim;
  using Point = Vec<Dim>;
  using Simplex = std::array<index_t, Dim + 1>;

  SimplicialMesh(std::vector<Point> nodes, std::vector<Simplex> simplices,
                 std::vector<NodeMarker> markers, std::vector<int> region_tags = {},
                 MeshPolicy policy = {})
      : nodes_(std::move(nodes)),
        simplices_(std::move(simplices)),
        markers_(std::move(markers)),
        regions_(std::move(region_tags)) {
    validate(policy);
  }

  index_t num_nodes() const noexcept { return static_cast<index_t>(nodes_.size()); }
  index_t num_elements() const noexcept { return static_cast<index_t>(simplices_.size()); }

  const Point& node(index_t i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const Simplex& element(index_t k) const { return simplices_[static_cast<std::size_t>(k)]; }
  NodeMarker marker(index_t i) const { return markers_[static_cast<std::size_t>(i)]; }
  bool has_regions() const noexcept { return !regions_.empty(); }
  int region(index_t k) const { return regions_.empty() ? 0 : regions_[static_cast<std::size_t>(k)]; }

  std::span<const Point> nodes() const noexcept { return nodes_; }
  std::span<const Simplex> elements() const noexcept { return simplices_; }
  std::span<const NodeMarker> markers() const noexcept { return markers_; }
  std::span<const int> regions() const noexcept { return regions_; }

  index_t num_free_nodes() const {
    return std::count_if(markers_.begin(), markers_.end(), is_free);
  }

  /// Columns are the physical edge vectors x_j - x_0 of element k.
  Mat<Dim> edge_matrix(index_t k) const {
    const Simplex& s = element(k);
    Mat<Dim> e;
    for (int j = 1; j <= Dim; ++j) e.col(j - 1) = node(s[j]) - node(s[0]);
    return e;
  }

  double volume(index_t k) const { return signed_volume(edge_matrix(k)); }

  Point centroid(index_t k) const {
    Point c = Point::Zero();
    for (index_t v : element(k)) c += node(v);
    return c / static_cast<double>(Dim + 1);
  }

  double total_volume() const {
    double v = 0;
    for (index_t k = 0; k < num_elements(); ++k) v += volume(k);
    return v;
  }

  static double signed_volume(const Mat<Dim>& edges) {
    double fact = 1.0;
    for (int k = 2; k <= Dim; ++k) fact *= k;
    return edges.determinant() / fact;
  }

 private:
  void validate(const MeshPolicy& policy) {
    const auto n = num_nodes();
    if (n == 0) throw ValidationError("mesh has no nodes");
    if (simplices_.empty()) throw ValidationError("mesh has no elements");
    if (markers_.size() != nodes_.size())
      throw ValidationError("node marker count does not match node count");
    if (!regions_.empty() && regions_.size() != simplices_.size())
      throw ValidationError("region tag count does not match element count");
    for (const Point& p : nodes_) {
      if (!p.allFinite()) throw ValidationError("non-finite node coordinate");
    }

    for (index_t k = 0; k < num_elements(); ++k) {
      Simplex& s = simplices_[static_cast<std::size_t>(k)];
      for (int a = 0; a <= Dim; ++a) {
        if (s[a] < 0 || s[a] >= n)
          throw ValidationError("element " + std::to_string(k) + ": node index out of range");
        for (int b = 0; b < a; ++b) {
          if (s[a] == s[b])
            throw ValidationError("element " + std::to_string(k) + ": repeated node index");
        }
      }
      const Mat<Dim> e = edge_matrix(k);
      double scale = 0;
      for (int j = 0; j < Dim; ++j) scale = std::max(scale, e.col(j).norm());
      const double vol = signed_volume(e);
      if (!(std::abs(vol) > 1e-13 * std::pow(scale, Dim)))
        throw ValidationError("element " + std::to_string(k) + ": degenerate element");
      if (vol < 0) std::swap(s[0], s[1]);
    }

    const index_t free = num_free_nodes();
    if (policy.require_free_nodes && free == 0) throw ValidationError("no free nodes");
    if (policy.require_dirichlet && free == n)
      throw ValidationError("no Dirichlet nodes: the problem is not well posed");
  }

  std::vector<Point> nodes_;
  std::vector<Simplex> simplices_;
  std::vector<NodeMarker> markers_;
  std::vector<int> regions_;
};

/// F_K' for element k. The jacobian maps reference vertex j onto element
/// vertex j.
template <int Dim>
AffineMap<Dim> affine_map(const SimplicialMesh<Dim>& mesh, index_t k) {
  if (k < 0 || k >= mesh.num_elements())
    throw ValidationError("element id " + std::to_string(k) + " out of range");
  static const Mat<Dim> ref_inv = ReferenceSimplex<Dim>::edge_matrix().inverse();
  AffineMap<Dim> map;
  map.jacobian = mesh.edge_matrix(k) * ref_inv;
  map.origin = mesh.node(mesh.element(k)[0]);
  map.volume = map.jacobian.determinant();
  if (!(map.volume > 0)) throw ValidationError("element " + std::to_string(k) + ": degenerate element");
  return map;
}

/// Element patches: the elements incident to each node.
struct PatchIndex {
  std::vector<index_t> offsets;   ///< size num_nodes + 1
  std::vector<index_t> elements;  ///< incident element ids, grouped per node
  std::vector<double> volume;     ///< |omega_i|
  index_t p_max = 0;

  std::span<const index_t> patch(index_t i) const {
    const auto b = static_cast<std::size_t>(offsets[static_cast<std::size_t>(i)]);
    const auto e = static_cast<std::size_t>(offsets[static_cast<std::size_t>(i) + 1]);
    return {elements.data() + b, e - b};
  }
};

template <int Dim>
PatchIndex build_patches(const SimplicialMesh<Dim>& mesh) {
  const auto n = static_cast<std::size_t>(mesh.num_nodes());
  PatchIndex p;
  p.offsets.assign(n + 1, 0);
  for (const auto& s : mesh.elements()) {
    for (index_t v : s) ++p.offsets[static_cast<std::size_t>(v) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) p.offsets[i + 1] += p.offsets[i];
  p.elements.resize(static_cast<std::size_t>(p.offsets[n]));
  p.volume.assign(n, 0.0);
  std::vector<index_t> fill(p.offsets.begin(), p.offsets.end() - 1);
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const double vol = mesh.volume(k);
    for (index_t v : mesh.element(k)) {
      p.elements[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = k;
      p.volume[static_cast<std::size_t>(v)] += vol;
    }
  }
  for (std::size_t i = 0; i < n; ++i) p.p_max = std::max(p.p_max, p.offsets[i + 1] - p.offsets[i]);
  return p;
}

/// Ratio of the longest to the shortest edge of element k.
template <int Dim>
double edge_aspect_ratio(const SimplicialMesh<Dim>& mesh, index_t k) {
  const auto& s = mesh.element(k);
  double lo = INFINITY, hi = 0;
  for (int a = 0; a <= Dim; ++a) {
    for (int b = a + 1; b <= Dim; ++b) {
      const double len = (mesh.node(s[a]) - mesh.node(s[b])).norm();
      lo = std::min(lo, len);
      hi = std::max(hi, len);
    }
  }
  return hi / lo;
}

}  // namespace stepbound
