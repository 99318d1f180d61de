#pragma once

// P1 mass, lumped mass and stiffness matrices on the free nodes.

#include "stepbound/core.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/sparse.hpp"
#include "stepbound/tensor_field.hpp"

#include <string>
#include <vector>

namespace stepbound {

/// Numbering of the free (interior and Neumann) nodes.
class DofMap {
 public:
  template <int Dim>
  explicit DofMap(const SimplicialMesh<Dim>& mesh, bool all_nodes = false) {
    node_to_dof_.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
    for (index_t i = 0; i < mesh.num_nodes(); ++i) {
      if (all_nodes || is_free(mesh.marker(i))) {
        node_to_dof_[static_cast<std::size_t>(i)] = static_cast<index_t>(dof_to_node_.size());
        dof_to_node_.push_back(i);
      }
    }
    if (dof_to_node_.empty()) throw ValidationError("no free nodes");
  }

  /// Every node is a degree of freedom (no boundary elimination).
  template <int Dim>
  static DofMap all(const SimplicialMesh<Dim>& mesh) {
    return DofMap(mesh, true);
  }

  index_t size() const noexcept { return static_cast<index_t>(dof_to_node_.size()); }
  index_t dof(index_t node) const { return node_to_dof_[static_cast<std::size_t>(node)]; }
  index_t node(index_t dof) const { return dof_to_node_[static_cast<std::size_t>(dof)]; }
  const std::vector<index_t>& nodes() const noexcept { return dof_to_node_; }

 private:
  std::vector<index_t> node_to_dof_;
  std::vector<index_t> dof_to_node_;
};

/// Physical gradients of the barycentric functions of element k, one column
/// per local vertex: (F_K')^{-T} applied to the reference gradients.
template <int Dim>
Eigen::Matrix<double, Dim, Dim + 1> element_gradients(const SimplicialMesh<Dim>& mesh, index_t k) {
  static const Eigen::Matrix<double, Dim, Dim + 1> ref = ReferenceSimplex<Dim>::gradients();
  const AffineMap<Dim> map = affine_map(mesh, k);
  return map.jacobian.inverse().transpose() * ref;
}

namespace detail {

template <int Dim, class ElementMatrix>
SparseSymMatrix assemble(const SimplicialMesh<Dim>& mesh, const DofMap& dofs, ElementMatrix&& local) {
  std::vector<SparseSymMatrix::Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.num_elements() * (Dim + 1) * (Dim + 2) / 2));
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const Eigen::Matrix<double, Dim + 1, Dim + 1> e = local(k);
    const auto& s = mesh.element(k);
    for (int a = 0; a <= Dim; ++a) {
      const index_t i = dofs.dof(s[static_cast<std::size_t>(a)]);
      if (i < 0) continue;
      for (int b = 0; b <= Dim; ++b) {
        const index_t j = dofs.dof(s[static_cast<std::size_t>(b)]);
        if (j < i) continue;
        t.push_back({i, j, e(a, b)});
      }
    }
  }
  return SparseSymMatrix::from_triplets(dofs.size(), std::move(t));
}

}  // namespace detail

/// Exact P1 mass matrix: |K|/((d+1)(d+2)) (1 + delta_ij) per element.
template <int Dim>
SparseSymMatrix assemble_mass(const SimplicialMesh<Dim>& mesh, const DofMap& dofs) {
  using Local = Eigen::Matrix<double, Dim + 1, Dim + 1>;
  const Local pattern = Local::Ones() + Local::Identity();
  return detail::assemble(mesh, dofs, [&](index_t k) -> Local {
    return mesh.volume(k) / ((Dim + 1) * (Dim + 2)) * pattern;
  });
}

template <int Dim>
SparseSymMatrix assemble_mass(const SimplicialMesh<Dim>& mesh) {
  return assemble_mass(mesh, DofMap(mesh));
}

/// Lumped mass on every node: sum over incident elements of |K|/(d+1).
template <int Dim>
Eigen::VectorXd lumped_mass_all_nodes(const SimplicialMesh<Dim>& mesh) {
  Eigen::VectorXd l = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const double share = mesh.volume(k) / (Dim + 1);
    for (index_t v : mesh.element(k)) l(v) += share;
  }
  return l;
}

/// Lumped mass restricted to the free nodes. Row sums are taken over the full
/// space, Dirichlet neighbours included.
template <int Dim>
SparseSymMatrix assemble_lumped(const SimplicialMesh<Dim>& mesh, const DofMap& dofs) {
  const Eigen::VectorXd all = lumped_mass_all_nodes(mesh);
  Eigen::VectorXd d(dofs.size());
  for (index_t i = 0; i < dofs.size(); ++i) d(i) = all(dofs.node(i));
  return SparseSymMatrix::diagonal(d);
}

template <int Dim>
SparseSymMatrix assemble_lumped(const SimplicialMesh<Dim>& mesh) {
  return assemble_lumped(mesh, DofMap(mesh));
}

/// Stiffness matrix from precomputed element averages D_K.
template <int Dim>
SparseSymMatrix assemble_stiffness_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& d_k,
                                        const DofMap& dofs) {
  if (d_k.size() != static_cast<std::size_t>(mesh.num_elements()))
    throw ValidationError("one diffusion tensor per element is required");
  using Local = Eigen::Matrix<double, Dim + 1, Dim + 1>;
  return detail::assemble(mesh, dofs, [&](index_t k) -> Local {
    const auto g = element_gradients(mesh, k);
    return mesh.volume(k) * (g.transpose() * d_k[static_cast<std::size_t>(k)] * g);
  });
}

template <int Dim>
SparseSymMatrix assemble_stiffness(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& field,
                                   int quad_order, const DofMap& dofs) {
  return assemble_stiffness_from(mesh, element_averages(field, mesh, quad_order), dofs);
}

template <int Dim>
SparseSymMatrix assemble_stiffness(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& field,
                                   int quad_order = 4) {
  return assemble_stiffness(mesh, field, quad_order, DofMap(mesh));
}

/// Algebraic nonobtuseness: off-diagonal entries of A are nonpositive and its
/// row sums nonnegative, both up to 1e-12 * max|A_ij|.
inline bool is_nonobtuse(const SparseSymMatrix& a) {
  const double tol = 1e-12 * a.max_abs();
  bool ok = true;
  a.for_each([&](index_t i, index_t j, double v) {
    if (i != j && v > tol) ok = false;
  });
  if (!ok) return false;
  return a.row_sums().minCoeff() >= -tol;
}

/// Same test, for callers that hold the mesh and field the matrix came from.
template <int Dim>
bool is_nonobtuse_wrt(const SimplicialMesh<Dim>&, const TensorField<Dim>&, const SparseSymMatrix& a) {
  return is_nonobtuse(a);
}

}  // namespace stepbound
