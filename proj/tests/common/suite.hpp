#pragma once

// Mesh/field collections shared by the unit tests and the acceptance runner.

#include "stepbound/generators.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/tensor_field.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace suite {

using namespace stepbound;

template <int Dim>
struct Named {
  std::string name;
  SimplicialMesh<Dim> mesh;
};

template <int Dim>
struct NamedField {
  std::string name;
  TensorField<Dim> field;
};

inline SimplicialMesh<1> random_mesh_1d(std::uint64_t seed, index_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& v : w) v = u(rng);
  double total = 0;
  for (double v : w) total += v;
  std::vector<Vec<1>> nodes(static_cast<std::size_t>(n) + 1);
  double x = 0;
  for (index_t i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)](0) = x;
    x += w[static_cast<std::size_t>(i)] / total;
  }
  nodes.back()(0) = 1.0;
  std::vector<NodeMarker> markers(nodes.size(), NodeMarker::Interior);
  markers.front() = NodeMarker::Dirichlet;
  markers.back() = (seed % 2) ? NodeMarker::Neumann : NodeMarker::Dirichlet;
  std::vector<std::array<index_t, 2>> elems;
  for (index_t k = 0; k < n; ++k) elems.push_back({k, k + 1});
  return SimplicialMesh<1>(std::move(nodes), std::move(elems), std::move(markers));
}

/// Structured grid with interior nodes jittered by up to 20% of the cell size
/// and a random diagonal pattern.
inline SimplicialMesh<2> random_mesh_2d(std::uint64_t seed, index_t nx, index_t ny) {
  std::mt19937_64 rng(seed);
  const Diagonal diag = static_cast<Diagonal>(seed % 3);
  const auto base = gen_structured_2d(nx, ny, {}, diag);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<Vec<2>> nodes(base.nodes().begin(), base.nodes().end());
  std::vector<NodeMarker> markers(base.markers().begin(), base.markers().end());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (markers[i] == NodeMarker::Interior) {
      nodes[i] += Vec<2>(u(rng) / static_cast<double>(nx), u(rng) / static_cast<double>(ny));
    } else if (seed % 2 && nodes[i](1) == 0.0 && nodes[i](0) > 0.0 && nodes[i](0) < 1.0) {
      markers[i] = NodeMarker::Neumann;
    }
  }
  return SimplicialMesh<2>(std::move(nodes), {base.elements().begin(), base.elements().end()}, std::move(markers));
}

/// n^3 cubes, each split into 6 tetrahedra around the main diagonal.
inline SimplicialMesh<3> kuhn_cube(index_t n) {
  auto id = [n](index_t i, index_t j, index_t k) { return (k * (n + 1) + j) * (n + 1) + i; };
  std::vector<Vec<3>> nodes;
  std::vector<NodeMarker> markers;
  for (index_t k = 0; k <= n; ++k) {
    for (index_t j = 0; j <= n; ++j) {
      for (index_t i = 0; i <= n; ++i) {
        const double h = 1.0 / static_cast<double>(n);
        nodes.emplace_back(i * h, j * h, k * h);
        const bool b = i == 0 || j == 0 || k == 0 || i == n || j == n || k == n;
        markers.push_back(!b ? NodeMarker::Interior : (k == n ? NodeMarker::Neumann : NodeMarker::Dirichlet));
      }
    }
  }
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::array<index_t, 4>> elems;
  for (index_t k = 0; k < n; ++k) {
    for (index_t j = 0; j < n; ++j) {
      for (index_t i = 0; i < n; ++i) {
        for (const auto& p : perms) {
          index_t c[3] = {i, j, k};
          std::array<index_t, 4> t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            t[static_cast<std::size_t>(s) + 1] = id(c[0], c[1], c[2]);
          }
          elems.push_back(t);
        }
      }
    }
  }
  return SimplicialMesh<3>(std::move(nodes), std::move(elems), std::move(markers));
}

inline std::vector<Named<1>> meshes_1d() {
  std::vector<Named<1>> out;
  out.push_back({"uniform-8", gen_uniform_1d(8)});
  out.push_back({"uniform-64", gen_uniform_1d(64)});
  const auto d = fields::per1d(1.0 / 16);
  out.push_back({"duniform-64", gen_equidistributed_1d(64, [&d](double x) {
                   Vec<1> p;
                   p(0) = x;
                   return 1.0 / std::sqrt(d.eval(p)(0, 0));
                 })});
  out.push_back({"metric-uniform-32", gen_metric_uniform_1d(32, TensorField<1>::inverse_of(d))});
  for (std::uint64_t s = 1; s <= 4; ++s) out.push_back({"random1d-" + std::to_string(s), random_mesh_1d(s, 20 + 7 * s)});
  return out;
}

inline std::vector<Named<2>> meshes_2d() {
  std::vector<Named<2>> out;
  out.push_back({"8x8-right", gen_structured_2d(8, 8)});
  out.push_back({"8x8-left", gen_structured_2d(8, 8, {}, Diagonal::Left)});
  out.push_back({"8x8-alt", gen_structured_2d(8, 8, {}, Diagonal::Alternating)});
  out.push_back({"4x64", gen_structured_2d(4, 64)});
  out.push_back({"4x16-graded", gen_structured_2d(4, 16, Grading::geometric(1.0, 1.5))});
  out.push_back({"hole-9", gen_square_with_hole(1)});
  out.push_back({"groundwater-20", gen_groundwater_like(20.0)});
  out.push_back({"aligned", gen_diffusion_aligned_2d(fields::aniso2d(1000), Vec<2>(0.5, 0.5), 0.01, 12, 4)});
  for (std::uint64_t s = 1; s <= 4; ++s) out.push_back({"random2d-" + std::to_string(s), random_mesh_2d(s, 6 + s, 5 + s)});
  return out;
}

inline std::vector<Named<3>> meshes_3d() {
  std::vector<Named<3>> out;
  out.push_back({"kuhn-3", kuhn_cube(3)});
  return out;
}

inline std::vector<NamedField<1>> fields_1d() {
  return {{"identity", TensorField<1>::identity()}, {"per1d", fields::per1d(1.0 / 16)}};
}

inline std::vector<NamedField<2>> fields_2d() {
  return {{"identity", TensorField<2>::identity()}, {"aniso2d", fields::aniso2d(1000)}};
}

inline std::vector<NamedField<3>> fields_3d() {
  Mat<3> a;
  a << 10, 2, 0, 2, 3, 1, 0, 1, 0.5;
  return {{"identity", TensorField<3>::identity()}, {"aniso3d", TensorField<3>::constant(a, "aniso3d")}};
}

}  // namespace suite
