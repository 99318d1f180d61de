#pragma once

// Metric volumes, element diameters and the equidistribution / alignment
// quality measures of a mesh with respect to a metric tensor field.

#include "stepbound/core.hpp"
#include "stepbound/linalg.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace stepbound {

struct ElementQuality {
  double volume = 0;      ///< |K|
  double vol_metric = 0;  ///< |K|_M = |K| det(M_K)^{1/2}
  double h_elem = 0;      ///< |K|_M^{1/d}
  double q_eq = 0;
  double q_ali = 0;
  double q_m = 0;
  double rho_metric = std::numeric_limits<double>::quiet_NaN();  ///< NaN for d = 3
  double norm_fdf = 0;  ///< ||F'^{-1} M_K^{-1} F'^{-T}||_2
};

struct MeshQualitySummary {
  double h_global = 0;    ///< h_M
  double vol_domain = 0;  ///< |Omega|_{M,h}
  std::vector<ElementQuality> elements;
  double max_q_m = 0;
  double max_q_eq = 0;
  double max_q_ali = 0;
};

/// Incircle diameter of element k measured with the constant metric m
/// (d = 1: the metric length; d = 2: 4 * area / perimeter).
template <int Dim>
double inscribed_diameter_metric(const SimplicialMesh<Dim>& mesh, index_t k, const Mat<Dim>& m) {
  if constexpr (Dim == 1) {
    return mesh.volume(k) * std::sqrt(m(0, 0));
  } else if constexpr (Dim == 2) {
    const auto& s = mesh.element(k);
    double perimeter = 0;
    for (int a = 0; a < 3; ++a) {
      const Vec<2> e = mesh.node(s[static_cast<std::size_t>((a + 1) % 3)]) - mesh.node(s[static_cast<std::size_t>(a)]);
      perimeter += std::sqrt(e.dot(m * e));
    }
    const double area = mesh.volume(k) * std::sqrt(m.determinant());
    return 4.0 * area / perimeter;
  } else {
    throw UnsupportedError("inscribed diameter is only available for d <= 2");
  }
}

/// Quality of element k given its metric average m_k and the global h_M.
template <int Dim>
ElementQuality element_quality_from(const SimplicialMesh<Dim>& mesh, index_t k, const Mat<Dim>& m_k, double h_global) {
  const AffineMap<Dim> map = affine_map(mesh, k);
  ElementQuality q;
  q.volume = map.volume;
  q.vol_metric = map.volume * std::sqrt(m_k.determinant());
  q.h_elem = std::pow(q.vol_metric, 1.0 / Dim);
  const Mat<Dim> finv = map.jacobian.inverse();
  const Mat<Dim> t = finv * m_k.inverse() * finv.transpose();
  q.norm_fdf = lambda_max<Dim>(0.5 * (t + t.transpose()));
  q.q_eq = std::pow(h_global / q.h_elem, Dim);
  q.q_ali = q.h_elem * q.h_elem * q.norm_fdf;
  q.q_m = h_global * h_global * q.norm_fdf;
  if constexpr (Dim <= 2) q.rho_metric = inscribed_diameter_metric(mesh, k, m_k);
  return q;
}

/// Sum over elements of |K| det(M_K)^{1/2}.
template <int Dim>
double metric_domain_volume(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& m) {
  double v = 0;
  for (index_t k = 0; k < mesh.num_elements(); ++k) v += mesh.volume(k) * std::sqrt(m[static_cast<std::size_t>(k)].determinant());
  return v;
}

template <int Dim>
double global_metric_diameter(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& m) {
  return std::pow(metric_domain_volume(mesh, m) / static_cast<double>(mesh.num_elements()), 1.0 / Dim);
}

template <int Dim>
ElementQuality element_quality(const SimplicialMesh<Dim>& mesh, index_t k, const TensorField<Dim>& metric,
                               double h_global, int quad_order = 4) {
  return element_quality_from(mesh, k, average_tensor(metric, mesh, k, quad_order), h_global);
}

template <int Dim>
MeshQualitySummary mesh_quality_summary_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& m) {
  MeshQualitySummary s;
  s.vol_domain = metric_domain_volume(mesh, m);
  s.h_global = std::pow(s.vol_domain / static_cast<double>(mesh.num_elements()), 1.0 / Dim);
  s.elements.reserve(static_cast<std::size_t>(mesh.num_elements()));
  double inv_sum = 0;
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const auto q = element_quality_from(mesh, k, m[static_cast<std::size_t>(k)], s.h_global);
    s.max_q_m = std::max(s.max_q_m, q.q_m);
    s.max_q_eq = std::max(s.max_q_eq, q.q_eq);
    s.max_q_ali = std::max(s.max_q_ali, q.q_ali);
    inv_sum += 1.0 / q.q_eq;
    s.elements.push_back(q);
  }
  const double mean_inv = inv_sum / static_cast<double>(mesh.num_elements());
  if (std::abs(mean_inv - 1.0) > 1e-10)
    throw NumericalError("equidistribution identity violated: mean of 1/q_eq = " + std::to_string(mean_inv));
  if (s.max_q_eq < 1.0 - 1e-12) throw NumericalError("max q_eq below 1");
  return s;
}

template <int Dim>
MeshQualitySummary mesh_quality_summary(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& metric,
                                        int quad_order = 4) {
  return mesh_quality_summary_from(mesh, element_averages(metric, mesh, quad_order));
}

/// CSV with one row per element.
inline void write_quality_csv(std::ostream& out, const MeshQualitySummary& s) {
  out << "element,volume,vol_metric,q_eq,q_ali,q_m\n" << std::setprecision(17);
  for (std::size_t k = 0; k < s.elements.size(); ++k) {
    const auto& q = s.elements[k];
    out << k << ',' << q.volume << ',' << q.vol_metric << ',' << q.q_eq << ',' << q.q_ali << ',' << q.q_m << '\n';
  }
}

}  // namespace stepbound
