#pragma once

// Bounds on lambda_max(M~^{-1} A): the diagonal-ratio bracket, the geometric
// and metric-uniform bounds, and the Zhu-Du and Shewchuk comparison bounds.

#include "stepbound/assembly.hpp"
#include "stepbound/core.hpp"
#include "stepbound/linalg.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/metric_quality.hpp"
#include "stepbound/spectral.hpp"
#include "stepbound/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stepbound {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Diagonal-ratio constant: 2(d+1) full / (d+1) lumped in general, 4 / 2 on
/// meshes that are nonobtuse with respect to D^{-1}.
inline double c_star(int dim, bool lumped, bool nonobtuse) {
  if (dim < 1 || dim > 3) throw ValidationError("dimension must be 1, 2 or 3");
  if (nonobtuse) return lumped ? 2.0 : 4.0;
  return lumped ? dim + 1.0 : 2.0 * (dim + 1);
}

/// C_# = C_grad (d+1)(d+2) / 2
inline double c_sharp(int dim) { return 0.5 * c_nabla(dim) * (dim + 1) * (dim + 2); }

/// Everything assembled once per (mesh, field).
template <int Dim>
struct Discretization {
  const SimplicialMesh<Dim>* mesh = nullptr;
  DofMap dofs;
  std::vector<Mat<Dim>> d_k;
  PatchIndex patches;
  SparseSymMatrix mass;
  SparseSymMatrix lumped;
  SparseSymMatrix stiffness;
  Eigen::VectorXd lumped_all;  ///< lumped mass on every node

  const SparseSymMatrix& mass_matrix(bool use_lumped) const { return use_lumped ? lumped : mass; }
};

template <int Dim>
Discretization<Dim> discretize(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& field, int quad_order = 4) {
  Discretization<Dim> d{&mesh, DofMap(mesh), element_averages(field, mesh, quad_order), build_patches(mesh), {}, {}, {}, {}};
  d.mass = assemble_mass(mesh, d.dofs);
  d.lumped = assemble_lumped(mesh, d.dofs);
  d.stiffness = assemble_stiffness_from(mesh, d.d_k, d.dofs);
  d.lumped_all = lumped_mass_all_nodes(mesh);
  return d;
}

// The result points at the mesh, so it must outlive it.
template <int Dim>
Discretization<Dim> discretize(SimplicialMesh<Dim>&&, const TensorField<Dim>&, int = 4) = delete;

struct DiagRatio {
  double lower = 0;        ///< max_i A_ii / M~_ii
  double upper = 0;        ///< c_star * lower
  index_t argmax_dof = -1;
  double min_ratio = 0;    ///< min_i M~_ii / A_ii
  index_t argmin_dof = -1;
};

inline DiagRatio diag_ratio_bound(const SparseSymMatrix& mt, const SparseSymMatrix& a, double cstar) {
  if (mt.size() != a.size()) throw ValidationError("pencil matrices differ in dimension");
  const Eigen::VectorXd m = diag_of(mt), s = diag_of(a);
  DiagRatio r;
  r.min_ratio = std::numeric_limits<double>::infinity();
  for (index_t i = 0; i < a.size(); ++i) {
    if (!(m(i) > 0) || !(s(i) > 0)) throw ValidationError("zero or negative diagonal entry at dof " + std::to_string(i));
    const double q = s(i) / m(i);
    if (q > r.lower) {
      r.lower = q;
      r.argmax_dof = i;
    }
    const double inv = m(i) / s(i);
    if (inv < r.min_ratio) {
      r.min_ratio = inv;
      r.argmin_dof = i;
    }
  }
  r.upper = cstar * r.lower;
  return r;
}

struct GeometricBound {
  double value = 0;         ///< norm form
  double value_q_form = 0;  ///< same bound written with Q_D and h_{D^-1}
  double h_dinv = 0;        ///< h_{D^-1}
  index_t argmax_node = -1;
};

/// C* C_# max_i sum_{K in omega_i} (|K|/|omega_i|) ||F'^{-1} D_K F'^{-T}||_2
/// over the free nodes i.
template <int Dim>
GeometricBound geometric_bound_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& d_k,
                                    const PatchIndex& patches, double cstar) {
  const index_t ne = mesh.num_elements();
  std::vector<double> norm(static_cast<std::size_t>(ne)), q_d(static_cast<std::size_t>(ne));
  std::vector<Mat<Dim>> dinv(static_cast<std::size_t>(ne));
  for (index_t k = 0; k < ne; ++k) {
    const auto map = affine_map(mesh, k);
    const Mat<Dim> finv = map.jacobian.inverse();
    const Mat<Dim> t = finv * d_k[static_cast<std::size_t>(k)] * finv.transpose();
    norm[static_cast<std::size_t>(k)] = lambda_max<Dim>(0.5 * (t + t.transpose()));
    dinv[static_cast<std::size_t>(k)] = d_k[static_cast<std::size_t>(k)].inverse();
  }
  GeometricBound g;
  g.h_dinv = global_metric_diameter(mesh, dinv);
  for (index_t k = 0; k < ne; ++k)
    q_d[static_cast<std::size_t>(k)] = element_quality_from(mesh, k, dinv[static_cast<std::size_t>(k)], g.h_dinv).q_m;

  double best = -1, best_q = -1;
  for (index_t i = 0; i < mesh.num_nodes(); ++i) {
    if (!is_free(mesh.marker(i))) continue;
    double s = 0, sq = 0;
    for (index_t k : patches.patch(i)) {
      const double w = mesh.volume(k) / patches.volume[static_cast<std::size_t>(i)];
      s += w * norm[static_cast<std::size_t>(k)];
      sq += w * q_d[static_cast<std::size_t>(k)];
    }
    if (s > best) {
      best = s;
      g.argmax_node = i;
    }
    best_q = std::max(best_q, sq);
  }
  const double c = cstar * c_sharp(Dim);
  g.value = c * best;
  g.value_q_form = c * best_q / (g.h_dinv * g.h_dinv);
  return g;
}

template <int Dim>
GeometricBound geometric_bound(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& field, double cstar,
                               int quad_order = 4) {
  return geometric_bound_from(mesh, element_averages(field, mesh, quad_order), build_patches(mesh), cstar);
}

struct MUniformBound {
  double value = 0;
  double max_norm_md = 0;  ///< max_K ||M_K D_K||_2
  double max_q_m = 0;      ///< validity indicator: 1 on an M-uniform mesh
  double h_metric = 0;
  index_t argmax_node = -1;
};

/// C* C_# h_M^{-2} max_i sum_{K in omega_i} (|K|/|omega_i|) ||M_K D_K||_2.
template <int Dim>
MUniformBound muniform_bound_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& m_k,
                                  const std::vector<Mat<Dim>>& d_k, const PatchIndex& patches, double cstar) {
  const index_t ne = mesh.num_elements();
  std::vector<double> nmd(static_cast<std::size_t>(ne));
  MUniformBound b;
  for (index_t k = 0; k < ne; ++k) {
    nmd[static_cast<std::size_t>(k)] = spectral_norm<Dim>(m_k[static_cast<std::size_t>(k)] * d_k[static_cast<std::size_t>(k)]);
    b.max_norm_md = std::max(b.max_norm_md, nmd[static_cast<std::size_t>(k)]);
  }
  const auto summary = mesh_quality_summary_from(mesh, m_k);
  b.h_metric = summary.h_global;
  b.max_q_m = summary.max_q_m;
  double best = -1;
  for (index_t i = 0; i < mesh.num_nodes(); ++i) {
    if (!is_free(mesh.marker(i))) continue;
    double s = 0;
    for (index_t k : patches.patch(i)) s += mesh.volume(k) / patches.volume[static_cast<std::size_t>(i)] * nmd[static_cast<std::size_t>(k)];
    if (s > best) {
      best = s;
      b.argmax_node = i;
    }
  }
  b.value = cstar * c_sharp(Dim) * best / (b.h_metric * b.h_metric);
  return b;
}

template <int Dim>
MUniformBound muniform_bound(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& metric,
                             const TensorField<Dim>& field, double cstar, int quad_order = 4) {
  return muniform_bound_from(mesh, element_averages(metric, mesh, quad_order), element_averages(field, mesh, quad_order),
                             build_patches(mesh), cstar);
}

/// (d-1)-volume of the face of element k opposite local vertex i, measured
/// with the constant metric g (identity for the Euclidean volume).
template <int Dim>
double face_volume(const SimplicialMesh<Dim>& mesh, index_t k, int i, const Mat<Dim>& g) {
  static_assert(Dim >= 2);
  const auto& s = mesh.element(k);
  std::array<index_t, Dim> f{};
  for (int a = 0, p = 0; a <= Dim; ++a) {
    if (a != i) f[static_cast<std::size_t>(p++)] = s[static_cast<std::size_t>(a)];
  }
  Eigen::Matrix<double, Dim, Dim - 1> e;
  for (int j = 1; j < Dim; ++j) e.col(j - 1) = mesh.node(f[static_cast<std::size_t>(j)]) - mesh.node(f[0]);
  const Eigen::Matrix<double, Dim - 1, Dim - 1> gram = e.transpose() * g * e;
  const double fact = Dim == 3 ? 2.0 : 1.0;
  return std::sqrt(std::max(0.0, gram.determinant())) / fact;
}

enum class NeighborKind { Face, Vertex };

/// Largest volume ratio between neighbouring elements.
template <int Dim>
double neighbor_volume_ratio(const SimplicialMesh<Dim>& mesh, const PatchIndex& patches, NeighborKind kind) {
  double c1 = 1.0;
  auto update = [&](index_t a, index_t b) {
    const double va = mesh.volume(a), vb = mesh.volume(b);
    c1 = std::max(c1, std::max(va / vb, vb / va));
  };
  if (kind == NeighborKind::Vertex) {
    for (index_t i = 0; i < mesh.num_nodes(); ++i) {
      const auto p = patches.patch(i);
      double lo = std::numeric_limits<double>::infinity(), hi = 0;
      for (index_t k : p) {
        lo = std::min(lo, mesh.volume(k));
        hi = std::max(hi, mesh.volume(k));
      }
      if (!p.empty()) c1 = std::max(c1, hi / lo);
    }
    return c1;
  }
  std::map<std::array<index_t, Dim>, index_t> first;
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& s = mesh.element(k);
    for (int i = 0; i <= Dim; ++i) {
      std::array<index_t, Dim> f{};
      for (int a = 0, p = 0; a <= Dim; ++a) {
        if (a != i) f[static_cast<std::size_t>(p++)] = s[static_cast<std::size_t>(a)];
      }
      std::sort(f.begin(), f.end());
      auto [it, inserted] = first.emplace(f, k);
      if (!inserted) update(it->second, k);
    }
  }
  return c1;
}

struct ZhuDuBound {
  double lower = 0;
  double upper = 0;
  double c1 = 1;
  index_t p_max = 0;
  double max_z = 0;  ///< max_K lambda_max(D_K) Z_K
  index_t argmax_element = -1;
};

/// Z_K = (d+1)/d^2 sum_i |V_i|^2/|K|^2; upper (d+2) max lambda_max(D_K) Z_K,
/// lower max lambda_min(D_K) Z_K / (d (1 + c1 p_max (d+2))).
template <int Dim>
ZhuDuBound zhu_du_bound_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& d_k,
                             const PatchIndex& patches, NeighborKind kind = NeighborKind::Face) {
  if constexpr (Dim == 1) {
    throw UnsupportedError("the Zhu-Du bound requires d >= 2");
  } else {
    ZhuDuBound b;
    b.c1 = neighbor_volume_ratio(mesh, patches, kind);
    b.p_max = patches.p_max;
    double max_lo = 0;
    const Mat<Dim> id = Mat<Dim>::Identity();
    for (index_t k = 0; k < mesh.num_elements(); ++k) {
      const double vol = mesh.volume(k);
      double sum = 0;
      for (int i = 0; i <= Dim; ++i) {
        const double f = face_volume(mesh, k, i, id);
        sum += f * f;
      }
      const double z = (Dim + 1.0) / (Dim * Dim) * sum / (vol * vol);
      const auto ev = sym_eigenvalues<Dim>(d_k[static_cast<std::size_t>(k)]);
      if (ev.back() * z > b.max_z) {
        b.max_z = ev.back() * z;
        b.argmax_element = k;
      }
      max_lo = std::max(max_lo, ev.front() * z);
    }
    b.upper = (Dim + 2.0) * b.max_z;
    b.lower = max_lo / (Dim * (1.0 + b.c1 * static_cast<double>(b.p_max) * (Dim + 2.0)));
    return b;
  }
}

/// Which vertices enter the Shewchuk element sums: all of them (with the
/// full-space lumped masses), or only the free ones.
enum class ShewchukVertices { All, FreeOnly };

struct ShewchukBound {
  double lower = 0;
  double upper = 0;
  double max_s = 0;
  index_t p_max = 0;
  index_t argmax_element = -1;
};

/// S_K = 1/d^2 sum_i (|K|/M~_ii) |V_i|^2_{D^-1} / |K|^2_{D^-1};
/// (1/d) max S_K <= lambda_max <= p_max max S_K.
template <int Dim>
ShewchukBound shewchuk_bound_from(const SimplicialMesh<Dim>& mesh, const std::vector<Mat<Dim>>& d_k,
                                  const Eigen::VectorXd& lumped_all, const PatchIndex& patches,
                                  ShewchukVertices which = ShewchukVertices::All) {
  if constexpr (Dim == 1) {
    throw UnsupportedError("the Shewchuk bound requires d >= 2");
  } else {
    ShewchukBound b;
    b.p_max = patches.p_max;
    for (index_t k = 0; k < mesh.num_elements(); ++k) {
      const Mat<Dim>& dk = d_k[static_cast<std::size_t>(k)];
      const Mat<Dim> dinv = dk.inverse();
      const double vol = mesh.volume(k);
      const double vol_d = vol / std::sqrt(dk.determinant());
      const auto& s = mesh.element(k);
      double sum = 0;
      for (int i = 0; i <= Dim; ++i) {
        const index_t v = s[static_cast<std::size_t>(i)];
        if (which == ShewchukVertices::FreeOnly && !is_free(mesh.marker(v))) continue;
        const double f = face_volume(mesh, k, i, dinv);
        sum += vol / lumped_all(v) * f * f / (vol_d * vol_d);
      }
      const double sk = sum / (Dim * Dim);
      if (sk > b.max_s) {
        b.max_s = sk;
        b.argmax_element = k;
      }
    }
    b.lower = b.max_s / Dim;
    b.upper = static_cast<double>(b.p_max) * b.max_s;
    return b;
  }
}

/// tau_max / s^2 = 2 / lambda
inline double tau_max_over_s2(double lambda) {
  if (!(lambda > 0)) throw ValidationError("eigenvalue must be positive");
  return 2.0 / lambda;
}

/// tau_h / s^2 = (2 / C*) min_i M~_ii / A_ii
inline double tau_h_over_s2(double cstar, double min_ratio) { return 2.0 / cstar * min_ratio; }

struct TauValues {
  double tau_max_over_s2 = 0;
  double tau_h_over_s2 = 0;
  double tau_max(int s) const { return tau_max_over_s2 * s * s; }
  double tau_h(int s) const { return tau_h_over_s2 * s * s; }
};

inline TauValues tau_values(double lambda, double cstar, double min_ratio) {
  return {tau_max_over_s2(lambda), tau_h_over_s2(cstar, min_ratio)};
}

struct AnalysisOptions {
  bool lumped = false;
  ExactOptions exact{};
  std::optional<EigMethod> estimator;  ///< Lanczos or Power estimate in addition to the exact value
  LanczosOptions lanczos{5, 1, 1.1, 0.0, false};
  PowerOptions power{};
  bool geometric = true;
  bool zhu_du = true;
  bool shewchuk = true;
  NeighborKind zhu_du_neighbors = NeighborKind::Face;
  ShewchukVertices shewchuk_vertices = ShewchukVertices::All;
};

struct StabilityReport {
  int dim = 0;
  index_t num_elements = 0;
  index_t num_free = 0;
  bool lumped = false;
  bool nonobtuse = false;
  double c_star = 0;
  double c_sharp = 0;

  double lambda_exact = 0;
  std::string exact_method;
  double lambda_diag_lower = 0, lambda_diag_upper = 0;
  double lambda_geo = kNaN;
  double lambda_geo_q_form = kNaN;
  double lambda_zhudu_lower = kNaN, lambda_zhudu_upper = kNaN, zhudu_c1 = kNaN;
  double lambda_shewchuk_lower = kNaN, lambda_shewchuk_upper = kNaN;
  index_t p_max = 0;
  double lambda_muniform = kNaN, muniform_max_norm = kNaN, muniform_max_q_m = kNaN;

  double lambda_estimate = kNaN;  ///< Lanczos/power estimate incl. security factor
  std::string estimate_method;
  index_t estimate_steps = 0;
  Eigen::VectorXd estimate_vector;

  double tau_max_over_s2 = 0;
  double tau_h_over_s2 = 0;  ///< from the diagonal ratio
  double tau_h_geo = kNaN, tau_h_zhudu = kNaN, tau_h_shewchuk = kNaN, tau_h_estimate = kNaN, tau_h_muniform = kNaN;
  index_t argmin_node = -1;

  double ratio() const { return tau_max_over_s2 / tau_h_over_s2; }
};

/// Runs every requested bound on one (mesh, field, lumping) combination.
/// `metric_k`, when given, adds the metric-uniform bound.
template <int Dim>
StabilityReport analyze_stability(const Discretization<Dim>& disc, const AnalysisOptions& opt,
                                  const std::vector<Mat<Dim>>* metric_k = nullptr) {
  const auto& mesh = *disc.mesh;
  const SparseSymMatrix& mt = disc.mass_matrix(opt.lumped);
  const SparseSymMatrix& a = disc.stiffness;
  StabilityReport r;
  r.dim = Dim;
  r.num_elements = mesh.num_elements();
  r.num_free = disc.dofs.size();
  r.lumped = opt.lumped;
  r.nonobtuse = is_nonobtuse(a);
  r.c_star = c_star(Dim, opt.lumped, r.nonobtuse);
  r.c_sharp = c_sharp(Dim);
  r.p_max = disc.patches.p_max;

  const EigEstimate exact = lambda_max_exact(mt, a, opt.exact);
  r.lambda_exact = exact.value;
  r.exact_method = to_string(exact.method);
  r.tau_max_over_s2 = tau_max_over_s2(r.lambda_exact);

  const DiagRatio dr = diag_ratio_bound(mt, a, r.c_star);
  r.lambda_diag_lower = dr.lower;
  r.lambda_diag_upper = dr.upper;
  r.tau_h_over_s2 = tau_h_over_s2(r.c_star, dr.min_ratio);
  r.argmin_node = disc.dofs.node(dr.argmin_dof);

  if (opt.geometric) {
    const auto g = geometric_bound_from(mesh, disc.d_k, disc.patches, r.c_star);
    r.lambda_geo = g.value;
    r.lambda_geo_q_form = g.value_q_form;
    r.tau_h_geo = 2.0 / g.value;
  }
  if constexpr (Dim >= 2) {
    if (opt.zhu_du) {
      const auto z = zhu_du_bound_from(mesh, disc.d_k, disc.patches, opt.zhu_du_neighbors);
      r.lambda_zhudu_lower = z.lower;
      r.lambda_zhudu_upper = z.upper;
      r.zhudu_c1 = z.c1;
      r.tau_h_zhudu = 2.0 / z.upper;
    }
    if (opt.shewchuk) {
      const auto s = shewchuk_bound_from(mesh, disc.d_k, disc.lumped_all, disc.patches, opt.shewchuk_vertices);
      r.lambda_shewchuk_lower = s.lower;
      r.lambda_shewchuk_upper = s.upper;
      r.tau_h_shewchuk = 2.0 / s.upper;
    }
  }
  if (metric_k) {
    const auto m = muniform_bound_from(mesh, *metric_k, disc.d_k, disc.patches, r.c_star);
    r.lambda_muniform = m.value;
    r.muniform_max_norm = m.max_norm_md;
    r.muniform_max_q_m = m.max_q_m;
    r.tau_h_muniform = 2.0 / m.value;
  }
  if (opt.estimator) {
    const MassSolver solver(mt);
    EigEstimate e = *opt.estimator == EigMethod::Power ? lambda_max_power(mt, a, solver, opt.power)
                                                       : lambda_max_lanczos(mt, a, solver, opt.lanczos);
    r.lambda_estimate = e.value;
    r.estimate_method = to_string(e.method);
    r.estimate_steps = e.steps;
    r.estimate_vector = std::move(e.vector);
    r.tau_h_estimate = 2.0 / e.value;
  }
  return r;
}

}  // namespace stepbound
