#include "common/suite.hpp"
#include "stepbound/bounds.hpp"
#include "stepbound/report_io.hpp"
#include "stepbound/spectral.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace stepbound;

namespace {

// Largest eigenvalue of the nonsymmetric product M^{-1} A, computed without
// any symmetric reduction.
double brute_force_lambda(const SparseSymMatrix& m, const SparseSymMatrix& a) {
  const Eigen::MatrixXd p = m.to_dense().inverse() * a.to_dense();
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(p, false).eigenvalues();
  double best = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) best = std::max(best, ev(i).real());
  return best;
}

SparseSymMatrix diag_matrix(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return SparseSymMatrix::diagonal(v);
}

SparseSymMatrix spectrum_1_to_100() {
  Eigen::VectorXd v(100);
  for (int i = 0; i < 100; ++i) v(i) = i + 1;
  return SparseSymMatrix::diagonal(v);
}

struct Case1d {
  SimplicialMesh<1> mesh = gen_uniform_1d(4);
  Discretization<1> disc = discretize(mesh, TensorField<1>::identity());
};

template <int Dim>
void check_bracket(const SimplicialMesh<Dim>& mesh, const TensorField<Dim>& field, const std::string& name) {
  const auto disc = discretize(mesh, field);
  for (bool lumped : {false, true}) {
    AnalysisOptions opt;
    opt.lumped = lumped;
    opt.zhu_du = opt.shewchuk = Dim >= 2;
    const auto r = analyze_stability(disc, opt);
    const std::string tag = name + (lumped ? "/lumped" : "/full");
    EXPECT_LE(r.lambda_diag_lower, r.lambda_exact * (1 + 1e-10)) << tag;
    EXPECT_LE(r.lambda_exact, r.lambda_diag_upper * (1 + 1e-10)) << tag;
    EXPECT_NEAR(r.lambda_diag_upper / r.lambda_diag_lower, r.c_star, 1e-12 * r.c_star) << tag;
    EXPECT_LE(r.lambda_exact, r.lambda_geo * (1 + 1e-10)) << tag;
    EXPECT_NEAR(r.lambda_geo, r.lambda_geo_q_form, 1e-10 * r.lambda_geo) << tag;
    EXPECT_GE(r.ratio(), 1 - 1e-9) << tag;
    EXPECT_LE(r.ratio(), r.c_star * (1 + 1e-9)) << tag;
    EXPECT_NEAR(r.tau_max_over_s2, 2 / r.lambda_exact, 1e-15 * r.tau_max_over_s2) << tag;
    if (r.nonobtuse && lumped) {
      const Eigen::VectorXd a = diag_of(disc.stiffness), l = diag_of(disc.lumped);
      EXPECT_LE(r.lambda_exact, 2 * (a.array() / l.array()).maxCoeff() * (1 + 1e-10)) << tag;
    }
    if constexpr (Dim >= 2) {
      EXPECT_LE(r.lambda_exact, r.lambda_zhudu_upper * (1 + 1e-10)) << tag;
      if (lumped) {
        EXPECT_LE(r.lambda_exact, r.lambda_shewchuk_upper * (1 + 1e-10)) << tag;
      }
    }
  }
}

}  // namespace

TEST(LambdaMaxExact, Uniform1dLumpedClosedForm) {
  Case1d c;
  const auto e = lambda_max_exact(c.disc.lumped, c.disc.stiffness);
  EXPECT_NEAR(e.value, 16 * (2 + std::sqrt(2.0)), 1e-10);
  EXPECT_EQ(e.method, EigMethod::Dense);
}

TEST(LambdaMaxExact, SelfPencil) {
  const auto mesh = gen_structured_2d(5, 5);
  const auto a = assemble_stiffness(mesh, fields::aniso2d(1000));
  EXPECT_NEAR(lambda_max_exact(a, a).value, 1.0, 1e-12);
}

TEST(LambdaMaxExact, MatchesBruteForce) {
  for (const auto& c : suite::meshes_2d()) {
    const auto disc = discretize(c.mesh, fields::aniso2d(1000));
    if (disc.dofs.size() > 500) continue;
    for (bool lumped : {false, true}) {
      const auto& m = disc.mass_matrix(lumped);
      const double want = brute_force_lambda(m, disc.stiffness);
      EXPECT_NEAR(lambda_max_dense(m, disc.stiffness).value, want, 1e-9 * want) << c.name;
    }
  }
}

TEST(LambdaMaxExact, LanczosPathAgreesWithDense) {
  const auto mesh = gen_structured_2d(12, 12, {}, Diagonal::Alternating);
  const auto disc = discretize(mesh, fields::aniso2d(1000));
  ExactOptions opt;
  opt.dense_limit = 10;
  const auto lz = lambda_max_exact(disc.mass, disc.stiffness, opt);
  const auto dense = lambda_max_exact(disc.mass, disc.stiffness);
  EXPECT_EQ(lz.method, EigMethod::Lanczos);
  EXPECT_NEAR(lz.value, dense.value, 1e-9 * dense.value);
}

TEST(LambdaMaxExact, RejectsIndefiniteMass) {
  const auto m = diag_matrix({1.0, -1.0});
  const auto a = diag_matrix({1.0, 1.0});
  EXPECT_THROW(lambda_max_dense(m, a), Error);
}

TEST(Lanczos, FiveStepsOnKnownSpectrum) {
  const auto m = SparseSymMatrix::diagonal(Eigen::VectorXd::Ones(100));
  const auto a = spectrum_1_to_100();
  const auto e = lambda_max_lanczos(m, a, 5, 1, 1.0);
  // Rayleigh-Ritz on an explicitly orthonormalized Krylov basis from the same start
  const Eigen::MatrixXd ad = a.to_dense();
  Eigen::MatrixXd k(100, 5);
  k.col(0) = detail::random_normal(100, 1);
  for (int j = 1; j < 5; ++j) k.col(j) = ad * k.col(j - 1) / (ad * k.col(j - 1)).norm();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(k).householderQ() * Eigen::MatrixXd::Identity(100, 5);
  const Eigen::MatrixXd t = q.transpose() * ad * q;
  const double ritz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t).eigenvalues()(4);
  EXPECT_NEAR(e.value, ritz, 1e-9 * ritz);
  EXPECT_LE(e.value, 100.0 + 1e-9);
  EXPECT_EQ(e.steps, 5);
}

TEST(Lanczos, FullKrylovSpaceIsExact) {
  const auto mesh = gen_uniform_1d(30);
  const auto disc = discretize(mesh, fields::per1d(1.0 / 16));
  for (bool lumped : {false, true}) {
    const auto& m = disc.mass_matrix(lumped);
    const double exact = lambda_max_dense(m, disc.stiffness).value;
    const auto e = lambda_max_lanczos(m, disc.stiffness, 29, 3, 1.0);
    EXPECT_NEAR(e.value, exact, 1e-9 * exact);
    EXPECT_NEAR(lambda_max_lanczos(m, disc.stiffness, 100, 3, 1.0).value, exact, 1e-9 * exact);
  }
}

TEST(Lanczos, RitzValuesIncreaseWithSteps) {
  const auto mesh = gen_groundwater_like(10.0);
  const auto disc = discretize(mesh, groundwater_field());
  for (bool lumped : {false, true}) {
    const auto& m = disc.mass_matrix(lumped);
    const double exact = lambda_max_dense(m, disc.stiffness).value;
    double prev = 0;
    for (index_t k = 1; k <= 12; ++k) {
      const double v = lambda_max_lanczos(m, disc.stiffness, k, 5, 1.0).value;
      EXPECT_GE(v, prev * (1 - 1e-12));
      EXPECT_LE(v, exact + 1e-9 * exact);
      prev = v;
    }
  }
}

TEST(Lanczos, SecurityFactorAndDeterminism) {
  const auto mesh = gen_structured_2d(10, 10);
  const auto disc = discretize(mesh, TensorField<2>::identity());
  const auto a = lambda_max_lanczos(disc.mass, disc.stiffness, 5, 9, 1.1);
  const auto b = lambda_max_lanczos(disc.mass, disc.stiffness, 5, 9, 1.1);
  EXPECT_EQ(a.value, b.value);
  EXPECT_DOUBLE_EQ(a.value, 1.1 * a.ritz);
  EXPECT_THROW(lambda_max_lanczos(disc.mass, disc.stiffness, 0, 1, 1.0), ValidationError);
}

TEST(Lanczos, InvariantSubspaceIsExact) {
  // A 1x1 pencil exhausts the Krylov space after one step.
  const auto e = lambda_max_lanczos(diag_matrix({2.0}), diag_matrix({6.0}), 5, 1, 1.0);
  EXPECT_NEAR(e.value, 3.0, 1e-15);
}

TEST(Power, WarmStartConvergesImmediately) {
  const auto mesh = gen_uniform_1d(64);
  const auto disc = discretize(mesh, fields::per1d(1.0 / 16));
  const auto dense = lambda_max_dense(disc.lumped, disc.stiffness, true);
  PowerOptions opt;
  opt.warm_start = dense.vector;
  const MassSolver solver(disc.lumped);
  const auto e = lambda_max_power(disc.lumped, disc.stiffness, solver, opt);
  EXPECT_EQ(e.steps, 1);
  EXPECT_NEAR(e.value, dense.value, 1e-10 * dense.value);
}

TEST(Power, RandomStartMatchesDense) {
  const auto mesh = gen_uniform_1d(64);
  const auto disc = discretize(mesh, TensorField<1>::identity());
  const MassSolver solver(disc.lumped);
  const double exact = lambda_max_dense(disc.lumped, disc.stiffness).value;
  // With tol = 1e-8 on successive Rayleigh quotients the remaining error is
  // bounded by tol / (1 - r^2), r the ratio of the two largest eigenvalues.
  const double r = std::pow(std::sin(62 * std::numbers::pi / 128) / std::sin(63 * std::numbers::pi / 128), 2);
  PowerOptions opt;
  opt.tol = 1e-8;
  const auto e = lambda_max_power(disc.lumped, disc.stiffness, solver, opt);
  EXPECT_LE(e.value, exact * (1 + 1e-12));
  EXPECT_LE((exact - e.value) / exact, 1e-8 / (1 - r * r));
  opt.tol = 1e-14;
  const auto tight = lambda_max_power(disc.lumped, disc.stiffness, solver, opt);
  EXPECT_NEAR(tight.value, exact, 1e-8 * exact);
}

TEST(Power, StartOrthogonalToDominantMode) {
  const auto m = SparseSymMatrix::diagonal(Eigen::VectorXd::Ones(3));
  const auto a = diag_matrix({1.0, 2.0, 5.0});
  PowerOptions opt;
  opt.warm_start = Eigen::Vector3d(1.0, 1.0, 0.0);
  opt.max_iterations = 200;
  const MassSolver solver(m);
  // exact arithmetic keeps the iterate in span(e1, e2): converges to the
  // second eigenvalue, which the Rayleigh quotient never exceeds
  const auto e = lambda_max_power(m, a, solver, opt);
  EXPECT_NEAR(e.value, 2.0, 1e-6);
  opt.warm_start.reset();
  opt.tol = 1e-300;
  opt.max_iterations = 5;
  EXPECT_THROW(lambda_max_power(m, a, solver, opt), NumericalError);
}

TEST(MassSolver, FullAndLumped) {
  const auto mesh = gen_structured_2d(6, 6);
  const auto disc = discretize(mesh, TensorField<2>::identity());
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(disc.dofs.size(), 1, 2);
  for (bool lumped : {false, true}) {
    const auto& m = disc.mass_matrix(lumped);
    const MassSolver s(m);
    EXPECT_LT((m * s.solve(b) - b).norm(), 1e-12 * b.norm());
  }
}

TEST(CStar, Table) {
  EXPECT_EQ(c_star(2, false, false), 6);
  EXPECT_EQ(c_star(2, true, true), 2);
  EXPECT_EQ(c_star(1, true, false), 2);
  EXPECT_EQ(c_star(1, false, false), 4);
  EXPECT_EQ(c_star(3, false, false), 8);
  EXPECT_EQ(c_star(3, true, false), 4);
  EXPECT_EQ(c_star(3, false, true), 4);
  EXPECT_NEAR(c_sharp(1), 3.0, 1e-15);
  EXPECT_NEAR(c_sharp(2), 2 * std::sqrt(3.0), 1e-14);
}

TEST(DiagRatio, Uniform1dLumped) {
  Case1d c;
  const auto r = diag_ratio_bound(c.disc.lumped, c.disc.stiffness, c_star(1, true, true));
  EXPECT_NEAR(r.lower, 32.0, 1e-12);
  EXPECT_NEAR(r.upper, 64.0, 1e-12);
  const double exact = lambda_max_dense(c.disc.lumped, c.disc.stiffness).value;
  EXPECT_NEAR(exact, 54.627, 1e-3);
  EXPECT_LE(r.lower, exact);
  EXPECT_LE(exact, r.upper);
}

TEST(DiagRatio, SelfPencil) {
  const auto a = assemble_stiffness(gen_uniform_1d(9), TensorField<1>::identity());
  const auto r = diag_ratio_bound(a, a, 4);
  EXPECT_DOUBLE_EQ(r.lower, 1.0);
  EXPECT_LE(r.lower, lambda_max_dense(a, a).value + 1e-12);
}

TEST(DiagRatio, ZeroDiagonalRejected) {
  EXPECT_THROW(diag_ratio_bound(diag_matrix({1.0, 0.0}), diag_matrix({1.0, 1.0}), 2), Error);
}

TEST(Bracket, HoldsOnSuite) {
  for (const auto& c : suite::meshes_1d())
    for (const auto& f : suite::fields_1d()) check_bracket(c.mesh, f.field, c.name + "/" + f.name);
  for (const auto& c : suite::meshes_2d())
    for (const auto& f : suite::fields_2d()) check_bracket(c.mesh, f.field, c.name + "/" + f.name);
  for (const auto& c : suite::meshes_3d())
    for (const auto& f : suite::fields_3d()) check_bracket(c.mesh, f.field, c.name + "/" + f.name);
}

TEST(GeometricBound, Uniform1d) {
  Case1d c;
  const auto g = geometric_bound(c.mesh, TensorField<1>::identity(), c_star(1, true, true));
  EXPECT_NEAR(g.value, 96.0, 1e-10);
  EXPECT_NEAR(g.value_q_form, 96.0, 1e-10);
  EXPECT_GE(g.value, 16 * (2 + std::sqrt(2.0)));
}

TEST(GeometricBound, ReferenceTriangleFormsCoincide) {
  using R = ReferenceSimplex<2>;
  const SimplicialMesh<2> m({R::vertex(0), R::vertex(1), R::vertex(2)}, {{0, 1, 2}},
                            {NodeMarker::Dirichlet, NodeMarker::Interior, NodeMarker::Interior});
  for (const auto& f : suite::fields_2d()) {
    const auto g = geometric_bound(m, f.field, 6);
    EXPECT_NEAR(g.value, g.value_q_form, 1e-12 * g.value);
  }
}

TEST(MUniformBound, InverseDiffusionMetricIn1d) {
  const auto d = fields::per1d(1.0 / 16);
  const auto metric = TensorField<1>::inverse_of(d);
  const auto mesh = gen_metric_uniform_1d(64, metric);
  const double cs = c_star(1, false, true);
  const auto b = muniform_bound(mesh, metric, d, cs);
  EXPECT_NEAR(b.max_norm_md, 1.0, 1e-14);
  EXPECT_NEAR(b.value, cs * c_sharp(1) / (b.h_metric * b.h_metric), 1e-10 * b.value);
  const auto disc = discretize(mesh, d);
  EXPECT_LE(lambda_max_dense(disc.mass, disc.stiffness).value, b.value);
}

TEST(MUniformBound, IdentityMetricReducesToGeometric) {
  const auto id = TensorField<1>::identity();
  const auto mesh = gen_uniform_1d(16);
  EXPECT_NEAR(muniform_bound(mesh, id, id, 4).value, geometric_bound(mesh, id, 4).value, 1e-10);
  const auto id2 = TensorField<2>::identity();
  const auto sq = gen_structured_2d(8, 8);
  const auto g = geometric_bound(sq, id2, 4);
  const auto u = muniform_bound(sq, id2, id2, 4);
  // right triangles are not equilateral, so the grid is not M-uniform
  EXPECT_GT(u.max_q_m, 1.0);
  const auto disc = discretize(sq, id2);
  EXPECT_LE(lambda_max_dense(disc.mass, disc.stiffness).value, g.value);
}

TEST(MUniformBound, RotatedAnisotropyNormIsOne) {
  const auto d = fields::aniso2d(1000);
  const auto mesh = gen_structured_2d(6, 6);
  const auto b = muniform_bound(mesh, TensorField<2>::inverse_of(d), d, 6);
  EXPECT_NEAR(b.max_norm_md, 1.0, 1e-12);
  const auto dk = element_averages(d, mesh);
  const auto mk = element_averages(TensorField<2>::inverse_of(d), mesh);
  for (std::size_t k = 0; k < dk.size(); ++k) EXPECT_NEAR(spectral_norm<2>(mk[k] * dk[k]), 1.0, 1e-12);
}

TEST(ZhuDu, UnitRightTriangle) {
  const SimplicialMesh<2> m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}},
                            {NodeMarker::Dirichlet, NodeMarker::Interior, NodeMarker::Interior});
  const auto z = zhu_du_bound_from(m, {Mat<2>::Identity()}, build_patches(m));
  EXPECT_NEAR(z.max_z, 12.0, 1e-12);
  EXPECT_NEAR(z.upper, 4 * 12.0, 1e-12);
}

TEST(ZhuDu, EquilateralReference) {
  using R = ReferenceSimplex<2>;
  const SimplicialMesh<2> m({R::vertex(0), R::vertex(1), R::vertex(2)}, {{0, 1, 2}},
                            {NodeMarker::Dirichlet, NodeMarker::Interior, NodeMarker::Interior});
  const double l = R::edge_length();
  // (d+1)/d^2 * 3 l^2 / |K|^2 with |K| = 1
  EXPECT_NEAR(zhu_du_bound_from(m, {Mat<2>::Identity()}, build_patches(m)).max_z, 0.75 * 3 * l * l, 1e-12);
  EXPECT_NEAR(0.75 * 3 * l * l, 3 * std::sqrt(3.0), 1e-12);
}

TEST(ZhuDu, LowerBoundAndNeighbourRatio) {
  const auto mesh = gen_structured_2d(4, 8, Grading::geometric(1.0, 1.5));
  const auto p = build_patches(mesh);
  const std::vector<Mat<2>> dk(static_cast<std::size_t>(mesh.num_elements()), Mat<2>::Identity());
  const auto face = zhu_du_bound_from(mesh, dk, p, NeighborKind::Face);
  const auto vertex = zhu_du_bound_from(mesh, dk, p, NeighborKind::Vertex);
  EXPECT_NEAR(face.c1, 1.5, 1e-12);
  EXPECT_GE(vertex.c1, face.c1);
  EXPECT_NEAR(face.lower, face.max_z / (2 * (1 + face.c1 * face.p_max * 4)), 1e-12 * face.lower);
  const auto disc = discretize(mesh, TensorField<2>::identity());
  const double lam = lambda_max_dense(disc.mass, disc.stiffness).value;
  EXPECT_LE(face.lower, lam);
  EXPECT_LE(lam, face.upper);
}

TEST(ZhuDu, OneDimensionUnsupported) {
  const auto m = gen_uniform_1d(4);
  EXPECT_THROW(zhu_du_bound_from(m, {4, Mat<1>::Identity()}, build_patches(m)), UnsupportedError);
  EXPECT_THROW(shewchuk_bound_from(m, {4, Mat<1>::Identity()}, lumped_mass_all_nodes(m), build_patches(m)),
               UnsupportedError);
}

TEST(Shewchuk, TwoTriangleSquareBracketsDense) {
  const SimplicialMesh<2> m({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}},
                            {NodeMarker::Dirichlet, NodeMarker::Neumann, NodeMarker::Neumann, NodeMarker::Neumann});
  const auto disc = discretize(m, TensorField<2>::identity());
  const double lam = lambda_max_dense(disc.lumped, disc.stiffness).value;
  const auto s = shewchuk_bound_from(m, disc.d_k, disc.lumped_all, disc.patches);
  EXPECT_LE(s.lower, lam);
  EXPECT_LE(lam, s.upper);
  const auto free_only = shewchuk_bound_from(m, disc.d_k, disc.lumped_all, disc.patches, ShewchukVertices::FreeOnly);
  EXPECT_LE(free_only.max_s, s.max_s);
}

TEST(Homogeneity, EveryBoundScalesWithTheField) {
  const auto mesh = gen_structured_2d(6, 9, Grading::geometric(1.2, 1.3), Diagonal::Alternating);
  const auto base = fields::aniso2d(50);
  AnalysisOptions opt;
  opt.lumped = true;
  const auto r1 = analyze_stability(discretize(mesh, base), opt);
  const double c = 8.0;
  const auto r2 = analyze_stability(discretize(mesh, base.scaled(c)), opt);
  auto same = [c](double a, double b) { EXPECT_NEAR(b, c * a, 1e-10 * c * a); };
  same(r1.lambda_exact, r2.lambda_exact);
  same(r1.lambda_diag_lower, r2.lambda_diag_lower);
  same(r1.lambda_diag_upper, r2.lambda_diag_upper);
  same(r1.lambda_geo, r2.lambda_geo);
  same(r1.lambda_zhudu_upper, r2.lambda_zhudu_upper);
  same(r1.lambda_zhudu_lower, r2.lambda_zhudu_lower);
  same(r1.lambda_shewchuk_upper, r2.lambda_shewchuk_upper);
  same(r1.lambda_shewchuk_lower, r2.lambda_shewchuk_lower);
  EXPECT_EQ(r1.argmin_node, r2.argmin_node);
  const auto disc1 = discretize(mesh, base), disc2 = discretize(mesh, base.scaled(c));
  EXPECT_EQ(shewchuk_bound_from(mesh, disc1.d_k, disc1.lumped_all, disc1.patches).argmax_element,
            shewchuk_bound_from(mesh, disc2.d_k, disc2.lumped_all, disc2.patches).argmax_element);
  EXPECT_EQ(zhu_du_bound_from(mesh, disc1.d_k, disc1.patches).argmax_element,
            zhu_du_bound_from(mesh, disc2.d_k, disc2.patches).argmax_element);
}

TEST(TauValues, Examples) {
  EXPECT_DOUBLE_EQ(tau_max_over_s2(2.0), 1.0);
  EXPECT_DOUBLE_EQ(tau_values(2.0, 6, 1).tau_max(1), 1.0);
  Case1d c;
  AnalysisOptions opt;
  opt.lumped = true;
  const auto r = analyze_stability(c.disc, opt);
  EXPECT_NEAR(r.tau_max_over_s2, 2 / 54.627417, 1e-7);
  EXPECT_NEAR(r.tau_h_over_s2, 1.0 / 32, 1e-15);
  EXPECT_NEAR(r.ratio(), 1.1716, 1e-4);
  EXPECT_THROW(tau_max_over_s2(0.0), ValidationError);
}

TEST(StabilityReport, EstimatorsFilled) {
  const auto mesh = gen_groundwater_like(10.0);
  const auto disc = discretize(mesh, groundwater_field());
  AnalysisOptions opt;
  opt.estimator = EigMethod::Lanczos;
  const auto r = analyze_stability(disc, opt);
  EXPECT_EQ(r.estimate_method, "lanczos");
  EXPECT_NEAR(r.lambda_estimate, 1.1 * lambda_max_lanczos(disc.mass, disc.stiffness, 5, 1, 1.0).value,
              1e-12 * r.lambda_estimate);
  opt.estimator = EigMethod::Power;
  const auto p = analyze_stability(disc, opt);
  EXPECT_NEAR(p.lambda_estimate, p.lambda_exact, 1e-5 * p.lambda_exact);
}

TEST(StabilityReport, JsonAndCsvCarryIdenticalNumbers) {
  const auto mesh = gen_structured_2d(6, 6);
  const auto disc = discretize(mesh, fields::aniso2d(1000));
  AnalysisOptions opt;
  opt.estimator = EigMethod::Lanczos;
  const auto r = analyze_stability(disc, opt);
  const auto j = to_json(r);
  std::istringstream header(report_csv_header()), row(report_csv_row(r));
  std::string key, value;
  while (std::getline(header, key, ',')) {
    ASSERT_TRUE(static_cast<bool>(std::getline(row, value, ','))) << key;
    ASSERT_TRUE(j.contains(key)) << key;
    if (j[key].is_null()) {
      EXPECT_TRUE(value.empty()) << key;
    } else if (j[key].is_boolean()) {
      EXPECT_EQ(value, j[key].get<bool>() ? "1" : "0") << key;
    } else {
      EXPECT_EQ(std::stod(value), j[key].get<double>()) << key;
    }
  }
}
