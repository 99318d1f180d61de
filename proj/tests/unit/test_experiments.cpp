#include "stepbound/experiments.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace stepbound;

namespace {

ExperimentSpec spec_of(const std::string& text) {
  std::istringstream in(text);
  auto specs = parse_experiments(in);
  EXPECT_EQ(specs.size(), 1u);
  return specs.front();
}

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_rows_csv(out, r.rows);
  return out.str();
}

const TableRow& find_row(const std::vector<TableRow>& rows, const std::string& id, bool lumped) {
  for (const auto& r : rows) {
    if (r.mesh_id == id && r.lumped == lumped) return r;
  }
  throw std::runtime_error("missing row " + id);
}

}  // namespace

TEST(ParseExperiments, SectionsAndKeys) {
  std::istringstream in(R"(# comment line
[per1d]
sizes = 64, 128   # trailing comment
meshes = uniform, duniform
eps = 0.0625
lumping = lumped
bounds = geo

[zd]
type = zd2d
grids = 32x32, 4x16@1,1.85
diagonal = alternating

[aniso2d]
holes = 1, 2
aligned = 0.005x40x6@0.5;0.5
kappa = 1000
quad_order = 2
seed = 7
)");
  const auto specs = parse_experiments(in);
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_EQ(specs[0].type, "per1d");
  EXPECT_EQ(specs[0].sizes, (std::vector<index_t>{64, 128}));
  EXPECT_EQ(specs[0].lumping, Lumping::Lumped);
  EXPECT_EQ(specs[0].bounds, (std::set<std::string>{"diag", "geo"}));
  EXPECT_EQ(specs[1].label, "zd");
  EXPECT_EQ(specs[1].type, "zd2d");
  ASSERT_EQ(specs[1].grids.size(), 2u);
  EXPECT_EQ(specs[1].grids[1].ny, 16);
  EXPECT_DOUBLE_EQ(specs[1].grids[1].ratio_y, 1.85);
  EXPECT_EQ(specs[1].grids[1].id(), "4x16@1:1.85");
  EXPECT_EQ(specs[1].diagonal, Diagonal::Alternating);
  EXPECT_EQ(specs[2].hole_levels, (std::vector<index_t>{1, 2}));
  ASSERT_EQ(specs[2].aligned.size(), 1u);
  EXPECT_EQ(specs[2].aligned[0].n_across, 40);
  EXPECT_EQ(specs[2].quad_order, 2);
  EXPECT_EQ(specs[2].seed, 7u);
}

TEST(ParseExperiments, Errors) {
  auto parse = [](const std::string& t) {
    std::istringstream in(t);
    return parse_experiments(in);
  };
  EXPECT_THROW(parse("sizes = 4\n"), ParseError);
  EXPECT_THROW(parse("[per1d]\nsizes = 2\n"), ValidationError);
  EXPECT_THROW(parse("[per1d]\nsizes = 6.5\n"), ParseError);
  EXPECT_THROW(parse("[per1d]\ncolour = red\n"), ParseError);
  EXPECT_THROW(parse("[mystery]\n"), ValidationError);
  EXPECT_THROW(parse("[per1d]\nbounds = magic\n"), ValidationError);
  EXPECT_THROW(parse("[per1d]\nquad_order = 3\n"), ValidationError);
  EXPECT_THROW(parse("[per1d]\nlumping = sometimes\n"), ParseError);
  EXPECT_THROW(parse("[zd2d]\ngrids = 32\n"), ParseError);
  try {
    parse("[per1d]\n\nsizes = x\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(RunExperiment, Per1dUniformRatios) {
  auto s = spec_of("[per1d]\nsizes = 64, 128, 256\nmeshes = uniform, duniform\n");
  const auto r = run_experiment(s);
  EXPECT_TRUE(r.violations.empty());
  ASSERT_EQ(r.rows.size(), 12u);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.ratio("diag"), 1.0) << row.mesh_id;
    EXPECT_LE(row.ratio("diag"), 1.45) << row.mesh_id;
    EXPECT_LE(row.ratio("diag"), row.c_star * (1 + 1e-9));
  }
  const auto c = compare_lumping(r.rows);
  for (const auto& e : c.per_mesh) {
    if (e.mesh_id == "uniform-256") {
      EXPECT_GE(e.ratio, 2.5);
      EXPECT_LE(e.ratio, 3.5);
    }
  }
  for (index_t n : {64, 128, 256}) {
    for (bool lumped : {false, true}) {
      const auto& u = find_row(r.rows, "uniform-" + std::to_string(n), lumped);
      const auto& d = find_row(r.rows, "duniform-" + std::to_string(n), lumped);
      EXPECT_GE(d.tau_max, u.tau_max) << n << ' ' << lumped;
    }
  }
}

TEST(RunExperiment, Nonper1dDUniformBeatsUniform) {
  const auto r = run_experiment(spec_of("[nonper1d]\nsizes = 64, 128\nmeshes = uniform, duniform, metric_uniform\n"));
  EXPECT_TRUE(r.violations.empty());
  for (index_t n : {64, 128}) {
    for (bool lumped : {false, true}) {
      const double u = find_row(r.rows, "uniform-" + std::to_string(n), lumped).tau_max;
      EXPECT_GE(find_row(r.rows, "duniform-" + std::to_string(n), lumped).tau_max, u);
      EXPECT_GE(find_row(r.rows, "metric_uniform-" + std::to_string(n), lumped).tau_max, u);
    }
  }
}

TEST(RunExperiment, Zd2dRowsAndMethods) {
  const auto r = run_experiment(
      spec_of("[zd2d]\ngrids = 8x8, 4x16@1,1.85\nbounds = geo, zhudu, shewchuk, lanczos\n"));
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_TRUE(r.violations.empty());
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.dim, 2);
    EXPECT_EQ(row.tau_h.size(), 5u);
    for (const auto& m : {"geo", "zhudu"}) EXPECT_GE(row.ratio(m), 1.0 - 1e-9) << m << ' ' << row.mesh_id;
    if (row.lumped) {
      EXPECT_GE(row.ratio("shewchuk"), 1.0 - 1e-9);
    }
  }
  EXPECT_EQ(r.rows[0].mesh_id, "8x8-right");
  EXPECT_EQ(r.rows[0].num_elements, 128);
  EXPECT_EQ(r.rows[2].mesh_id, "4x16@1:1.85-right");
}

TEST(RunExperiment, GroundwaterAndAniso) {
  const auto g = run_experiment(spec_of("[groundwater_like]\nh = 20\nlumping = full\n"));
  ASSERT_EQ(g.rows.size(), 1u);
  EXPECT_FALSE(g.rows[0].lumped);
  EXPECT_TRUE(g.violations.empty());
  const auto a = run_experiment(spec_of("[aniso2d]\nholes = 1\naligned = 0.01x12x4@0.5;0.5\nlumping = lumped\n"));
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_EQ(a.rows[0].mesh_id, "quasi-9");
  EXPECT_EQ(a.rows[1].mesh_id, "aligned-0.01x12x4@0.5;0.5");
  EXPECT_TRUE(a.violations.empty());
}

TEST(RunExperiment, MissingMeshFileGivesWarningRow) {
  auto s = spec_of("[zd2d]\ngrids = 4x4\n");
  s.mesh_files = {"/nonexistent/mesh.txt"};
  const auto r = run_experiment(s);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows.back().mesh_id, "/nonexistent/mesh.txt");
  EXPECT_FALSE(r.rows.back().warning.empty());
  EXPECT_NO_THROW(compare_lumping(r.rows));
  EXPECT_NE(csv_of(r).find("mesh file not found"), std::string::npos);
}

TEST(RunExperiment, LoadsMeshFiles) {
  const auto path = (std::filesystem::temp_directory_path() / "stepbound_exp_mesh.txt").string();
  save_mesh(path, gen_structured_2d(5, 5));
  auto s = spec_of("[zd2d]\n");
  s.mesh_files = {path};
  const auto r = run_experiment(s);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.rows[0].warning.empty());
  EXPECT_EQ(r.rows[0].num_elements, 50);
  std::filesystem::remove(path);
}

TEST(RunExperiment, DeterministicCsv) {
  const auto s = spec_of("[zd2d]\ngrids = 6x6, 4x12@1.2,1.5\nbounds = geo, zhudu, shewchuk, lanczos\nseed = 3\n");
  EXPECT_EQ(csv_of(run_experiment(s)), csv_of(run_experiment(s)));
}

TEST(RunExperiment, ViolationsAreReported) {
  // A row outside [1, C*] can only come from a broken pencil; the check
  // itself is exercised through the public row fields.
  const auto r = run_experiment(spec_of("[per1d]\nsizes = 16\nmeshes = uniform\n"));
  EXPECT_TRUE(r.violations.empty());
  for (const auto& row : r.rows) {
    EXPECT_GE(row.ratio("diag"), 1.0 - 1e-9);
    EXPECT_LE(row.ratio("diag"), row.c_star * (1 + 1e-9));
  }
  const auto j = summary_json({r});
  EXPECT_TRUE(j[0]["violations"].empty());
  EXPECT_TRUE(j[0].contains("lumping_ratio_min"));
}

TEST(CompareLumping, OneFreeNodeIsTheMassRatio) {
  const auto mesh = gen_uniform_1d(2);
  const auto disc = discretize(mesh, TensorField<1>::identity());
  ASSERT_EQ(disc.dofs.size(), 1);
  std::vector<TableRow> rows;
  for (bool lumped : {false, true}) {
    TableRow row;
    row.experiment = "single";
    row.mesh_id = "uniform-2";
    row.lumped = lumped;
    row.tau_max = tau_max_over_s2(lambda_max_dense(disc.mass_matrix(lumped), disc.stiffness).value);
    rows.push_back(row);
  }
  const auto c = compare_lumping(rows);
  ASSERT_EQ(c.per_mesh.size(), 1u);
  EXPECT_DOUBLE_EQ(c.per_mesh[0].ratio, disc.lumped.diag()(0) / disc.mass.diag()(0));
  EXPECT_DOUBLE_EQ(c.min, c.max);
}

TEST(CompareLumping, Errors) {
  std::vector<TableRow> rows(1);
  rows[0].experiment = "x";
  rows[0].mesh_id = "m";
  rows[0].tau_max = 1;
  EXPECT_THROW(compare_lumping(rows), ValidationError);
  EXPECT_THROW(compare_lumping({}), ValidationError);
}

TEST(RowsCsv, HeaderAndEmptyCells) {
  TableRow row;
  row.experiment = "e";
  row.mesh_id = "m";
  row.dim = 1;
  row.tau_max = 2;
  row.tau_h["diag"] = 1;
  std::ostringstream out;
  write_rows_csv(out, {row});
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header.substr(0, 22), "experiment,mesh,dim,N,");
  EXPECT_NE(line.find(",1,2,"), std::string::npos);  // tau_h_diag, ratio_diag
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(line.begin(), line.end(), ','));
}
