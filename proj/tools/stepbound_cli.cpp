#include "stepbound/bounds.hpp"
#include "stepbound/chebyshev.hpp"
#include "stepbound/experiments.hpp"
#include "stepbound/generators.hpp"
#include "stepbound/mesh_io.hpp"
#include "stepbound/metric_quality.hpp"
#include "stepbound/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace stepbound;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCertificate = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeshSource {
  std::string file;
  index_t uniform1d = 0;
  index_t equi1d = 0;
  index_t metric1d = 0;
  std::string grid;
  std::string grading;
  std::string diag = "right";
  index_t hole = 0;
  double groundwater = 0;
  double beta = 1.5;
  std::string aligned;

  void add_to(CLI::App& app) {
    app.add_option("--mesh", file, "mesh file");
    app.add_option("--uniform1d", uniform1d, "uniform 1D mesh with N elements")->check(CLI::PositiveNumber);
    app.add_option("--equi1d", equi1d, "1D mesh equidistributing D^{-1/2} of --field")->check(CLI::PositiveNumber);
    app.add_option("--metric1d", metric1d, "1D mesh uniform in the metric D^{-1} of --field")
        ->check(CLI::PositiveNumber);
    app.add_option("--grid", grid, "structured unit-square grid NXxNY");
    app.add_option("--grading", grading, "geometric grading ratios rx,ry for --grid");
    app.add_option("--diag", diag, "diagonal pattern: right, left, alternating");
    app.add_option("--hole", hole, "quasi-uniform square with a hole at refinement level K")
        ->check(CLI::PositiveNumber);
    app.add_option("--groundwater", groundwater, "groundwater-like aquifer mesh with size H");
    app.add_option("--beta", beta, "stretching exponent for --groundwater");
    app.add_option("--aligned", aligned, "diffusion-aligned strip WIDTHxNACROSSxNALONG[@cx;cy]");
  }

  int count() const {
    return !file.empty() + (uniform1d > 0) + (equi1d > 0) + (metric1d > 0) + !grid.empty() + (hole > 0) +
           (groundwater > 0) + !aligned.empty();
  }
};

struct Common {
  std::string field = "identity";
  int quad = 4;
};

TensorField<1> field_1d(const std::string& text) { return parse_field<1>(text); }

template <int Dim>
TensorField<Dim> make_field(const std::string& text) {
  if constexpr (Dim == 2) {
    if (text.rfind("groundwater", 0) == 0) return groundwater_field(parse_field_spec(text).number("ratio", 1e-6));
  }
  return parse_field<Dim>(text);
}

std::pair<index_t, index_t> parse_grid(const std::string& g) {
  const auto x = g.find('x');
  if (x == std::string::npos) throw ValidationError("grid '" + g + "' must look like NXxNY");
  return {detail::to_count(g.substr(0, x), 0), detail::to_count(g.substr(x + 1), 0)};
}

AnyMesh build_mesh(const MeshSource& src, const Common& c) {
  if (src.count() != 1) throw UsageError("exactly one mesh source option is required");
  if (!src.file.empty()) return load_mesh(src.file);
  if (src.uniform1d > 0) return gen_uniform_1d(src.uniform1d);
  if (src.equi1d > 0) {
    const auto d = field_1d(c.field);
    return gen_equidistributed_1d(src.equi1d, [&d](double x) {
      Vec<1> p;
      p(0) = x;
      return 1.0 / std::sqrt(d.eval(p)(0, 0));
    });
  }
  if (src.metric1d > 0) return gen_metric_uniform_1d(src.metric1d, TensorField<1>::inverse_of(field_1d(c.field)), c.quad);
  if (!src.grid.empty()) {
    const auto [nx, ny] = parse_grid(src.grid);
    Grading grading;
    if (!src.grading.empty()) {
      const auto parts = detail::split_list(src.grading);
      if (parts.size() != 2) throw ValidationError("--grading needs rx,ry");
      grading = Grading::geometric(detail::to_number(parts[0], 0), detail::to_number(parts[1], 0));
    }
    return gen_structured_2d(nx, ny, grading, parse_diagonal(src.diag));
  }
  if (src.hole > 0) return gen_square_with_hole(src.hole);
  if (src.groundwater > 0) return gen_groundwater_like(src.groundwater, src.beta, parse_diagonal(src.diag));
  const auto a = detail::parse_aligned(src.aligned, 0);
  const auto field = c.field == "identity" ? fields::aniso2d(1000.0) : make_field<2>(c.field);
  return gen_diffusion_aligned_2d(field, Vec<2>(a.cx, a.cy), a.width, a.n_across, a.n_along);
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw ValidationError("cannot write '" + path + "'");
  return file;
}

// gen

int run_gen(const MeshSource& src, const Common& c, const std::string& output) {
  const AnyMesh any = build_mesh(src, c);
  std::visit(
      [&](const auto& mesh) {
        std::ofstream file;
        std::ostream& out = open_output(output, file);
        write_mesh(out, mesh);
        double vmin = std::numeric_limits<double>::infinity(), vmax = 0;
        for (index_t k = 0; k < mesh.num_elements(); ++k) {
          vmin = std::min(vmin, mesh.volume(k));
          vmax = std::max(vmax, mesh.volume(k));
        }
        std::ostream& log = (&out == &std::cout) ? std::cerr : std::cout;
        log << "N=" << mesh.num_elements() << " N_vi=" << mesh.num_free_nodes() << " nodes=" << mesh.num_nodes()
            << " min|K|=" << vmin << " max|K|=" << vmax << '\n';
      },
      any);
  return 0;
}

// analyze

struct AnalyzeConfig {
  bool lumped = false;
  std::vector<std::string> bounds{"geo", "zhudu", "shewchuk"};
  std::string eig = "dense";
  index_t lanczos = 0;
  double security = 1.1;
  std::uint64_t seed = 1;
  double power_tol = 1e-8;
  std::string metric;
  std::string format = "json";
  std::string output;
  double check_estimate = 0;
};

template <int Dim>
int analyze_mesh(const SimplicialMesh<Dim>& mesh, const Common& c, const AnalyzeConfig& cfg) {
  const auto field = make_field<Dim>(c.field);
  const auto disc = discretize(mesh, field, c.quad);
  AnalysisOptions opt;
  opt.lumped = cfg.lumped;
  auto wants = [&](const char* b) { return std::find(cfg.bounds.begin(), cfg.bounds.end(), b) != cfg.bounds.end(); };
  opt.geometric = wants("geo");
  opt.zhu_du = Dim >= 2 && wants("zhudu");
  opt.shewchuk = Dim >= 2 && wants("shewchuk");
  if (cfg.eig == "lanczos" || cfg.lanczos > 0) {
    opt.estimator = EigMethod::Lanczos;
    opt.lanczos.steps = cfg.lanczos > 0 ? cfg.lanczos : 5;
    opt.lanczos.security = cfg.security;
    opt.lanczos.seed = cfg.seed;
  } else if (cfg.eig == "power") {
    opt.estimator = EigMethod::Power;
    opt.power.tol = cfg.power_tol;
    opt.power.seed = cfg.seed;
  }
  const auto metric = cfg.metric.empty() ? TensorField<Dim>::inverse_of(field) : make_field<Dim>(cfg.metric);
  const auto metric_k = element_averages(metric, mesh, c.quad);
  const StabilityReport r = analyze_stability(disc, opt, &metric_k);
  const MeshQualitySummary q = mesh_quality_summary_from(mesh, metric_k);

  std::ofstream file;
  std::ostream& out = open_output(cfg.output, file);
  if (cfg.format == "csv") {
    out << report_csv_header() << ",h_metric,max_q_eq,max_q_ali,max_q_m\n"
        << report_csv_row(r) << ',' << detail::csv_number(q.h_global) << ',' << detail::csv_number(q.max_q_eq) << ','
        << detail::csv_number(q.max_q_ali) << ',' << detail::csv_number(q.max_q_m) << '\n';
  } else {
    auto j = to_json(r);
    j["field"] = c.field;
    j["metric"] = cfg.metric.empty() ? "inverse:" + c.field : cfg.metric;
    j["quality"] = {{"h_metric", q.h_global}, {"max_q_eq", q.max_q_eq}, {"max_q_ali", q.max_q_ali},
                    {"max_q_m", q.max_q_m}};
    out << j.dump(2) << '\n';
  }

  if (cfg.check_estimate > 0 && r.lambda_diag_lower > cfg.check_estimate) {
    std::cerr << "estimate " << cfg.check_estimate << " is below the certified lower bound " << r.lambda_diag_lower
              << ": the corresponding step is unstable\n";
    return kExitCertificate;
  }
  return 0;
}

// integrate

struct IntegrateConfig {
  bool lumped = false;
  int stages = 1;
  double damping = 0;
  double tau = 0;
  double tau_frac = 0;
  index_t steps = 100;
  bool seed_eigvec = false;
  std::uint64_t seed = 1;
  std::string norm_mass = "scheme";
  std::string trace;
};

template <int Dim>
int integrate_mesh(const SimplicialMesh<Dim>& mesh, const Common& c, const IntegrateConfig& cfg) {
  if ((cfg.tau > 0) == (cfg.tau_frac > 0)) throw UsageError("give exactly one of --tau and --tau-frac");
  const auto disc = discretize(mesh, make_field<Dim>(c.field), c.quad);
  const auto& mt = disc.mass_matrix(cfg.lumped);
  const ChebyshevScheme scheme(cfg.stages, cfg.damping);
  const EigEstimate e = lambda_max_exact(mt, disc.stiffness, {20000, cfg.seed_eigvec});
  const double tau_max = scheme.stability_bound() / e.value;
  const double tau = cfg.tau > 0 ? cfg.tau : cfg.tau_frac * tau_max;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd u0(disc.dofs.size());
  for (Eigen::Index i = 0; i < u0.size(); ++i) u0(i) = normal(rng);
  if (cfg.seed_eigvec) {
    if (e.vector.size() != u0.size()) throw ValidationError("eigenvector seeding needs the dense eigensolver");
    u0 = e.vector + 1e-8 * u0;
  }
  const SparseSymMatrix& monitor = cfg.norm_mass == "full" ? disc.mass : mt;
  const NormTrace t = integrate(scheme, mt, monitor, disc.stiffness, u0, tau, cfg.steps);
  if (!cfg.trace.empty()) {
    std::ofstream file;
    write_trace_csv(open_output(cfg.trace, file), t);
  }

  std::cout << "lambda_max=" << e.value << " tau_max=" << tau_max << " tau=" << tau << " steps=" << t.size() - 1
            << '\n';
  const auto bad = t.first_increase(1e-12);
  if (t.overflow_step || bad) {
    const std::size_t n = bad ? static_cast<std::size_t>(*bad) : t.size() - 1;
    std::cout << "FAIL first increase at step " << n;
    if (t.overflow_step) std::cout << " (overflow at step " << *t.overflow_step << ")";
    const double growth = t.energy.front() > 0 ? t.energy.back() / t.energy.front() : 0.0;
    std::cout << " energy growth " << growth << " over " << t.size() - 1 << " steps\n";
    return kExitCertificate;
  }
  std::cout << "PASS norms nonincreasing over " << t.size() - 1 << " steps\n";
  return 0;
}

// experiment

int run_experiments(const std::string& config, const std::string& out_dir, const std::string& json_path) {
  const auto specs = load_experiments(config);
  std::vector<ExperimentResult> results;
  bool violated = false;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (const auto& spec : specs) {
    results.push_back(run_experiment(spec));
    const auto& res = results.back();
    std::string path = spec.output;
    if (path.empty() && !out_dir.empty()) path = (std::filesystem::path(out_dir) / (spec.label + ".csv")).string();
    if (!path.empty()) {
      std::ofstream f(path);
      if (!f) throw ValidationError("cannot write '" + path + "'");
      write_rows_csv(f, res.rows);
    } else {
      write_rows_csv(std::cout, res.rows);
    }
    for (const auto& row : res.rows) {
      if (!row.warning.empty()) std::cerr << "warning: " << row.mesh_id << ": " << row.warning << '\n';
    }
    for (const auto& v : res.violations) std::cerr << "violation: " << v << '\n';
    violated = violated || !res.violations.empty();
  }
  std::string jp = json_path;
  if (jp.empty() && !out_dir.empty()) jp = (std::filesystem::path(out_dir) / "summary.json").string();
  if (!jp.empty()) {
    std::ofstream f(jp);
    if (!f) throw ValidationError("cannot write '" + jp + "'");
    f << summary_json(results).dump(2) << '\n';
  }
  return violated ? kExitCertificate : 0;
}

template <class F>
int dispatch(const MeshSource& src, const Common& c, F&& f) {
  const AnyMesh any = build_mesh(src, c);
  return std::visit([&](const auto& mesh) { return f(mesh); }, any);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit time-step bounds for P1 finite elements"};
  app.require_subcommand(1);

  int threads = 1;
  if (const char* env = std::getenv("STEPBOUND_THREADS")) {
    try {
      threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "STEPBOUND_THREADS must be an integer\n";
      return kExitUsage;
    }
  }
  bool reproducible = false;
  app.add_option("--threads", threads, "thread hint (default from STEPBOUND_THREADS)")->check(CLI::PositiveNumber);
  app.add_flag("--reproducible", reproducible, "bit-stable assembly order");

  MeshSource src;
  Common common;
  auto add_common = [&](CLI::App* sub) {
    src.add_to(*sub);
    sub->add_option("--field", common.field, "diffusion field, e.g. per1d:eps=0.0625 or aniso2d:kappa=1000");
    sub->add_option("--quad", common.quad, "quadrature order for D_K (1, 2 or 4)")->check(CLI::IsMember({1, 2, 4}));
  };

  auto* gen = app.add_subcommand("gen", "generate a mesh file");
  std::string gen_out;
  add_common(gen);
  gen->add_option("-o,--output", gen_out, "output mesh file (default stdout)");

  auto* analyze = app.add_subcommand("analyze", "eigenvalue, bounds and time steps");
  AnalyzeConfig acfg;
  add_common(analyze);
  analyze->add_flag("--lumped", acfg.lumped, "use the lumped mass matrix");
  analyze->add_option("--bounds", acfg.bounds, "bounds to evaluate: geo, zhudu, shewchuk")
      ->delimiter(',')
      ->check(CLI::IsMember({"geo", "zhudu", "shewchuk", "none"}));
  analyze->add_option("--eig", acfg.eig, "extra estimator: dense, lanczos, power")
      ->check(CLI::IsMember({"dense", "lanczos", "power"}));
  analyze->add_option("--lanczos", acfg.lanczos, "Lanczos steps for the estimate")->check(CLI::PositiveNumber);
  analyze->add_option("--security", acfg.security, "security factor applied to the Lanczos value");
  analyze->add_option("--seed", acfg.seed, "random start seed");
  analyze->add_option("--power-tol", acfg.power_tol, "relative Rayleigh quotient change for the power method");
  analyze->add_option("--metric", acfg.metric, "metric for the quality measures (default inverse of --field)");
  analyze->add_option("--format", acfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--output", acfg.output, "report file (default stdout)");
  analyze->add_option("--check-estimate", acfg.check_estimate,
                      "exit 3 if this lambda estimate lies below the certified lower bound");

  auto* integ = app.add_subcommand("integrate", "Chebyshev time stepping with norm monitors");
  IntegrateConfig icfg;
  add_common(integ);
  integ->add_flag("--lumped", icfg.lumped, "use the lumped mass matrix");
  integ->add_option("--stages", icfg.stages, "Chebyshev stages s")->check(CLI::PositiveNumber);
  integ->add_option("--damping", icfg.damping, "damping eta")->check(CLI::NonNegativeNumber);
  integ->add_option("--tau", icfg.tau, "time step")->check(CLI::PositiveNumber);
  integ->add_option("--tau-frac", icfg.tau_frac, "time step as a fraction of tau_max")->check(CLI::PositiveNumber);
  integ->add_option("--steps", icfg.steps, "number of steps")->check(CLI::PositiveNumber);
  integ->add_flag("--seed-eigvec", icfg.seed_eigvec, "start from the dominant eigenvector plus 1e-8 noise");
  integ->add_option("--seed", icfg.seed, "seed of the random start");
  integ->add_option("--norm-mass", icfg.norm_mass, "mass for the L2 monitor: scheme or full")
      ->check(CLI::IsMember({"scheme", "full"}));
  integ->add_option("--trace", icfg.trace, "trace CSV file");

  auto* exp = app.add_subcommand("experiment", "run an experiment file");
  std::string exp_config, exp_dir, exp_json;
  exp->add_option("config", exp_config, "experiment file")->required();
  exp->add_option("--output-dir", exp_dir, "directory for CSV tables and summary.json");
  exp->add_option("--json", exp_json, "combined JSON summary path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (std::find(acfg.bounds.begin(), acfg.bounds.end(), "none") != acfg.bounds.end()) acfg.bounds.clear();

  try {
    if (gen->parsed()) return run_gen(src, common, gen_out);
    if (analyze->parsed())
      return dispatch(src, common, [&](const auto& mesh) { return analyze_mesh(mesh, common, acfg); });
    if (integ->parsed())
      return dispatch(src, common, [&](const auto& mesh) { return integrate_mesh(mesh, common, icfg); });
    return run_experiments(exp_config, exp_dir, exp_json);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
