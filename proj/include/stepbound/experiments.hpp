#pragma once

// Table-producing harness: builds mesh families, runs the exact eigensolve and
// every requested bound, and writes one row per (mesh, lumping).
//
// Spec files are plain text with one section per experiment:
//
//   [label]
//   type = zd2d            # per1d | nonper1d | zd2d | groundwater_like | aniso2d
//   grids = 32x32, 4x256, 4x16@1,1.85
//   lumping = both         # both | full | lumped
//   bounds = diag, geo, zhudu, shewchuk, lanczos
//   output = zd2d.csv
//
// The section label doubles as the type when `type` is omitted.

#include "stepbound/bounds.hpp"
#include "stepbound/core.hpp"
#include "stepbound/generators.hpp"
#include "stepbound/mesh_io.hpp"
#include "stepbound/report_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace stepbound {

enum class Lumping { Both, Full, Lumped };

struct GridSpec {
  index_t nx = 0, ny = 0;
  double ratio_x = 1.0, ratio_y = 1.0;

  std::string id() const {
    std::ostringstream s;
    s << nx << 'x' << ny;
    if (ratio_x != 1.0 || ratio_y != 1.0) s << '@' << ratio_x << ':' << ratio_y;
    return s.str();
  }
};

struct AlignedSpec {
  double width = 0.005;
  index_t n_across = 40, n_along = 6;
  double cx = 0.5, cy = 0.5;

  std::string id() const {
    std::ostringstream s;
    s << "aligned-" << width << 'x' << n_across << 'x' << n_along << '@' << cx << ';' << cy;
    return s.str();
  }
};

struct ExperimentSpec {
  std::string label;
  std::string type;
  std::vector<index_t> sizes{64, 128, 256, 512, 1024};
  std::vector<std::string> meshes{"uniform", "duniform"};
  std::vector<GridSpec> grids;
  Diagonal diagonal = Diagonal::Right;
  double eps = 0.0625;
  double kappa = 1000.0;
  std::vector<double> hs{5.0};
  double beta = 1.5;
  double ratio = 1e-6;
  std::vector<index_t> hole_levels;
  std::vector<AlignedSpec> aligned;
  std::vector<std::string> mesh_files;
  Lumping lumping = Lumping::Both;
  std::set<std::string> bounds{"diag"};
  index_t lanczos_steps = 5;
  double security = 1.1;
  std::uint64_t seed = 1;
  int quad_order = 4;
  std::string output;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_number(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParseError(line, "'" + s + "' is not a number");
  return v;
}

inline index_t to_count(const std::string& s, int line) {
  const double v = to_number(s, line);
  if (v != std::floor(v) || v < 0) throw ParseError(line, "'" + s + "' is not a count");
  return static_cast<index_t>(v);
}

/// `NXxNY` or `NXxNY@rx,ry` (grading ratios). Items of a comma list are
/// rejoined here because the ratios themselves contain a comma.
inline std::vector<GridSpec> parse_grids(const std::string& value, int line) {
  std::vector<GridSpec> out;
  const auto items = split_list(value);
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::string item = items[i];
    GridSpec g;
    const auto at = item.find('@');
    std::string dims = item.substr(0, at);
    const auto x = dims.find('x');
    if (x == std::string::npos) throw ParseError(line, "grid '" + item + "' must look like NXxNY");
    g.nx = to_count(dims.substr(0, x), line);
    g.ny = to_count(dims.substr(x + 1), line);
    if (at != std::string::npos) {
      if (i + 1 >= items.size()) throw ParseError(line, "grid '" + item + "' needs two grading ratios");
      g.ratio_x = to_number(item.substr(at + 1), line);
      g.ratio_y = to_number(items[++i], line);
    }
    if (g.nx < 1 || g.ny < 1) throw ParseError(line, "grid counts must be positive");
    out.push_back(g);
  }
  return out;
}

/// `WIDTHxNACROSSxNALONG` optionally followed by `@cx;cy`.
inline AlignedSpec parse_aligned(const std::string& item, int line) {
  AlignedSpec a;
  const auto at = item.find('@');
  std::istringstream dims(item.substr(0, at));
  std::string w, na, nl;
  if (!std::getline(dims, w, 'x') || !std::getline(dims, na, 'x') || !std::getline(dims, nl))
    throw ParseError(line, "aligned mesh '" + item + "' must look like WIDTHxNACROSSxNALONG");
  a.width = to_number(w, line);
  a.n_across = to_count(na, line);
  a.n_along = to_count(nl, line);
  if (at != std::string::npos) {
    const std::string c = item.substr(at + 1);
    const auto semi = c.find(';');
    if (semi == std::string::npos) throw ParseError(line, "aligned center must be cx;cy");
    a.cx = to_number(c.substr(0, semi), line);
    a.cy = to_number(c.substr(semi + 1), line);
  }
  return a;
}

inline void validate_spec(const ExperimentSpec& s) {
  static const std::set<std::string> types{"per1d", "nonper1d", "zd2d", "groundwater_like", "aniso2d"};
  if (!types.count(s.type)) throw ValidationError("unknown experiment type '" + s.type + "'");
  if (s.type == "per1d" || s.type == "nonper1d") {
    for (index_t n : s.sizes) {
      if (n < 4) throw ValidationError("experiment '" + s.label + "': every N must be at least 4");
    }
    for (const auto& m : s.meshes) {
      if (m != "uniform" && m != "duniform" && m != "metric_uniform")
        throw ValidationError("experiment '" + s.label + "': unknown 1D mesh family '" + m + "'");
    }
  }
  for (const auto& g : s.grids) {
    if (2 * g.nx * g.ny < 4) throw ValidationError("experiment '" + s.label + "': grid " + g.id() + " is too small");
  }
  static const std::set<std::string> known{"diag", "geo", "zhudu", "shewchuk", "lanczos"};
  for (const auto& b : s.bounds) {
    if (!known.count(b)) throw ValidationError("experiment '" + s.label + "': unknown bound '" + b + "'");
  }
  if (s.quad_order != 1 && s.quad_order != 2 && s.quad_order != 4)
    throw ValidationError("quadrature order must be 1, 2 or 4");
}

}  // namespace detail

inline std::vector<ExperimentSpec> parse_experiments(std::istream& in) {
  std::vector<ExperimentSpec> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) throw ParseError(line, "bad section header");
      ExperimentSpec s;
      s.label = s.type = detail::trim(text.substr(1, text.size() - 2));
      out.push_back(std::move(s));
      continue;
    }
    if (out.empty()) throw ParseError(line, "key outside of a section");
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    const std::string key = detail::trim(text.substr(0, eq)), value = detail::trim(text.substr(eq + 1));
    ExperimentSpec& s = out.back();
    const auto list = detail::split_list(value);
    if (key == "type") {
      s.type = value;
    } else if (key == "sizes") {
      s.sizes.clear();
      for (const auto& v : list) s.sizes.push_back(detail::to_count(v, line));
    } else if (key == "meshes") {
      s.meshes = list;
    } else if (key == "grids") {
      s.grids = detail::parse_grids(value, line);
    } else if (key == "diagonal") {
      s.diagonal = parse_diagonal(value);
    } else if (key == "eps") {
      s.eps = detail::to_number(value, line);
    } else if (key == "kappa") {
      s.kappa = detail::to_number(value, line);
    } else if (key == "h") {
      s.hs.clear();
      for (const auto& v : list) s.hs.push_back(detail::to_number(v, line));
    } else if (key == "beta") {
      s.beta = detail::to_number(value, line);
    } else if (key == "ratio") {
      s.ratio = detail::to_number(value, line);
    } else if (key == "holes") {
      s.hole_levels.clear();
      for (const auto& v : list) s.hole_levels.push_back(detail::to_count(v, line));
    } else if (key == "aligned") {
      s.aligned.clear();
      for (const auto& v : list) s.aligned.push_back(detail::parse_aligned(v, line));
    } else if (key == "mesh_files") {
      s.mesh_files = list;
    } else if (key == "lumping") {
      if (value == "both") {
        s.lumping = Lumping::Both;
      } else if (value == "full") {
        s.lumping = Lumping::Full;
      } else if (value == "lumped") {
        s.lumping = Lumping::Lumped;
      } else {
        throw ParseError(line, "lumping must be both, full or lumped");
      }
    } else if (key == "bounds") {
      s.bounds = std::set<std::string>(list.begin(), list.end());
      s.bounds.insert("diag");
    } else if (key == "lanczos_steps") {
      s.lanczos_steps = detail::to_count(value, line);
    } else if (key == "security") {
      s.security = detail::to_number(value, line);
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(detail::to_count(value, line));
    } else if (key == "quad_order") {
      s.quad_order = static_cast<int>(detail::to_count(value, line));
    } else if (key == "output") {
      s.output = value;
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }
  for (const auto& s : out) detail::validate_spec(s);
  return out;
}

inline std::vector<ExperimentSpec> load_experiments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open experiment file '" + path + "'");
  return parse_experiments(in);
}

struct TableRow {
  std::string experiment;
  std::string mesh_id;
  int dim = 0;
  index_t num_elements = 0;
  index_t num_free = 0;
  bool lumped = false;
  bool nonobtuse = false;
  double c_star = kNaN;
  double lambda_exact = kNaN;
  double tau_max = kNaN;  ///< tau_max / s^2
  std::map<std::string, double> tau_h;  ///< tau_h / s^2 per method
  std::string warning;

  double ratio(const std::string& method) const {
    auto it = tau_h.find(method);
    return it == tau_h.end() ? kNaN : tau_max / it->second;
  }
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<TableRow> rows;
  std::vector<std::string> violations;  ///< diagonal-ratio bracket failures
};

namespace detail {

template <int Dim>
void run_case(const ExperimentSpec& spec, const std::string& mesh_id, const SimplicialMesh<Dim>& mesh,
              const TensorField<Dim>& field, ExperimentResult& out) {
  const Discretization<Dim> disc = discretize(mesh, field, spec.quad_order);
  std::vector<bool> lumpings;
  if (spec.lumping != Lumping::Lumped) lumpings.push_back(false);
  if (spec.lumping != Lumping::Full) lumpings.push_back(true);
  for (bool lumped : lumpings) {
    AnalysisOptions opt;
    opt.lumped = lumped;
    opt.geometric = spec.bounds.count("geo") > 0;
    opt.zhu_du = Dim >= 2 && spec.bounds.count("zhudu") > 0;
    opt.shewchuk = Dim >= 2 && spec.bounds.count("shewchuk") > 0;
    if (spec.bounds.count("lanczos")) {
      opt.estimator = EigMethod::Lanczos;
      opt.lanczos.steps = spec.lanczos_steps;
      opt.lanczos.seed = spec.seed;
      opt.lanczos.security = spec.security;
    }
    const StabilityReport r = analyze_stability(disc, opt);
    TableRow row;
    row.experiment = spec.label;
    row.mesh_id = mesh_id;
    row.dim = Dim;
    row.num_elements = r.num_elements;
    row.num_free = r.num_free;
    row.lumped = lumped;
    row.nonobtuse = r.nonobtuse;
    row.c_star = r.c_star;
    row.lambda_exact = r.lambda_exact;
    row.tau_max = r.tau_max_over_s2;
    row.tau_h["diag"] = r.tau_h_over_s2;
    if (opt.geometric) row.tau_h["geo"] = r.tau_h_geo;
    if (opt.zhu_du) row.tau_h["zhudu"] = r.tau_h_zhudu;
    if (opt.shewchuk) row.tau_h["shewchuk"] = r.tau_h_shewchuk;
    if (opt.estimator) row.tau_h["lanczos"] = r.tau_h_estimate;
    const double q = row.ratio("diag");
    if (!(q >= 1.0 - 1e-9 && q <= r.c_star * (1.0 + 1e-9))) {
      std::ostringstream msg;
      msg << spec.label << '/' << mesh_id << (lumped ? "/lumped" : "/full") << ": ratio " << q << " outside [1, "
          << r.c_star << "]";
      out.violations.push_back(msg.str());
    }
    out.rows.push_back(std::move(row));
  }
}

inline void skipped_row(const ExperimentSpec& spec, const std::string& mesh_id, const std::string& why,
                        ExperimentResult& out) {
  TableRow row;
  row.experiment = spec.label;
  row.mesh_id = mesh_id;
  row.warning = why;
  out.rows.push_back(std::move(row));
}

template <int Dim, class FieldFactory>
void run_mesh_files(const ExperimentSpec& spec, FieldFactory&& make_field, ExperimentResult& out) {
  for (const auto& path : spec.mesh_files) {
    if (!std::filesystem::exists(path)) {
      skipped_row(spec, path, "mesh file not found, skipped", out);
      continue;
    }
    const auto mesh = load_mesh_as<Dim>(path);
    run_case<Dim>(spec, path, mesh, make_field(), out);
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  detail::validate_spec(spec);
  ExperimentResult out;
  out.spec = spec;
  if (spec.type == "per1d" || spec.type == "nonper1d") {
    const TensorField<1> field = spec.type == "per1d" ? fields::per1d(spec.eps) : fields::nonper1d(spec.eps);
    for (const auto& kind : spec.meshes) {
      for (index_t n : spec.sizes) {
        const std::string id = kind + "-" + std::to_string(n);
        if (kind == "uniform") {
          detail::run_case<1>(spec, id, gen_uniform_1d(n), field, out);
        } else if (kind == "duniform") {
          auto w = [&field](double x) {
            Vec<1> p;
            p(0) = x;
            return 1.0 / std::sqrt(field.eval(p)(0, 0));
          };
          detail::run_case<1>(spec, id, gen_equidistributed_1d(n, w), field, out);
        } else {
          detail::run_case<1>(spec, id, gen_metric_uniform_1d(n, TensorField<1>::inverse_of(field), spec.quad_order),
                              field, out);
        }
      }
    }
    detail::run_mesh_files<1>(spec, [&] { return field; }, out);
  } else if (spec.type == "zd2d") {
    const auto field = TensorField<2>::identity();
    for (const auto& g : spec.grids) {
      const Grading grading = (g.ratio_x == 1.0 && g.ratio_y == 1.0) ? Grading::uniform()
                                                                     : Grading::geometric(g.ratio_x, g.ratio_y);
      detail::run_case<2>(spec, g.id() + "-" + to_string(spec.diagonal),
                          gen_structured_2d(g.nx, g.ny, grading, spec.diagonal), field, out);
    }
    detail::run_mesh_files<2>(spec, [&] { return field; }, out);
  } else if (spec.type == "groundwater_like") {
    const auto field = groundwater_field(spec.ratio);
    for (double h : spec.hs) {
      std::ostringstream id;
      id << "groundwater-h" << h;
      detail::run_case<2>(spec, id.str(), gen_groundwater_like(h, spec.beta), field, out);
    }
    detail::run_mesh_files<2>(spec, [&] { return field; }, out);
  } else {
    const auto field = fields::aniso2d(spec.kappa);
    for (index_t k : spec.hole_levels)
      detail::run_case<2>(spec, "quasi-" + std::to_string(9 * k), gen_square_with_hole(k), field, out);
    for (const auto& a : spec.aligned)
      detail::run_case<2>(spec, a.id(), gen_diffusion_aligned_2d(field, Vec<2>(a.cx, a.cy), a.width, a.n_across, a.n_along),
                          field, out);
    detail::run_mesh_files<2>(spec, [&] { return field; }, out);
  }
  return out;
}

inline const std::vector<std::string>& table_methods() {
  static const std::vector<std::string> m{"diag", "geo", "zhudu", "shewchuk", "lanczos"};
  return m;
}

inline void write_rows_csv(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "experiment,mesh,dim,N,n_free,lumped,nonobtuse,c_star,lambda_exact,tau_max_over_s2";
  for (const auto& m : table_methods()) out << ",tau_h_" << m << ",ratio_" << m;
  out << ",warning\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.mesh_id << ',' << r.dim << ',' << r.num_elements << ',' << r.num_free << ','
        << (r.lumped ? 1 : 0) << ',' << (r.nonobtuse ? 1 : 0) << ',' << detail::csv_number(r.c_star) << ','
        << detail::csv_number(r.lambda_exact) << ',' << detail::csv_number(r.tau_max);
    for (const auto& m : table_methods()) {
      auto it = r.tau_h.find(m);
      out << ',' << detail::csv_number(it == r.tau_h.end() ? kNaN : it->second) << ','
          << detail::csv_number(r.ratio(m));
    }
    out << ',' << r.warning << '\n';
  }
}

struct LumpingComparison {
  struct Entry {
    std::string experiment, mesh_id;
    double ratio = 0;  ///< tau_max(lumped) / tau_max(full)
  };
  std::vector<Entry> per_mesh;
  double min = 0, max = 0;
};

/// Pairs full and lumped rows of the same mesh.
inline LumpingComparison compare_lumping(const std::vector<TableRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::pair<const TableRow*, const TableRow*>> pairs;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    if (!r.warning.empty()) continue;
    const auto key = std::make_pair(r.experiment, r.mesh_id);
    if (!pairs.count(key)) order.push_back(key);
    auto& slot = pairs[key];
    (r.lumped ? slot.second : slot.first) = &r;
  }
  LumpingComparison c;
  for (const auto& key : order) {
    const auto& [full, lumped] = pairs[key];
    if (!full || !lumped) throw ValidationError("mesh '" + key.second + "' lacks a full or lumped row");
    c.per_mesh.push_back({key.first, key.second, lumped->tau_max / full->tau_max});
  }
  if (c.per_mesh.empty()) throw ValidationError("no rows to compare");
  c.min = c.max = c.per_mesh.front().ratio;
  for (const auto& e : c.per_mesh) {
    c.min = std::min(c.min, e.ratio);
    c.max = std::max(c.max, e.ratio);
  }
  return c;
}

inline nlohmann::json rows_to_json(const std::vector<TableRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  for (const auto& r : rows) {
    nlohmann::json j;
    j["mesh"] = r.mesh_id;
    j["dim"] = r.dim;
    j["N"] = r.num_elements;
    j["n_free"] = r.num_free;
    j["lumped"] = r.lumped;
    j["nonobtuse"] = r.nonobtuse;
    j["c_star"] = num(r.c_star);
    j["lambda_exact"] = num(r.lambda_exact);
    j["tau_max_over_s2"] = num(r.tau_max);
    for (const auto& [m, v] : r.tau_h) {
      j["tau_h_" + m] = num(v);
      j["ratio_" + m] = num(r.ratio(m));
    }
    if (!r.warning.empty()) j["warning"] = r.warning;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline nlohmann::json summary_json(const std::vector<ExperimentResult>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& res : results) {
    nlohmann::json j;
    j["label"] = res.spec.label;
    j["type"] = res.spec.type;
    j["rows"] = rows_to_json(res.rows);
    j["violations"] = res.violations;
    if (res.spec.lumping == Lumping::Both) {
      try {
        const auto c = compare_lumping(res.rows);
        j["lumping_ratio_min"] = c.min;
        j["lumping_ratio_max"] = c.max;
      } catch (const ValidationError&) {
      }
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace stepbound
