#pragma once

// Line-oriented mesh text format:
//
//   dim <d>
//   nodes <n>
//   <x> [<y> [<z>]] <marker>        (n lines; marker 0 interior, 1 dirichlet, 2 neumann)
//   elements <N>
//   <i0> ... <id> [<region>]        (N lines; zero-based node indices)
//
// '#' starts a comment; blank lines are ignored.

#include "stepbound/mesh.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace stepbound {

using AnyMesh = std::variant<SimplicialMesh<1>, SimplicialMesh<2>, SimplicialMesh<3>>;

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty, comment-stripped line; false at end of input.
  bool next(std::istringstream& out) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(raw);
      return true;
    }
    return false;
  }

  std::istringstream require(const char* what) {
    std::istringstream s;
    if (!next(s)) throw ParseError(line_ + 1, std::string("unexpected end of file, expected ") + what);
    return s;
  }

  int line() const noexcept { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

inline index_t read_header(LineReader& r, const char* keyword) {
  auto s = r.require(keyword);
  std::string key;
  long long value = -1;
  if (!(s >> key >> value) || key != keyword || value < 0)
    throw ParseError(r.line(), std::string("expected '") + keyword + " <count>'");
  std::string extra;
  if (s >> extra) throw ParseError(r.line(), "trailing tokens after header");
  return static_cast<index_t>(value);
}

template <int Dim>
SimplicialMesh<Dim> read_body(LineReader& r, MeshPolicy policy) {
  using Mesh = SimplicialMesh<Dim>;
  const index_t n = read_header(r, "nodes");
  std::vector<typename Mesh::Point> nodes(static_cast<std::size_t>(n));
  std::vector<NodeMarker> markers(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    auto s = r.require("node line");
    for (int c = 0; c < Dim; ++c) {
      if (!(s >> nodes[static_cast<std::size_t>(i)](c)))
        throw ParseError(r.line(), "bad node coordinate");
    }
    int marker = -1;
    if (!(s >> marker) || marker < 0 || marker > 2)
      throw ParseError(r.line(), "node marker must be 0, 1 or 2");
    std::string extra;
    if (s >> extra) throw ParseError(r.line(), "trailing tokens on node line");
    markers[static_cast<std::size_t>(i)] = static_cast<NodeMarker>(marker);
  }

  const index_t ne = read_header(r, "elements");
  std::vector<typename Mesh::Simplex> elems(static_cast<std::size_t>(ne));
  std::vector<int> regions(static_cast<std::size_t>(ne), 0);
  bool any_region = false;
  for (index_t k = 0; k < ne; ++k) {
    auto s = r.require("element line");
    for (int j = 0; j <= Dim; ++j) {
      long long v = -1;
      if (!(s >> v)) throw ParseError(r.line(), "bad element node index");
      if (v < 0 || v >= n) throw ParseError(r.line(), "element node index out of range");
      elems[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = static_cast<index_t>(v);
    }
    int tag = 0;
    if (s >> tag) {
      any_region = true;
      regions[static_cast<std::size_t>(k)] = tag;
    } else if (!s.eof()) {
      throw ParseError(r.line(), "bad region tag");
    }
    std::string extra;
    s.clear();
    if (s >> extra) throw ParseError(r.line(), "trailing tokens on element line");
  }
  std::istringstream trailing;
  if (r.next(trailing)) throw ParseError(r.line(), "unexpected content after elements");
  if (!any_region) regions.clear();
  return Mesh(std::move(nodes), std::move(elems), std::move(markers), std::move(regions), policy);
}

}  // namespace detail

/// Parses a mesh of any supported dimension.
inline AnyMesh read_mesh(std::istream& in, MeshPolicy policy = {}) {
  detail::LineReader r(in);
  auto s = r.require("'dim <d>'");
  std::string key;
  int d = 0;
  if (!(s >> key >> d) || key != "dim") throw ParseError(r.line(), "expected 'dim <d>'");
  switch (d) {
    case 1:
      return detail::read_body<1>(r, policy);
    case 2:
      return detail::read_body<2>(r, policy);
    case 3:
      return detail::read_body<3>(r, policy);
    default:
      throw ParseError(r.line(), "dimension must be 1, 2 or 3");
  }
}

inline AnyMesh load_mesh(const std::string& path, MeshPolicy policy = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file '" + path + "'");
  return read_mesh(in, policy);
}

/// Loads a mesh whose dimension is known at compile time.
template <int Dim>
SimplicialMesh<Dim> load_mesh_as(const std::string& path, MeshPolicy policy = {}) {
  AnyMesh any = load_mesh(path, policy);
  if (auto* m = std::get_if<SimplicialMesh<Dim>>(&any)) return std::move(*m);
  throw ValidationError("mesh file '" + path + "' has dimension " +
                        std::to_string(any.index() + 1) + ", expected " + std::to_string(Dim));
}

template <int Dim>
void write_mesh(std::ostream& out, const SimplicialMesh<Dim>& mesh) {
  out << "dim " << Dim << "\n";
  out << "nodes " << mesh.num_nodes() << "\n";
  out << std::setprecision(17);
  for (index_t i = 0; i < mesh.num_nodes(); ++i) {
    const auto& p = mesh.node(i);
    for (int c = 0; c < Dim; ++c) out << p(c) << ' ';
    out << static_cast<int>(mesh.marker(i)) << "\n";
  }
  out << "elements " << mesh.num_elements() << "\n";
  for (index_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& s = mesh.element(k);
    for (int j = 0; j <= Dim; ++j) out << s[static_cast<std::size_t>(j)] << (j < Dim ? " " : "");
    if (mesh.has_regions()) out << ' ' << mesh.region(k);
    out << "\n";
  }
}

template <int Dim>
void save_mesh(const std::string& path, const SimplicialMesh<Dim>& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  write_mesh(out, mesh);
}

}  // namespace stepbound
