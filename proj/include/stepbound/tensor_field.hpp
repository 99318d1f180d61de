#pragma once

// Symmetric positive definite tensor fields on the mesh domain: diffusion
// matrices and metric tensors share this representation.

#include "stepbound/core.hpp"
#include "stepbound/linalg.hpp"
#include "stepbound/mesh.hpp"
#include "stepbound/quadrature.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace stepbound {

/// Throws unless m is symmetric with lambda_min > 1e-14 * lambda_max.
/// Returns the symmetrized matrix.
template <int Dim>
Mat<Dim> checked_spd(const Mat<Dim>& m, const std::string& where) {
  if (!m.allFinite()) throw ValidationError("non-finite tensor value " + where);
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("tensor is not symmetric " + where);
  const Mat<Dim> s = 0.5 * (m + m.transpose());
  const auto ev = sym_eigenvalues<Dim>(s);
  if (!(ev.back() > 0.0) || !(ev.front() > 1e-14 * ev.back()))
    throw ValidationError("tensor is not positive definite " + where);
  return s;
}

template <int Dim>
class TensorField {
 public:
  using Matrix = Mat<Dim>;
  using Point = Vec<Dim>;
  using Function = std::function<Matrix(const Point&)>;

  enum class Kind { Constant, Analytic, ByRegion, ByElement, Inverse, Scaled };

  static TensorField constant(const Matrix& m, std::string name = "constant") {
    auto n = std::make_shared<Impl>(Kind::Constant, std::move(name));
    n->value = checked_spd<Dim>(m, "in constant field");
    return TensorField(std::move(n));
  }

  static TensorField identity() { return constant(Matrix::Identity(), "identity"); }

  static TensorField analytic(std::string name, Function f) {
    auto n = std::make_shared<Impl>(Kind::Analytic, std::move(name));
    n->fn = std::move(f);
    return TensorField(std::move(n));
  }

  /// Constant per region tag; elements of untagged meshes have region 0.
  static TensorField by_region(std::map<int, Matrix> table, std::string name = "piecewise") {
    auto n = std::make_shared<Impl>(Kind::ByRegion, std::move(name));
    for (auto& [tag, m] : table) m = checked_spd<Dim>(m, "for region " + std::to_string(tag));
    n->regions = std::move(table);
    return TensorField(std::move(n));
  }

  static TensorField by_element(std::vector<Matrix> values, std::string name = "per-element") {
    auto n = std::make_shared<Impl>(Kind::ByElement, std::move(name));
    for (std::size_t k = 0; k < values.size(); ++k)
      values[k] = checked_spd<Dim>(values[k], "for element " + std::to_string(k));
    n->elements = std::move(values);
    return TensorField(std::move(n));
  }

  /// Pointwise inverse. Its element average is the inverse of the base
  /// field's average, so that (inverse_of(D))_K^{-1} = D_K holds exactly.
  static TensorField inverse_of(const TensorField& base) {
    auto n = std::make_shared<Impl>(Kind::Inverse, "inverse(" + base.name() + ")");
    n->base = base.impl_;
    return TensorField(std::move(n));
  }

  TensorField scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("field scale must be positive");
    auto n = std::make_shared<Impl>(Kind::Scaled, name());
    n->base = impl_;
    n->scale = c;
    return TensorField(std::move(n));
  }

  Kind kind() const noexcept { return impl_->kind; }
  const std::string& name() const noexcept { return impl_->name; }

  /// True when the element average does not depend on the quadrature rule.
  bool piecewise_constant() const {
    const Impl* p = impl_.get();
    while (p->kind == Kind::Inverse || p->kind == Kind::Scaled) p = p->base.get();
    return p->kind != Kind::Analytic;
  }

  /// Pointwise value; `element` and `region` locate x for piecewise fields.
  Matrix eval(const Point& x, index_t element = -1, int region = 0) const {
    return eval_impl(*impl_, x, element, region);
  }

  /// (1/|K|) * integral over element k, by the fixed rule of the given order.
  Matrix average(const SimplicialMesh<Dim>& mesh, index_t k, int quad_order = 4) const {
    std::array<Point, Dim + 1> v;
    const auto& s = mesh.element(k);
    for (int j = 0; j <= Dim; ++j) v[static_cast<std::size_t>(j)] = mesh.node(s[static_cast<std::size_t>(j)]);
    return average_impl(*impl_, v, k, mesh.region(k), quad_order);
  }

  /// Same average over a simplex given by its vertices, for callers that have
  /// no mesh yet (generators).
  Matrix average(const std::array<Point, Dim + 1>& vertices, int quad_order = 4, index_t element = -1,
                 int region = 0) const {
    return average_impl(*impl_, vertices, element, region, quad_order);
  }

 private:
  struct Impl {
    Impl(Kind k, std::string n) : kind(k), name(std::move(n)) {}
    Kind kind;
    std::string name;
    Matrix value = Matrix::Identity();
    Function fn;
    std::map<int, Matrix> regions;
    std::vector<Matrix> elements;
    std::shared_ptr<const Impl> base;
    double scale = 1.0;
  };

  explicit TensorField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  static std::string where_elem(index_t k) { return "on element " + std::to_string(k); }

  static Matrix eval_impl(const Impl& n, const Point& x, index_t element, int region) {
    switch (n.kind) {
      case Kind::Constant:
        return n.value;
      case Kind::Analytic:
        return n.fn(x);
      case Kind::ByRegion: {
        auto it = n.regions.find(region);
        if (it == n.regions.end())
          throw ValidationError("field '" + n.name + "' has no value for region " + std::to_string(region));
        return it->second;
      }
      case Kind::ByElement:
        if (element < 0 || element >= static_cast<index_t>(n.elements.size()))
          throw ValidationError("field '" + n.name + "' has no value for element " + std::to_string(element));
        return n.elements[static_cast<std::size_t>(element)];
      case Kind::Inverse:
        return eval_impl(*n.base, x, element, region).inverse();
      case Kind::Scaled:
        return n.scale * eval_impl(*n.base, x, element, region);
    }
    return n.value;
  }

  static Matrix average_impl(const Impl& n, const std::array<Point, Dim + 1>& v, index_t k, int region, int order) {
    switch (n.kind) {
      case Kind::Constant:
      case Kind::ByRegion:
      case Kind::ByElement:
        return eval_impl(n, Point::Zero(), k, region);
      case Kind::Inverse:
        return average_impl(*n.base, v, k, region, order).inverse();
      case Kind::Scaled:
        return n.scale * average_impl(*n.base, v, k, region, order);
      case Kind::Analytic:
        break;
    }
    const auto& rule = simplex_rule<Dim>(order);
    Matrix sum = Matrix::Zero();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      Point x = Point::Zero();
      for (int j = 0; j <= Dim; ++j) x += rule.points[q][static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      sum += rule.weights[q] * checked_spd<Dim>(n.fn(x), "in field '" + n.name + "' " + where_elem(k));
    }
    return sum;
  }

  std::shared_ptr<const Impl> impl_;
};

/// Element average of a field; spelled out as a free function for callers that
/// mirror the mathematical notation M_K / D_K.
template <int Dim>
Mat<Dim> average_tensor(const TensorField<Dim>& field, const SimplicialMesh<Dim>& mesh, index_t k,
                        int quad_order = 4) {
  if (k < 0 || k >= mesh.num_elements())
    throw ValidationError("element id " + std::to_string(k) + " out of range");
  return checked_spd<Dim>(field.average(mesh, k, quad_order), "in average " + std::string("on element ") + std::to_string(k));
}

/// Averages on every element, in element order.
template <int Dim>
std::vector<Mat<Dim>> element_averages(const TensorField<Dim>& field, const SimplicialMesh<Dim>& mesh,
                                       int quad_order = 4) {
  std::vector<Mat<Dim>> out(static_cast<std::size_t>(mesh.num_elements()));
  for (index_t k = 0; k < mesh.num_elements(); ++k)
    out[static_cast<std::size_t>(k)] = average_tensor(field, mesh, k, quad_order);
  return out;
}

// ---------------------------------------------------------------------------
// Builtin fields

namespace fields {

/// (2 - sin(2 pi x / eps))^{-1}
inline TensorField<1> per1d(double eps) {
  if (!(eps > 0)) throw ValidationError("per1d: eps must be positive");
  return TensorField<1>::analytic("per1d", [eps](const Vec<1>& x) {
    Mat<1> m;
    m(0, 0) = 1.0 / (2.0 - std::sin(2.0 * std::numbers::pi * x(0) / eps));
    return m;
  });
}

/// (2 - sin(2 pi tan((1 - eps) pi x / 2)))^{-1}
inline TensorField<1> nonper1d(double eps) {
  if (!(eps > 0 && eps < 1)) throw ValidationError("nonper1d: eps must lie in (0,1)");
  return TensorField<1>::analytic("nonper1d", [eps](const Vec<1>& x) {
    Mat<1> m;
    const double t = std::tan((1.0 - eps) * std::numbers::pi * x(0) / 2.0);
    m(0, 0) = 1.0 / (2.0 - std::sin(2.0 * std::numbers::pi * t));
    return m;
  });
}

inline double aniso2d_angle(const Vec<2>& x) { return std::numbers::pi * std::sin(x(0)) * std::cos(x(1)); }

/// R(theta) diag(kappa, 1) R(theta)^T with theta = pi sin x cos y.
inline TensorField<2> aniso2d(double kappa) {
  if (!(kappa > 0)) throw ValidationError("aniso2d: kappa must be positive");
  return TensorField<2>::analytic("aniso2d", [kappa](const Vec<2>& x) {
    const double t = aniso2d_angle(x);
    const double c = std::cos(t), s = std::sin(t);
    Mat<2> m;
    m << kappa * c * c + s * s, (kappa - 1.0) * c * s, (kappa - 1.0) * c * s, kappa * s * s + c * c;
    return m;
  });
}

template <int Dim>
TensorField<Dim> scalar(double value) {
  return TensorField<Dim>::constant(value * Mat<Dim>::Identity(), "scalar");
}

/// Per-region table, one line per region: `<tag> <c>` for c*I, or `<tag>`
/// followed by the upper triangle of the matrix row by row.
template <int Dim>
TensorField<Dim> read_piecewise(std::istream& in, const std::string& label = "piecewise") {
  std::map<int, Mat<Dim>> table;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    std::istringstream s(raw);
    int tag = 0;
    if (!(s >> tag)) {
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError(line, "expected region tag");
    }
    std::vector<double> v;
    double x = 0;
    while (s >> x) v.push_back(x);
    if (!s.eof()) throw ParseError(line, "bad number");
    Mat<Dim> m;
    if (v.size() == 1) {
      m = v[0] * Mat<Dim>::Identity();
    } else if (v.size() == static_cast<std::size_t>(Dim * (Dim + 1) / 2)) {
      std::size_t p = 0;
      for (int r = 0; r < Dim; ++r) {
        for (int c = r; c < Dim; ++c) m(r, c) = m(c, r) = v[p++];
      }
    } else {
      throw ParseError(line, "expected 1 or " + std::to_string(Dim * (Dim + 1) / 2) + " values");
    }
    if (!table.emplace(tag, m).second) throw ParseError(line, "duplicate region " + std::to_string(tag));
  }
  if (table.empty()) throw ValidationError("piecewise field table is empty");
  return TensorField<Dim>::by_region(std::move(table), label);
}

template <int Dim>
TensorField<Dim> load_piecewise(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field table '" + path + "'");
  return read_piecewise<Dim>(in, "piecewise(" + path + ")");
}

}  // namespace fields

/// Parsed form of the `name:key=value,...` mini-language.
struct FieldSpec {
  std::string name;
  std::map<std::string, std::string> params;

  double number(const std::string& key, double fallback) const {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size()) throw ValidationError("field parameter '" + key + "' is not a number");
    return v;
  }

  std::string text(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw ValidationError("field '" + name + "' requires parameter '" + key + "'");
    return it->second;
  }
};

inline FieldSpec parse_field_spec(const std::string& text) {
  FieldSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name.empty()) throw ValidationError("empty field name");
  if (colon == std::string::npos) return spec;
  std::istringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("field parameter '" + item + "' must be key=value");
    spec.params[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return spec;
}

/// Builds a field from its mini-language description, e.g. `per1d:eps=0.0625`,
/// `aniso2d:kappa=1000`, `scalar:value=2`, `piecewise:file=regions.txt`,
/// `identity`. The prefix `inverse:` wraps any of these in inverse_of.
template <int Dim>
TensorField<Dim> parse_field(const std::string& text) {
  if (text.rfind("inverse:", 0) == 0) return TensorField<Dim>::inverse_of(parse_field<Dim>(text.substr(8)));
  const FieldSpec spec = parse_field_spec(text);
  auto wrong_dim = [&](int need) {
    return ValidationError("field '" + spec.name + "' is defined for d=" + std::to_string(need) +
                           ", mesh has d=" + std::to_string(Dim));
  };
  TensorField<Dim> f = TensorField<Dim>::identity();
  if (spec.name == "identity") {
    f = TensorField<Dim>::identity();
  } else if (spec.name == "scalar") {
    f = fields::scalar<Dim>(spec.number("value", 1.0));
  } else if (spec.name == "per1d" || spec.name == "nonper1d") {
    if constexpr (Dim == 1) {
      const double eps = spec.number("eps", 0.0625);
      f = spec.name == "per1d" ? fields::per1d(eps) : fields::nonper1d(eps);
    } else {
      throw wrong_dim(1);
    }
  } else if (spec.name == "aniso2d") {
    if constexpr (Dim == 2) {
      f = fields::aniso2d(spec.number("kappa", 1000.0));
    } else {
      throw wrong_dim(2);
    }
  } else if (spec.name == "piecewise") {
    f = fields::load_piecewise<Dim>(spec.text("file"));
  } else {
    throw ValidationError("unknown field '" + spec.name + "'");
  }
  if (spec.params.count("scale")) f = f.scaled(spec.number("scale", 1.0));
  return f;
}

}  // namespace stepbound
