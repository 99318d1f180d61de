#pragma once

// Symmetric sparse matrices stored as the upper triangle (diagonal included)
// in compressed rows.

#include "stepbound/core.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace stepbound {

class SparseSymMatrix {
 public:
  struct Triplet {
    index_t row, col;
    double value;
  };

  SparseSymMatrix() = default;

  /// Sums duplicate entries in insertion order, so the result does not depend
  /// on anything but the triplet sequence. Entries below the diagonal are
  /// mirrored into the upper triangle.
  static SparseSymMatrix from_triplets(index_t n, std::vector<Triplet> entries) {
    if (n < 1) throw ValidationError("matrix dimension must be at least 1");
    for (auto& t : entries) {
      if (t.row < 0 || t.col < 0 || t.row >= n || t.col >= n) throw ValidationError("matrix entry out of range");
      if (t.row > t.col) std::swap(t.row, t.col);
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Triplet& a, const Triplet& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    SparseSymMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (std::size_t p = 0; p < entries.size();) {
      std::size_t q = p;
      double sum = 0;
      while (q < entries.size() && entries[q].row == entries[p].row && entries[q].col == entries[p].col) sum += entries[q++].value;
      m.cols_.push_back(entries[p].col);
      m.vals_.push_back(sum);
      ++m.row_ptr_[static_cast<std::size_t>(entries[p].row) + 1];
      p = q;
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    m.ensure_diagonal();
    return m;
  }

  static SparseSymMatrix diagonal(const Eigen::VectorXd& d) {
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < d.size(); ++i) t.push_back({i, i, d(i)});
    return from_triplets(d.size(), std::move(t));
  }

  index_t size() const noexcept { return n_; }
  std::size_t stored_entries() const noexcept { return vals_.size(); }

  bool is_diagonal() const {
    for (index_t i = 0; i < n_; ++i) {
      if (row_ptr_[static_cast<std::size_t>(i) + 1] - row_ptr_[static_cast<std::size_t>(i)] != 1) return false;
    }
    return true;
  }

  /// Entry (i, j) of the full symmetric matrix.
  double operator()(index_t i, index_t j) const {
    if (i > j) std::swap(i, j);
    const auto b = cols_.begin() + row_ptr_[static_cast<std::size_t>(i)];
    const auto e = cols_.begin() + row_ptr_[static_cast<std::size_t>(i) + 1];
    const auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? vals_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
  }

  Eigen::VectorXd diag() const {
    Eigen::VectorXd d(n_);
    // the diagonal is the first stored entry of each row
    for (index_t i = 0; i < n_; ++i) d(i) = vals_[static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)])];
    return d;
  }

  /// y = this * x
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw ValidationError("dimension mismatch in matrix-vector product");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (index_t i = 0; i < n_; ++i) {
      const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
      const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
      double acc = vals_[b] * x(i);
      for (std::size_t p = b + 1; p < e; ++p) {
        const index_t j = cols_[p];
        acc += vals_[p] * x(j);
        y(j) += vals_[p] * x(i);
      }
      y(i) += acc;
    }
    return y;
  }

  double quadratic_form(const Eigen::VectorXd& x) const { return x.dot(*this * x); }

  /// Largest absolute entry.
  double max_abs() const {
    double m = 0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  Eigen::VectorXd row_sums() const {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_);
    return *this * ones;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
    for_each([&](index_t i, index_t j, double v) {
      d(i, j) = v;
      d(j, i) = v;
    });
    return d;
  }

  /// Both triangles, column-major.
  Eigen::SparseMatrix<double> to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * vals_.size());
    for_each([&](index_t i, index_t j, double v) {
      t.emplace_back(i, j, v);
      if (i != j) t.emplace_back(j, i, v);
    });
    Eigen::SparseMatrix<double> s(n_, n_);
    s.setFromTriplets(t.begin(), t.end());
    return s;
  }

  /// Calls f(i, j, value) for every stored upper-triangle entry, i <= j.
  template <class F>
  void for_each(F&& f) const {
    for (index_t i = 0; i < n_; ++i) {
      for (index_t p = row_ptr_[static_cast<std::size_t>(i)]; p < row_ptr_[static_cast<std::size_t>(i) + 1]; ++p)
        f(i, cols_[static_cast<std::size_t>(p)], vals_[static_cast<std::size_t>(p)]);
    }
  }

  const std::vector<index_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<index_t>& cols() const noexcept { return cols_; }
  const std::vector<double>& values() const noexcept { return vals_; }

 private:
  void ensure_diagonal() {
    for (index_t i = 0; i < n_; ++i) {
      const auto b = row_ptr_[static_cast<std::size_t>(i)];
      if (b == row_ptr_[static_cast<std::size_t>(i) + 1] || cols_[static_cast<std::size_t>(b)] != i)
        throw ValidationError("diagonal entry " + std::to_string(i) + " is not stored");
    }
  }

  index_t n_ = 0;
  std::vector<index_t> row_ptr_;
  std::vector<index_t> cols_;
  std::vector<double> vals_;
};

/// Diagonal of a matrix as a vector.
inline Eigen::VectorXd diag_of(const SparseSymMatrix& m) { return m.diag(); }

/// MatrixMarket coordinate format, symmetric (lower triangle, 1-based).
inline void write_matrix_market(std::ostream& out, const SparseSymMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << m.size() << ' ' << m.size() << ' ' << m.stored_entries() << '\n';
  out << std::setprecision(17);
  m.for_each([&](index_t i, index_t j, double v) { out << j + 1 << ' ' << i + 1 << ' ' << v << '\n'; });
}

}  // namespace stepbound
