#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stepbound {

using index_t = std::int64_t;

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A structural invariant of a mesh, field or matrix does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (factorization, convergence, overflow).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The requested combination is outside what an operation supports.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace stepbound
