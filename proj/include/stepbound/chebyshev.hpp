#pragma once

// First-order s-stage Chebyshev (RKC-type) explicit integration of
// M~ U' = -A U, and the L2 / energy norm monitors.

#include "stepbound/core.hpp"
#include "stepbound/sparse.hpp"
#include "stepbound/spectral.hpp"

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace stepbound {

/// T_n(x) and T_n'(x) by the three-term recurrence.
inline std::pair<double, double> chebyshev_t(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double t0 = 1, t1 = x, d0 = 0, d1 = 1;
  for (int k = 2; k <= n; ++k) {
    const double t2 = 2 * x * t1 - t0;
    const double d2 = 2 * t1 + 2 * x * d1 - d0;
    t0 = t1;
    t1 = t2;
    d0 = d1;
    d1 = d2;
  }
  return {t1, d1};
}

/// R(z) = T_s(w0 + w1 z) / T_s(w0) with w0 = 1 + eta/s^2 and
/// w1 = T_s(w0)/T_s'(w0). For eta = 0 this is T_s(1 + z/s^2), stable on
/// [-2 s^2, 0].
class ChebyshevScheme {
 public:
  explicit ChebyshevScheme(int stages, double damping = 0.0) : s_(stages), eta_(damping) {
    if (stages < 1) throw ValidationError("stage count must be at least 1");
    if (!(damping >= 0.0)) throw ValidationError("damping must be nonnegative");
    w0_ = 1.0 + eta_ / (static_cast<double>(s_) * s_);
    const auto [t, dt] = chebyshev_t(s_, w0_);
    w1_ = t / dt;
    b_.resize(static_cast<std::size_t>(s_) + 1);
    for (int j = 0; j <= s_; ++j) b_[static_cast<std::size_t>(j)] = 1.0 / chebyshev_t(j, w0_).first;
  }

  int stages() const noexcept { return s_; }
  double damping() const noexcept { return eta_; }
  double w0() const noexcept { return w0_; }
  double w1() const noexcept { return w1_; }

  /// beta of the real stability interval [-beta, 0].
  double stability_bound() const { return eta_ == 0.0 ? 2.0 * s_ * s_ : (1.0 + w0_) / w1_; }

  double eval(double z) const {
    return chebyshev_t(s_, w0_ + w1_ * z).first * b_[static_cast<std::size_t>(s_)];
  }

  /// One step U -> R(-tau M~^{-1} A) U through the stage recurrence.
  Eigen::VectorXd step(const MassSolver& mass, const SparseSymMatrix& a, const Eigen::VectorXd& u, double tau) const {
    if (!(tau > 0)) throw ValidationError("time step must be positive");
    auto f = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return -mass.solve(a * y); };
    Eigen::VectorXd y_prev2 = u;
    Eigen::VectorXd y_prev = u + (w1_ / w0_) * tau * f(u);
    for (int j = 2; j <= s_; ++j) {
      const double bj = b_[static_cast<std::size_t>(j)], bj1 = b_[static_cast<std::size_t>(j) - 1],
                   bj2 = b_[static_cast<std::size_t>(j) - 2];
      const double mu = 2 * w0_ * bj / bj1, nu = -bj / bj2, mu_t = 2 * w1_ * bj / bj1;
      Eigen::VectorXd y = mu * y_prev + nu * y_prev2 + mu_t * tau * f(y_prev);
      y_prev2 = std::move(y_prev);
      y_prev = std::move(y);
    }
    return y_prev;
  }

 private:
  int s_;
  double eta_;
  double w0_ = 1, w1_ = 1;
  std::vector<double> b_;
};

inline double stability_poly_eval(const ChebyshevScheme& scheme, double z) { return scheme.eval(z); }

/// (U^T M U)^{1/2} and (U^T A U)^{1/2}.
inline std::pair<double, double> norms(const Eigen::VectorXd& u, const SparseSymMatrix& m_full, const SparseSymMatrix& a) {
  return {std::sqrt(std::max(0.0, m_full.quadratic_form(u))), std::sqrt(std::max(0.0, a.quadratic_form(u)))};
}

struct NormTrace {
  double tau = 0;
  std::vector<double> l2;
  std::vector<double> energy;
  std::optional<index_t> overflow_step;  ///< set when a norm exceeded 1e100

  std::size_t size() const noexcept { return l2.size(); }

  /// First step n >= 1 where either norm exceeds its predecessor by more
  /// than tol times the initial value of that norm.
  std::optional<index_t> first_increase(double rel_tol = 1e-12) const {
    for (std::size_t n = 1; n < l2.size(); ++n) {
      if (l2[n] > l2[n - 1] + rel_tol * l2[0] || energy[n] > energy[n - 1] + rel_tol * energy[0])
        return static_cast<index_t>(n);
    }
    return std::nullopt;
  }
};

/// Steps U0 `steps` times with M~; L2 norms are always measured with the full
/// mass matrix.
inline NormTrace integrate(const ChebyshevScheme& scheme, const SparseSymMatrix& mtilde, const SparseSymMatrix& m_full,
                           const SparseSymMatrix& a, const Eigen::VectorXd& u0, double tau, index_t steps) {
  if (steps < 1) throw ValidationError("step count must be at least 1");
  const MassSolver mass(mtilde);
  NormTrace trace;
  trace.tau = tau;
  Eigen::VectorXd u = u0;
  auto record = [&](index_t n) {
    const auto [l2, en] = norms(u, m_full, a);
    trace.l2.push_back(l2);
    trace.energy.push_back(en);
    if (!(l2 <= 1e100 && en <= 1e100)) trace.overflow_step = n;
  };
  record(0);
  for (index_t n = 1; n <= steps && !trace.overflow_step; ++n) {
    u = scheme.step(mass, a, u, tau);
    record(n);
  }
  return trace;
}

inline void write_trace_csv(std::ostream& out, const NormTrace& t) {
  out << "step,time,l2,energy\n" << std::setprecision(17);
  for (std::size_t n = 0; n < t.size(); ++n)
    out << n << ',' << static_cast<double>(n) * t.tau << ',' << t.l2[n] << ',' << t.energy[n] << '\n';
}

}  // namespace stepbound
