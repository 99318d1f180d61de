#pragma once

// Largest eigenvalue of the pencil (A, M~): dense reference solver, Lanczos
// and power iteration in the M~ inner product.

#include "stepbound/core.hpp"
#include "stepbound/sparse.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace stepbound {

/// Solves M~ x = b: elementwise for a diagonal M~, otherwise by a sparse
/// LDL^T factorization computed once, with conjugate gradients (relative
/// residual 1e-12) as fallback.
class MassSolver {
 public:
  explicit MassSolver(const SparseSymMatrix& m) : n_(m.size()) {
    if (m.is_diagonal()) {
      inv_diag_ = m.diag().cwiseInverse();
      if (!inv_diag_.allFinite() || (m.diag().array() <= 0).any())
        throw NumericalError("mass matrix has a nonpositive diagonal entry");
      return;
    }
    const Eigen::SparseMatrix<double> s = m.to_eigen();
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(s);
    if (ldlt_->info() == Eigen::Success && (ldlt_->vectorD().array() > 0).all()) return;
    ldlt_.reset();
    cg_ = std::make_unique<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>>();
    cg_->setTolerance(1e-12);
    cg_->compute(s);
    if (cg_->info() != Eigen::Success) throw NumericalError("mass matrix factorization failed");
  }

  MassSolver(MassSolver&&) noexcept = default;
  MassSolver& operator=(MassSolver&&) noexcept = default;

  bool lumped() const noexcept { return inv_diag_.size() > 0; }
  index_t size() const noexcept { return n_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (b.size() != n_) throw ValidationError("dimension mismatch in mass solve");
    if (lumped()) return inv_diag_.cwiseProduct(b);
    if (ldlt_) return ldlt_->solve(b);
    Eigen::VectorXd x = cg_->solve(b);
    if (cg_->info() != Eigen::Success) throw NumericalError("conjugate gradients did not converge in mass solve");
    return x;
  }

 private:
  index_t n_;
  Eigen::VectorXd inv_diag_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
  std::unique_ptr<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>> cg_;
};

enum class EigMethod { Dense, Lanczos, Power };

inline std::string to_string(EigMethod m) {
  switch (m) {
    case EigMethod::Dense:
      return "dense";
    case EigMethod::Lanczos:
      return "lanczos";
    case EigMethod::Power:
      return "power";
  }
  return "?";
}

struct EigEstimate {
  double value = 0;  ///< estimate of lambda_max, security factor applied
  EigMethod method = EigMethod::Dense;
  double residual = 0;  ///< ||A x - theta M x||_{M^-1} / (theta ||x||_M)
  double ritz = 0;      ///< raw Ritz value / Rayleigh quotient
  index_t steps = 0;    ///< Lanczos steps or power iterations performed
  std::uint64_t seed = 0;
  double security = 1.0;
  double tol = 0;
  Eigen::VectorXd vector;  ///< approximate eigenvector (may be empty)
};

namespace detail {

inline void check_pencil(const SparseSymMatrix& m, const SparseSymMatrix& a) {
  if (m.size() != a.size()) throw ValidationError("pencil matrices differ in dimension");
}

inline Eigen::VectorXd random_normal(index_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (index_t i = 0; i < n; ++i) v(i) = dist(gen);
  return v;
}

inline double pencil_residual(const SparseSymMatrix& m, const SparseSymMatrix& a, const MassSolver& solver,
                              const Eigen::VectorXd& x, double theta) {
  const Eigen::VectorXd r = a * x - theta * (m * x);
  const double rn = std::sqrt(std::max(0.0, r.dot(solver.solve(r))));
  const double xn = std::sqrt(std::max(0.0, m.quadratic_form(x)));
  return rn / (std::abs(theta) * xn);
}

}  // namespace detail

/// Dense generalized symmetric eigensolve: Cholesky M~ = L L^T, then the
/// symmetric eigenproblem of L^{-1} A L^{-T}. Default size limit 20000.
inline EigEstimate lambda_max_dense(const SparseSymMatrix& mt, const SparseSymMatrix& a, bool want_vector = false) {
  detail::check_pencil(mt, a);
  const Eigen::MatrixXd md = mt.to_dense();
  Eigen::LLT<Eigen::MatrixXd> llt(md);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of the mass matrix failed");
  Eigen::MatrixXd c = a.to_dense();
  llt.matrixL().solveInPlace(c);
  c.transposeInPlace();
  llt.matrixL().solveInPlace(c);
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, want_vector ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver failed");
  const auto& ev = es.eigenvalues();
  if (!(ev(0) > 0)) throw NumericalError("pencil is not positive definite (smallest eigenvalue " + std::to_string(ev(0)) + ")");
  EigEstimate e;
  e.method = EigMethod::Dense;
  e.value = e.ritz = ev(ev.size() - 1);
  if (want_vector) {
    Eigen::VectorXd y = es.eigenvectors().col(ev.size() - 1);
    llt.matrixU().solveInPlace(y);
    y /= std::sqrt(mt.quadratic_form(y));
    e.vector = y;
    e.residual = detail::pencil_residual(mt, a, MassSolver(mt), y, e.value);
  }
  return e;
}

struct LanczosOptions {
  index_t steps = 5;
  std::uint64_t seed = 1;
  double security = 1.0;
  double tol = 0;  ///< stop early once the Ritz residual falls below tol (0: never)
  bool want_vector = false;
};

/// Lanczos in the M~ inner product with full reorthogonalization. Returns the
/// largest Ritz value multiplied by the security factor.
inline EigEstimate lambda_max_lanczos(const SparseSymMatrix& mt, const SparseSymMatrix& a, const MassSolver& solver,
                                      const LanczosOptions& opt) {
  detail::check_pencil(mt, a);
  if (opt.steps < 1) throw ValidationError("Lanczos needs at least one step");
  if (!(opt.security > 0)) throw ValidationError("security factor must be positive");
  const index_t n = a.size();
  const index_t max_steps = std::min(opt.steps, n);

  for (int restart = 0; restart <= 3; ++restart) {
    const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(restart);
    Eigen::VectorXd q = detail::random_normal(n, seed);
    Eigen::VectorXd mq = mt * q;
    const double nrm = std::sqrt(q.dot(mq));
    if (!(nrm > 0) || !std::isfinite(nrm)) continue;
    q /= nrm;
    mq /= nrm;

    std::vector<Eigen::VectorXd> qs{q}, mqs{mq};
    std::vector<double> alpha, beta;
    bool zero_vector = false;
    double theta = 0, resid = 0;
    Eigen::VectorXd s_vec;

    auto ritz = [&]() {
      const auto k = static_cast<Eigen::Index>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      theta = es.eigenvalues()(k - 1);
      s_vec = es.eigenvectors().col(k - 1);
      const double b_last = beta.size() >= alpha.size() ? beta.back() : 0.0;
      resid = std::abs(b_last * s_vec(k - 1)) / std::abs(theta);
    };

    for (index_t j = 0; j < max_steps; ++j) {
      const Eigen::VectorXd z = a * qs.back();
      const double aj = qs.back().dot(z);
      Eigen::VectorXd w = solver.solve(z);
      alpha.push_back(aj);
      if (j == 0 && !(std::abs(aj) > 0)) {
        zero_vector = true;
        break;
      }
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < qs.size(); ++i) w -= w.dot(mqs[i]) * qs[i];
      }
      Eigen::VectorXd mw = mt * w;
      const double bj = std::sqrt(std::max(0.0, w.dot(mw)));
      beta.push_back(bj);
      const bool last = j + 1 == max_steps;
      // invariant Krylov subspace: the Ritz values are exact eigenvalues
      const bool invariant = !(bj > 1e-13 * std::abs(aj));
      if (last || invariant || (opt.tol > 0 && (j + 1) % 5 == 0)) {
        if (invariant) beta.back() = 0.0;
        ritz();
        if (last || invariant || resid < opt.tol) break;
      }
      qs.push_back(w / bj);
      mqs.push_back(mw / bj);
    }
    if (zero_vector) continue;

    EigEstimate e;
    e.method = EigMethod::Lanczos;
    e.ritz = theta;
    e.value = theta * opt.security;
    e.security = opt.security;
    e.seed = seed;
    e.steps = static_cast<index_t>(alpha.size());
    e.residual = resid;
    e.tol = opt.tol;
    if (opt.want_vector) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < s_vec.size(); ++i) x += s_vec(i) * qs[static_cast<std::size_t>(i)];
      e.vector = x;
    }
    return e;
  }
  throw NumericalError("Lanczos broke down with a zero Krylov vector after 3 restarts");
}

inline EigEstimate lambda_max_lanczos(const SparseSymMatrix& mt, const SparseSymMatrix& a, index_t steps,
                                      std::uint64_t seed, double security) {
  const MassSolver solver(mt);
  return lambda_max_lanczos(mt, a, solver, LanczosOptions{steps, seed, security, 0.0, false});
}

struct PowerOptions {
  double tol = 1e-8;
  std::optional<Eigen::VectorXd> warm_start;
  std::uint64_t seed = 1;
  index_t max_iterations = 100000;
};

/// Power iteration on M~^{-1} A; converged when successive Rayleigh quotients
/// agree to relative tolerance `tol`.
inline EigEstimate lambda_max_power(const SparseSymMatrix& mt, const SparseSymMatrix& a, const MassSolver& solver,
                                    const PowerOptions& opt) {
  detail::check_pencil(mt, a);
  if (!(opt.tol > 0)) throw ValidationError("power method tolerance must be positive");
  Eigen::VectorXd v = opt.warm_start ? *opt.warm_start : detail::random_normal(a.size(), opt.seed);
  if (v.size() != a.size()) throw ValidationError("warm start has the wrong dimension");
  auto normalize = [&](Eigen::VectorXd& x) {
    const double nrm = std::sqrt(mt.quadratic_form(x));
    if (!(nrm > 0) || !std::isfinite(nrm)) throw NumericalError("power iterate vanished");
    x /= nrm;
  };
  normalize(v);
  Eigen::VectorXd av = a * v;
  double rq = v.dot(av);
  for (index_t it = 1; it <= opt.max_iterations; ++it) {
    v = solver.solve(av);
    normalize(v);
    av = a * v;
    const double next = v.dot(av);
    const bool done = std::abs(next - rq) < opt.tol * std::abs(next);
    rq = next;
    if (done) {
      EigEstimate e;
      e.method = EigMethod::Power;
      e.value = e.ritz = rq;
      e.steps = it;
      e.seed = opt.seed;
      e.tol = opt.tol;
      e.vector = v;
      e.residual = detail::pencil_residual(mt, a, solver, v, rq);
      return e;
    }
  }
  throw NumericalError("power method did not converge within " + std::to_string(opt.max_iterations) + " iterations");
}

struct ExactOptions {
  index_t dense_limit = 20000;
  bool want_vector = false;
};

/// Reference largest eigenvalue: dense below the size limit, otherwise
/// Lanczos run to a residual of 1e-12.
inline EigEstimate lambda_max_exact(const SparseSymMatrix& mt, const SparseSymMatrix& a, const ExactOptions& opt = {}) {
  detail::check_pencil(mt, a);
  if (a.size() <= opt.dense_limit) return lambda_max_dense(mt, a, opt.want_vector);
  const MassSolver solver(mt);
  LanczosOptions lo;
  lo.steps = std::min<index_t>(a.size(), 400);
  lo.tol = 1e-12;
  lo.want_vector = opt.want_vector;
  return lambda_max_lanczos(mt, a, solver, lo);
}

}  // namespace stepbound
