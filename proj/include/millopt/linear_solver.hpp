#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

namespace millopt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

enum class SolverKind { Auto, Direct, Iterative };

/// Chooses between factorization and preconditioned Krylov solves. Auto picks
/// the direct path below `direct_limit` unknowns.
struct SolverPolicy {
  SolverKind kind = SolverKind::Auto;
  Eigen::Index direct_limit = 1'000'000;
  double rel_tol = 1e-8;
  int max_iters = 5000;
  int restart = 50;

  bool use_direct(Eigen::Index n) const noexcept {
    return kind == SolverKind::Direct || (kind == SolverKind::Auto && n < direct_limit);
  }
  friend bool operator==(const SolverPolicy&, const SolverPolicy&) = default;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;  ///< achieved ||b - Ax|| / ||b||
};

/// Factor-once solver for a fixed non-symmetric matrix, with transposed
/// solves. Direct path: sparse LU. Iterative path: restarted flexible GMRES
/// right-preconditioned by incomplete LU (one ILU per orientation).
class NonsymmetricSolver {
 public:
  NonsymmetricSolver(const SparseMatrix& a, SolverPolicy policy);
  ~NonsymmetricSolver();
  NonsymmetricSolver(NonsymmetricSolver&&) noexcept;
  NonsymmetricSolver& operator=(NonsymmetricSolver&&) noexcept;

  /// Throws SolverError (with residual history) when the Krylov path stalls.
  SolveReport solve(const Vector& b, Vector& x) const;
  SolveReport solve_transposed(const Vector& b, Vector& x) const;

  bool is_direct() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// SPD solver whose sparsity pattern is analysed once and refactorized on
/// every `factorize`. Direct path: supernodal Cholesky. Iterative path:
/// conjugate gradients preconditioned by incomplete Cholesky.
class SpdSolver {
 public:
  explicit SpdSolver(SolverPolicy policy);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  /// `a` holds at least the lower triangle.
  void factorize(const SparseMatrix& a);
  SolveReport solve(const Vector& b, Vector& x) const;

  bool is_direct() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Restarted FGMRES with a right preconditioner. Exposed for testing.
/// `apply_a(in, out)` and `apply_m(in, out)` compute out = A in / out = M^{-1} in.
template <class ApplyA, class ApplyM>
SolveReport fgmres(ApplyA&& apply_a, ApplyM&& apply_m, const Vector& b, Vector& x, double rel_tol,
                   int max_iters, int restart, std::vector<double>& history);

}  // namespace millopt

#include "millopt/detail/fgmres_impl.hpp"
