#include "millopt/linear_solver.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/SparseLU>
#include <cmath>
#include <optional>
#include <string>

#include "millopt/errors.hpp"

namespace millopt {

namespace {

double relative_residual(const SparseMatrix& a, const Vector& b, const Vector& x, bool transposed) {
  const double bn = b.norm();
  if (bn == 0.0) return x.norm();
  const Vector r = transposed ? Vector(b - a.transpose() * x) : Vector(b - a * x);
  return r.norm() / bn;
}

std::string stall_message(const char* what, const SolveReport& rep, double tol) {
  return std::string(what) + " did not converge: relative residual " + std::to_string(rep.residual) +
         " > " + std::to_string(tol) + " after " + std::to_string(rep.iterations) + " iterations";
}

}  // namespace

// ---------------------------------------------------------------------------

struct NonsymmetricSolver::Impl {
  SparseMatrix a;
  SparseMatrix at;
  SolverPolicy policy;
  std::optional<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu;
  std::optional<Eigen::IncompleteLUT<double, int>> ilu;
  std::optional<Eigen::IncompleteLUT<double, int>> ilu_t;

  SolveReport krylov(const SparseMatrix& m, const Eigen::IncompleteLUT<double, int>& pre,
                     const Vector& b, Vector& x) const {
    std::vector<double> history;
    x = Vector::Zero(b.size());
    auto apply_a = [&](const auto& in, Vector& out) { out = m * in; };
    auto apply_m = [&](const auto& in, Vector& out) { out = pre.solve(Vector(in)); };
    SolveReport rep = fgmres(apply_a, apply_m, b, x, policy.rel_tol, policy.max_iters,
                             policy.restart, history);
    if (!(rep.residual <= policy.rel_tol)) {
      throw SolverError(stall_message("FGMRES", rep, policy.rel_tol), std::move(history));
    }
    return rep;
  }
};

NonsymmetricSolver::NonsymmetricSolver(const SparseMatrix& a, SolverPolicy policy)
    : impl_(std::make_unique<Impl>()) {
  impl_->a = a;
  impl_->a.makeCompressed();
  impl_->policy = policy;
  if (policy.use_direct(a.rows())) {
    impl_->lu.emplace();
    impl_->lu->analyzePattern(impl_->a);
    impl_->lu->factorize(impl_->a);
    if (impl_->lu->info() != Eigen::Success) {
      throw SolverError("sparse LU factorization failed: " + impl_->lu->lastErrorMessage());
    }
  } else {
    impl_->at = impl_->a.transpose();
    impl_->at.makeCompressed();
    impl_->ilu.emplace();
    impl_->ilu->setDroptol(1e-6);
    impl_->ilu->setFillfactor(4);
    impl_->ilu->compute(impl_->a);
    impl_->ilu_t.emplace();
    impl_->ilu_t->setDroptol(1e-6);
    impl_->ilu_t->setFillfactor(4);
    impl_->ilu_t->compute(impl_->at);
  }
}

NonsymmetricSolver::~NonsymmetricSolver() = default;
NonsymmetricSolver::NonsymmetricSolver(NonsymmetricSolver&&) noexcept = default;
NonsymmetricSolver& NonsymmetricSolver::operator=(NonsymmetricSolver&&) noexcept = default;

bool NonsymmetricSolver::is_direct() const noexcept { return impl_->lu.has_value(); }

SolveReport NonsymmetricSolver::solve(const Vector& b, Vector& x) const {
  if (impl_->lu) {
    x = impl_->lu->solve(b);
    return {1, relative_residual(impl_->a, b, x, false)};
  }
  return impl_->krylov(impl_->a, *impl_->ilu, b, x);
}

SolveReport NonsymmetricSolver::solve_transposed(const Vector& b, Vector& x) const {
  if (impl_->lu) {
    x = impl_->lu->transpose().solve(b);
    return {1, relative_residual(impl_->a, b, x, true)};
  }
  return impl_->krylov(impl_->at, *impl_->ilu_t, b, x);
}

// ---------------------------------------------------------------------------

struct SpdSolver::Impl {
  SolverPolicy policy;
  bool direct = true;
  bool analyzed = false;
  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> cholesky;
  SparseMatrix a;
  std::optional<Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>>> ic;
};

SpdSolver::SpdSolver(SolverPolicy policy) : impl_(std::make_unique<Impl>()) {
  impl_->policy = policy;
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

bool SpdSolver::is_direct() const noexcept { return impl_->direct; }

void SpdSolver::factorize(const SparseMatrix& a) {
  impl_->direct = impl_->policy.use_direct(a.rows());
  if (impl_->direct) {
    if (!impl_->analyzed) {
      impl_->cholesky.analyzePattern(a);
      impl_->analyzed = true;
    }
    impl_->cholesky.factorize(a);
    if (impl_->cholesky.info() != Eigen::Success) {
      throw SolverError("Cholesky factorization failed (matrix singular or not positive definite)");
    }
    impl_->a = a;
    return;
  }
  impl_->a = a;
  impl_->ic.emplace();
  impl_->ic->compute(impl_->a);
  if (impl_->ic->info() != Eigen::Success) {
    throw SolverError("incomplete Cholesky preconditioner failed");
  }
}

SolveReport SpdSolver::solve(const Vector& b, Vector& x) const {
  const auto full = impl_->a.selfadjointView<Eigen::Lower>();
  const double bn = b.norm();
  if (impl_->direct) {
    x = impl_->cholesky.solve(b);
    const double res = bn == 0.0 ? 0.0 : (b - full * x).norm() / bn;
    return {1, res};
  }

  // Preconditioned conjugate gradients.
  std::vector<double> history;
  SolveReport rep;
  x = Vector::Zero(b.size());
  if (bn == 0.0) return rep;
  Vector r = b;
  Vector z = impl_->ic->solve(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= impl_->policy.max_iters; ++it) {
    const Vector ap = full * p;
    const double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    rep.iterations = it;
    rep.residual = r.norm() / bn;
    history.push_back(rep.residual);
    if (rep.residual <= impl_->policy.rel_tol) return rep;
    z = impl_->ic->solve(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw SolverError(stall_message("PCG", rep, impl_->policy.rel_tol), std::move(history));
}

}  // namespace millopt
