#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace millopt {

template <class ApplyA, class ApplyM>
SolveReport fgmres(ApplyA&& apply_a, ApplyM&& apply_m, const Vector& b, Vector& x, double rel_tol,
                   int max_iters, int restart, std::vector<double>& history) {
  const Eigen::Index n = b.size();
  SolveReport rep;
  const double bnorm = b.norm();
  if (x.size() != n) x = Vector::Zero(n);
  if (bnorm == 0.0) {
    x.setZero();
    return rep;
  }

  Vector r(n), w(n);
  apply_a(x, w);
  r = b - w;
  double beta = r.norm();
  history.push_back(beta / bnorm);
  if (beta / bnorm <= rel_tol) {
    rep.residual = beta / bnorm;
    return rep;
  }

  const int m = restart;
  Eigen::MatrixXd v(n, m + 1), z(n, m);
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
  Vector cs(m), sn(m), g(m + 1);

  int total = 0;
  while (total < max_iters) {
    v.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    int j = 0;
    for (; j < m && total < max_iters; ++j, ++total) {
      Vector zj(n);
      apply_m(v.col(j), zj);
      z.col(j) = zj;
      apply_a(zj, w);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = w.dot(v.col(i));
        w -= hess(i, j) * v.col(i);
      }
      hess(j + 1, j) = w.norm();
      if (hess(j + 1, j) > 0.0) v.col(j + 1) = w / hess(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
        hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double denom = std::hypot(hess(j, j), hess(j + 1, j));
      cs(j) = denom == 0.0 ? 1.0 : hess(j, j) / denom;
      sn(j) = denom == 0.0 ? 0.0 : hess(j + 1, j) / denom;
      hess(j, j) = denom;
      hess(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      history.push_back(std::abs(g(j + 1)) / bnorm);
      if (std::abs(g(j + 1)) / bnorm <= rel_tol) {
        ++j;
        ++total;
        break;
      }
    }
    Vector y = hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += z.leftCols(j) * y;
    apply_a(x, w);
    r = b - w;
    beta = r.norm();
    rep.iterations = total;
    rep.residual = beta / bnorm;
    if (rep.residual <= rel_tol) return rep;
  }
  return rep;
}

}  // namespace millopt
