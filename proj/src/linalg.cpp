#include "nsope/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace nsope {

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.cols()) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
  std::vector<double> y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

namespace {

// Lower-triangular Cholesky factor, throwing on non-positive pivots.
std::vector<double> cholesky(const DenseMatrix& a) {
  const int p = a.rows();
  double max_diag = 0.0;
  for (int i = 0; i < p; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double pivot_tol = 1e-13 * std::max(1.0, max_diag);

  std::vector<double> l(static_cast<std::size_t>(p) * p, 0.0);
  for (int j = 0; j < p; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l[j * p + k] * l[j * p + k];
    if (!(d > pivot_tol)) {
      throw SingularDesignError("solve_spd: matrix singular or indefinite");
    }
    const double lj = std::sqrt(d);
    l[j * p + j] = lj;
    for (int i = j + 1; i < p; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l[i * p + k] * l[j * p + k];
      l[i * p + j] = s / lj;
    }
  }
  return l;
}

std::vector<double> chol_solve(const std::vector<double>& l, int p, std::span<const double> b) {
  std::vector<double> y(p);
  for (int i = 0; i < p; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i * p + k] * y[k];
    y[i] = s / l[i * p + i];
  }
  std::vector<double> x(p);
  for (int i = p - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < p; ++k) s -= l[k * p + i] * x[k];
    x[i] = s / l[i * p + i];
  }
  return x;
}

}  // namespace

std::vector<double> solve_spd(const DenseMatrix& a, std::span<const double> b) {
  const int p = a.rows();
  if (a.cols() != p || static_cast<int>(b.size()) != p) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  double max_abs = 0.0;
  for (double v : a.data()) max_abs = std::max(max_abs, std::abs(v));
  const double sym_tol = 1e-9 * std::max(1.0, max_abs);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > sym_tol) {
        throw std::invalid_argument("solve_spd: matrix not symmetric");
      }
    }
  }

  const std::vector<double> l = cholesky(a);
  std::vector<double> x = chol_solve(l, p, b);

  // One refinement step tightens the residual on ill-conditioned systems.
  std::vector<double> r(p);
  const std::vector<double> ax = matvec(a, x);
  for (int i = 0; i < p; ++i) r[i] = b[i] - ax[i];
  const std::vector<double> dx = chol_solve(l, p, r);
  for (int i = 0; i < p; ++i) x[i] += dx[i];
  return x;
}

std::vector<double> solve_ridge(const DenseMatrix& a, std::span<const double> b, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("solve_ridge: lambda must be >= 0");
  if (lambda == 0.0) return solve_spd(a, b);
  DenseMatrix ar = a;
  for (int i = 0; i < a.rows(); ++i) ar(i, i) += lambda;
  return solve_spd(ar, b);
}

}  // namespace nsope
