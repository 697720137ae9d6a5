#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace nsope {

// Raised when a linear system required to be invertible is singular or
// indefinite beyond tolerance. Callers never get a silent pseudo-inverse.
struct SingularDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Small dense row-major matrix. Sized for the regression fits in this
// project (p up to a few hundred), not for general BLAS work.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("DenseMatrix: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);

// Solves A x = b for symmetric positive definite A by Cholesky factorization
// with one step of iterative refinement. Throws SingularDesignError when A is
// singular or indefinite beyond tolerance, std::invalid_argument when A is
// not symmetric within 1e-9 (relative to its largest entry) or shapes differ.
std::vector<double> solve_spd(const DenseMatrix& a, std::span<const double> b);

// Solves (A + lambda I) x = b via solve_spd. lambda must be >= 0.
std::vector<double> solve_ridge(const DenseMatrix& a, std::span<const double> b, double lambda);

}  // namespace nsope
