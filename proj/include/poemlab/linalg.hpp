#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "poemlab/rng.hpp"

namespace poemlab {

using Vec = std::vector<double>;

// Dense row-major matrix. Used both for square m x m quantities (prior
// covariance, posterior precision) and for data sets (one row per point).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  // Appends a row; the first append on an empty 0x0 matrix fixes cols.
  void append_row(std::span<const double> values);

  Matrix transpose() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vec operator*(const Matrix& a, std::span<const double> x);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// Lower-triangular factor L with L * L^T = A + jitter * I.
class CholeskyFactor {
 public:
  const Matrix& lower() const { return lower_; }
  std::size_t dim() const { return lower_.rows(); }
  double jitter() const { return jitter_; }

  // L * L^T.
  Matrix reconstruct() const;

 private:
  friend CholeskyFactor cholesky(const Matrix& a);
  Matrix lower_;
  double jitter_ = 0.0;
};

// Throws NotSymmetric when A deviates from symmetry by more than 1e-10
// relative, NotPositiveDefinite when every rung of the jitter ladder
// {0, 1e-10, 1e-8, 1e-6} fails.
CholeskyFactor cholesky(const Matrix& a);

// Solves (L L^T) x = b.
Vec solve_spd(const CholeskyFactor& factor, std::span<const double> b);

// Solves L^T t = z (back substitution).
Vec solve_upper_transpose(const CholeskyFactor& factor, std::span<const double> z);

// Inverse of the factored matrix, via m solves. Only used by tests and
// diagnostics; the posterior never forms explicit inverses.
Matrix inverse_spd(const CholeskyFactor& factor);

// Draws mean + t with L^T t = z, z ~ N(0, I), where L factors the precision.
// The draw therefore has covariance (L L^T)^{-1}.
Vec sample_mvn(std::span<const double> mean, const CholeskyFactor& precision_factor,
               RngStream& rng);

}  // namespace poemlab
