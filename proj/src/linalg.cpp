#include "poemlab/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "poemlab/errors.hpp"

namespace poemlab {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw DimensionMismatch("append_row: expected " + std::to_string(cols_) +
                            " columns, got " + std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product shape mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vec operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector shape mismatch");
  Vec out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("matrix difference shape mismatch");
  Matrix out = a;
  auto o = out.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bb[i];
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("matrix sum shape mismatch");
  Matrix out = a;
  auto o = out.flat();
  auto bb = b.flat();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bb[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.flat()) v *= s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& a) { return norm(a.flat()); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.flat()) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Plain Cholesky-Banachiewicz on A + jitter*I; false on a non-positive pivot.
bool try_factor(const Matrix& a, double jitter, Matrix& lower) {
  const std::size_t n = a.rows();
  lower = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      if (i == j) s += jitter;
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        lower(i, i) = std::sqrt(s);
      } else {
        lower(i, j) = s / lower(j, j);
      }
    }
  }
  return true;
}

}  // namespace

CholeskyFactor cholesky(const Matrix& a) {
  if (!a.square()) throw DimensionMismatch("cholesky: matrix is not square");
  if (!a.all_finite()) throw NotPositiveDefinite("cholesky: non-finite entries");
  const double scale = std::max(max_abs(a), 1e-300);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale) {
        throw NotSymmetric("cholesky: entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") differs from its transpose");
      }
    }
  }
  static constexpr std::array<double, 4> kJitterLadder = {0.0, 1e-10, 1e-8, 1e-6};
  CholeskyFactor f;
  for (double jitter : kJitterLadder) {
    if (try_factor(a, jitter, f.lower_)) {
      f.jitter_ = jitter;
      return f;
    }
  }
  throw NotPositiveDefinite("cholesky: matrix is not positive definite (jitter up to 1e-6 failed)");
}

Matrix CholeskyFactor::reconstruct() const { return lower_ * lower_.transpose(); }

Vec solve_upper_transpose(const CholeskyFactor& factor, std::span<const double> z) {
  const Matrix& l = factor.lower();
  const std::size_t n = l.rows();
  if (z.size() != n) throw DimensionMismatch("solve: rhs length mismatch");
  Vec x(z.begin(), z.end());
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Vec solve_spd(const CholeskyFactor& factor, std::span<const double> b) {
  const Matrix& l = factor.lower();
  const std::size_t n = l.rows();
  if (b.size() != n) throw DimensionMismatch("solve_spd: rhs length mismatch");
  // Forward: L y = b.
  Vec y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = y[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  return solve_upper_transpose(factor, y);
}

Matrix inverse_spd(const CholeskyFactor& factor) {
  const std::size_t n = factor.dim();
  Matrix inv(n, n);
  Vec e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vec col = solve_spd(factor, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

Vec sample_mvn(std::span<const double> mean, const CholeskyFactor& precision_factor,
               RngStream& rng) {
  const std::size_t n = precision_factor.dim();
  if (mean.size() != n) throw DimensionMismatch("sample_mvn: mean length mismatch");
  Vec z(n);
  for (double& v : z) v = rng.normal();
  Vec t = solve_upper_transpose(precision_factor, z);
  for (std::size_t i = 0; i < n; ++i) t[i] += mean[i];
  return t;
}

}  // namespace poemlab
