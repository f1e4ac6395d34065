#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace zdjscc {

/// Dense real matrix, row-major, immutable after construction.
///
/// Every entry is finite; constructors throw Error(NonFinite) otherwise.
/// Vectors are represented as k x 1 (column) or 1 x k (row) matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zeros
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix filled(std::size_t rows, std::size_t cols, double value);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix column(std::span<const double> values);
  static Matrix row(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row_span(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  /// Copy of the entries, for callers that need a mutable workspace.
  std::vector<double> to_vector() const { return data_; }

  Matrix transpose() const;
  Matrix symmetrized() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  std::vector<double> diag() const;

  double max_abs() const noexcept;
  double trace() const;
  double frobenius_norm() const noexcept;

  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double s, const Matrix& a);
  friend Matrix operator*(const Matrix& a, double s) { return s * a; }
  friend Matrix operator/(const Matrix& a, double s) { return (1.0 / s) * a; }
  friend Matrix operator-(const Matrix& a) { return -1.0 * a; }

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

  std::string to_string(int precision = 6) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// blockdiag(a, b); either block may be 0 x 0.
Matrix block_diag(const Matrix& a, const Matrix& b);

/// [[a11, a12], [a21, a22]] with conformable block shapes.
Matrix assemble(const Matrix& a11, const Matrix& a12, const Matrix& a21, const Matrix& a22);

/// Largest absolute entrywise difference; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace zdjscc
