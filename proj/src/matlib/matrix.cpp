#include "zdjscc/matlib/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/kernels.hpp"

namespace zdjscc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotPD: return "NotPD";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResonantSpectrum: return "ResonantSpectrum";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::SingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::CertificateFailure: return "CertificateFailure";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("{}: {}x{} vs {}x{}", op, a.rows(), a.cols(), b.rows(), b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("matrix {}x{} given {} entries", rows_, cols_, data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "matrix entry is not finite");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::DimensionMismatch, "ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "matrix entry is not finite");
  }
}

Matrix Matrix::identity(std::size_t n) {
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 1.0;
  return Matrix(n, n, std::move(d));
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
  return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i * n + i] = diag[i];
  return Matrix(n, n, std::move(d));
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::row(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::transpose() const {
  std::vector<double> t(data_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t[j * rows_ + i] = data_[i * cols_ + j];
  return Matrix(cols_, rows_, std::move(t));
}

Matrix Matrix::symmetrized() const {
  if (!is_square()) throw Error(ErrorCode::DimensionMismatch, "symmetrized: matrix not square");
  std::vector<double> s(data_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      s[i * cols_ + j] = 0.5 * (data_[i * cols_ + j] + data_[j * cols_ + i]);
  return Matrix(rows_, cols_, std::move(s));
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw Error(ErrorCode::DimensionMismatch, "block out of range");
  std::vector<double> b;
  b.reserve(nr * nc);
  for (std::size_t i = 0; i < nr; ++i) {
    const double* src = data_.data() + (r0 + i) * cols_ + c0;
    b.insert(b.end(), src, src + nc);
  }
  return Matrix(nr, nc, std::move(b));
}

std::vector<double> Matrix::diag() const {
  std::vector<double> d(std::min(rows_, cols_));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (*this)(i, i);
  return d;
}

double Matrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::trace() const {
  if (!is_square()) throw Error(ErrorCode::DimensionMismatch, "trace: matrix not square");
  double t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += data_[i * cols_ + i];
  return t;
}

double Matrix::frobenius_norm() const noexcept { return std::sqrt(kernels::sum_squares(data_.data(), data_.size())); }

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  std::vector<double> r = a.data_;
  kernels::axpy(1.0, b.data_.data(), r.data(), r.size());
  return Matrix(a.rows_, a.cols_, std::move(r));
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  std::vector<double> r = a.data_;
  kernels::axpy(-1.0, b.data_.data(), r.data(), r.size());
  return Matrix(a.rows_, a.cols_, std::move(r));
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols_ != b.rows_) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("operator*: {}x{} times {}x{}", a.rows_, a.cols_, b.rows_, b.cols_));
  }
  std::vector<double> c(a.rows_ * b.cols_, 0.0);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    double* ci = c.data() + i * b.cols_;
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const double aik = a.data_[i * a.cols_ + k];
      if (aik != 0.0) kernels::axpy(aik, b.data_.data() + k * b.cols_, ci, b.cols_);
    }
  }
  return Matrix(a.rows_, b.cols_, std::move(c));
}

Matrix operator*(double s, const Matrix& a) {
  std::vector<double> r = a.data_;
  kernels::scale(s, r.data(), r.size());
  return Matrix(a.rows_, a.cols_, std::move(r));
}

std::string Matrix::to_string(int precision) const {
  std::string out = "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    out += i == 0 ? "[" : ", [";
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j != 0) out += ", ";
      out += fmt::format("{:.{}g}", (*this)(i, j), precision);
    }
    out += "]";
  }
  return out + "]";
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  const std::size_t r = a.rows() + b.rows();
  const std::size_t c = a.cols() + b.cols();
  std::vector<double> d(r * c, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d[i * c + j] = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) d[(a.rows() + i) * c + a.cols() + j] = b(i, j);
  return Matrix(r, c, std::move(d));
}

Matrix assemble(const Matrix& a11, const Matrix& a12, const Matrix& a21, const Matrix& a22) {
  if (a11.rows() != a12.rows() || a21.rows() != a22.rows() || a11.cols() != a21.cols() ||
      a12.cols() != a22.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "assemble: blocks not conformable");
  }
  const std::size_t r = a11.rows() + a21.rows();
  const std::size_t c = a11.cols() + a12.cols();
  std::vector<double> d(r * c, 0.0);
  auto put = [&](const Matrix& m, std::size_t r0, std::size_t c0) {
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) d[(r0 + i) * c + c0 + j] = m(i, j);
  };
  put(a11, 0, 0);
  put(a12, 0, a11.cols());
  put(a21, a11.rows(), 0);
  put(a22, a11.rows(), a11.cols());
  return Matrix(r, c, std::move(d));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace zdjscc
