#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reltrace {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats. All arithmetic in this project
// runs through these routines with fixed accumulation order, so repeated
// runs on the same build are bit-identical.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, Vec data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<double> row(std::size_t i) { return {row_ptr(i), cols_}; }
  std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols_}; }
  Vec row_vec(std::size_t i) const { return Vec(row_ptr(i), row_ptr(i) + cols_); }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  void fill(double v);
  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

// C = A * B. Accumulation order is fixed (k ascending, row-major inner loop);
// never reordered or parallelized.
Matrix matmul(const Matrix& a, const Matrix& b);

// y = A * x (length a.rows) and y = A^T * x (length a.cols).
Vec matvec(const Matrix& a, const Vec& x);
Vec matvec_transposed(const Matrix& a, const Vec& x);

Matrix transpose(const Matrix& a);
Matrix outer(const Vec& u, const Vec& v);  // u v^T

void add_inplace(Matrix& a, const Matrix& b);
void add_inplace(Vec& a, const Vec& b);
void scale_inplace(Matrix& a, double s);
void scale_inplace(Vec& a, double s);
void axpy(Vec& y, double alpha, const Vec& x);  // y += alpha * x

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Numerically stable row softmax (max subtraction). Entries positive, sum 1.
Vec softmax_row(const Vec& x);

// gamma * (x - mean) / sqrt(var + eps) + beta with population variance.
Vec layer_norm(const Vec& x, const Vec& gamma, const Vec& beta, double eps);

// Tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
double gelu(double x);
double gelu_derivative(double x);
Vec gelu(const Vec& x);

// Solves (c + ridge*I) x = b for symmetric positive definite c via Cholesky.
// c must be symmetric within 1e-9; failure reports the leading-minor index.
Vec solve_spd(const Matrix& c, const Vec& b, double ridge);

bool all_finite(const Vec& v);

}  // namespace reltrace
