#include "numerics/matrix.hpp"

#include <cmath>
#include <sstream>

#include "numerics/errors.hpp"

namespace reltrace {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec data) : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ValidationError("Matrix: data length " + std::to_string(data_.size()) + " does not match shape " +
                          shape_str(rows_, cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) {
  for (double& x : data_) x = v;
}

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: dimension mismatch " + shape_str(a.rows(), a.cols()) + " * " +
                          shape_str(b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = a.rows(), k_dim = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = ai[k];
      const double* bk = b.row_ptr(k);
      for (std::size_t j = 0; j < m; ++j) {
        ci[j] += aik * bk[j];
      }
    }
  }
  return c;
}

Vec matvec(const Matrix& a, const Vec& x) {
  if (a.cols() != x.size()) {
    throw ValidationError("matvec: dimension mismatch " + shape_str(a.rows(), a.cols()) + " * vec[" +
                          std::to_string(x.size()) + "]");
  }
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vec matvec_transposed(const Matrix& a, const Vec& x) {
  if (a.rows() != x.size()) {
    throw ValidationError("matvec_transposed: dimension mismatch " + shape_str(a.cols(), a.rows()) + " * vec[" +
                          std::to_string(x.size()) + "]");
  }
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * ai[j];
  }
  return y;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

Matrix outer(const Vec& u, const Vec& v) {
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double* mi = m.row_ptr(i);
    for (std::size_t j = 0; j < v.size(); ++j) mi[j] = u[i] * v[j];
  }
  return m;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("matrix add: shape mismatch " + shape_str(a.rows(), a.cols()) + " vs " +
                          shape_str(b.rows(), b.cols()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

void add_inplace(Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ValidationError("vector add: length mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void scale_inplace(Matrix& a, double s) {
  for (double& x : a.data()) x *= s;
}

void scale_inplace(Vec& a, double s) {
  for (double& x : a) x *= s;
}

void axpy(Vec& y, double alpha, const Vec& x) {
  if (y.size() != x.size()) {
    throw ValidationError("axpy: length mismatch " + std::to_string(y.size()) + " vs " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) {
    throw ValidationError("dot: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double x : a.data()) acc += x * x;
  return std::sqrt(acc);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::fabs(a.data()[i] - b.data()[i]);
    if (d > m) m = d;
  }
  return m;
}

Vec softmax_row(const Vec& x) {
  if (x.empty()) throw ValidationError("softmax_row: empty vector");
  double mx = x[0];
  for (double v : x) {
    if (v > mx) mx = v;
  }
  Vec out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vec layer_norm(const Vec& x, const Vec& gamma, const Vec& beta, double eps) {
  if (x.size() != gamma.size() || x.size() != beta.size()) {
    throw ValidationError("layer_norm: length mismatch x=" + std::to_string(x.size()) + " gamma=" +
                          std::to_string(gamma.size()) + " beta=" + std::to_string(beta.size()));
  }
  if (x.empty()) throw ValidationError("layer_norm: empty vector");
  if (eps <= 0.0) throw ValidationError("layer_norm: eps must be > 0");
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_std = 1.0 / std::sqrt(var + eps);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = gamma[i] * (x[i] - mean) * inv_std + beta[i];
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  const double inner = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
  const double inner = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

Vec gelu(const Vec& x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu(x[i]);
  return out;
}

Vec solve_spd(const Matrix& c, const Vec& b, double ridge) {
  if (c.rows() != c.cols()) {
    throw ValidationError("solve_spd: matrix not square (" + std::to_string(c.rows()) + "x" +
                          std::to_string(c.cols()) + ")");
  }
  if (c.rows() != b.size()) {
    throw ValidationError("solve_spd: rhs length " + std::to_string(b.size()) + " does not match order " +
                          std::to_string(c.rows()));
  }
  if (ridge < 0.0) throw ValidationError("solve_spd: ridge must be >= 0");
  const std::size_t n = c.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::fabs(c.at(i, j) - c.at(j, i)) > 1e-9) {
        throw ValidationError("solve_spd: matrix not symmetric at (" + std::to_string(i) + "," + std::to_string(j) +
                              ")");
      }
    }
  }

  // In-place lower Cholesky of (c + ridge*I).
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = c.at(j, j) + ridge;
    for (std::size_t k = 0; k < j; ++k) diag -= l.at(j, k) * l.at(j, k);
    if (diag <= 0.0 || !std::isfinite(diag)) {
      throw NumericError("solve_spd: Cholesky failed at leading minor " + std::to_string(j + 1));
    }
    const double ljj = std::sqrt(diag);
    l.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = c.at(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = acc / ljj;
    }
  }

  // Forward then back substitution.
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l.at(i, k) * y[k];
    y[i] = acc / l.at(i, i);
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= l.at(k, ii) * x[k];
    x[ii] = acc / l.at(ii, ii);
  }
  return x;
}

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace reltrace
