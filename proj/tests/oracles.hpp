#pragma once

// Test-only reference implementations, kept independent of the library's
// computation paths on purpose. Plain loops, no shared helpers.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "numerics/matrix.hpp"

namespace oracle {

// Plain triple-loop product, i/j/k order (library uses i/k/j).
inline reltrace::Matrix matmul_triple_loop(const reltrace::Matrix& a, const reltrace::Matrix& b) {
  reltrace::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      c.at(i, j) = acc;
    }
  }
  return c;
}

// Gaussian elimination with partial pivoting on a general dense system.
inline std::vector<double> solve_gaussian_elimination(reltrace::Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::runtime_error("oracle solve: bad shapes");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
    }
    if (std::fabs(a.at(pivot, col)) < 1e-14) throw std::runtime_error("oracle solve: singular");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a.at(col, j), a.at(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a.at(r, col) / a.at(col, col);
      for (std::size_t j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= a.at(ii, j) * x[j];
    x[ii] = acc / a.at(ii, ii);
  }
  return x;
}

}  // namespace oracle
