#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace decompnet {

using Vector = std::vector<double>;

/// Dense row-major matrix. Small sizes only (layer weights, N x N Gram systems).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);

  static Matrix identity(std::size_t n);
  bool operator==(const Matrix&) const = default;
};

namespace linalg {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);

Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector hadamard(std::span<const double> a, std::span<const double> b);

// Returns the norm before scaling; leaves v untouched when the norm is zero.
double normalize(std::span<double> v);

Vector matvec(const Matrix& m, std::span<const double> x);
Vector matvec_transposed(const Matrix& m, std::span<const double> x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// A^T A for a tall matrix.
Matrix gram(const Matrix& a);

// m += a * x y^T
void add_outer(double a, std::span<const double> x, std::span<const double> y, Matrix& m);

double frobenius_norm(const Matrix& m);

bool all_finite(std::span<const double> v);

// Solves S x = b for symmetric positive definite S by Cholesky.
// Throws NumericError when S is not numerically positive definite.
Vector cholesky_solve(const Matrix& spd, std::span<const double> b);

struct SymmetricEigen {
  Vector values;  // descending
  Matrix vectors; // column j pairs with values[j]
};

// Cyclic Jacobi rotations; intended for the tiny matrices this project needs.
SymmetricEigen symmetric_eigen(const Matrix& s, double tol = 1e-15, int max_sweeps = 100);

}  // namespace linalg
}  // namespace decompnet
