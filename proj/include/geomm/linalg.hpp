#pragma once

#include <cstddef>
#include <vector>

namespace geomm {

/// Dense row-major matrix of doubles. Sized for desk-scale statistics work
/// (dimensions up to a few hundred), not for large numerics.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;

  static Matrix identity(std::size_t n);
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// y = A x
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Throws std::runtime_error when a pivot is not strictly positive (the
/// matrix is singular or indefinite); nothing is patched silently.
Matrix cholesky(const Matrix& a);

/// Solves L X = B for X with L lower triangular (forward substitution).
Matrix solve_lower(const Matrix& l, const Matrix& b);

/// Solves L^T X = B for X with L lower triangular (backward substitution).
Matrix solve_lower_transposed(const Matrix& l, const Matrix& b);

struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

/// Leading `count` eigenpairs of a symmetric matrix by deflated power
/// iteration with a fixed deterministic start. Eigenvalues come out in
/// nonincreasing order. Intended for PSD matrices with modest dimension.
std::vector<EigenPair> leading_symmetric_eigen(Matrix a, std::size_t count,
                                               double tol = 1e-10,
                                               std::size_t max_iters = 10000);

}  // namespace geomm
