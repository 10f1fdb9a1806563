#include "geomm/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "geomm/rng.hpp"

namespace geomm {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("multiply: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
  if (a.cols != x.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix cholesky(const Matrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix not square");
  const std::size_t n = a.rows;
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > 0.0))
          throw std::runtime_error(
              "cholesky: matrix is numerically singular (pivot " +
              std::to_string(s) + " at " + std::to_string(i) + ")");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

Matrix solve_lower(const Matrix& l, const Matrix& b) {
  if (l.rows != l.cols || l.rows != b.rows)
    throw std::invalid_argument("solve_lower: dimension mismatch");
  const std::size_t n = l.rows;
  Matrix x = b;
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, j);
      x(i, j) = s / l(i, i);
    }
  }
  return x;
}

Matrix solve_lower_transposed(const Matrix& l, const Matrix& b) {
  if (l.rows != l.cols || l.rows != b.rows)
    throw std::invalid_argument("solve_lower_transposed: dimension mismatch");
  const std::size_t n = l.rows;
  Matrix x = b;
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x(k, j);
      x(ii, j) = s / l(ii, ii);
    }
  }
  return x;
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<EigenPair> leading_symmetric_eigen(Matrix a, std::size_t count,
                                               double tol,
                                               std::size_t max_iters) {
  if (a.rows != a.cols)
    throw std::invalid_argument("leading_symmetric_eigen: matrix not square");
  const std::size_t n = a.rows;
  if (count > n)
    throw std::invalid_argument("leading_symmetric_eigen: count exceeds dimension");

  std::vector<EigenPair> out;
  out.reserve(count);

  for (std::size_t j = 0; j < count; ++j) {
    DetRng rng(0x9e3779b97f4a7c15ULL + j);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);

    // Keep the iterate orthogonal to already-found eigenvectors; explicit
    // deflation below does the heavy lifting, this fights roundoff drift.
    auto reorthogonalize = [&](std::vector<double>& w) {
      for (const auto& p : out) {
        const double c = dot(w, p.vector);
        for (std::size_t i = 0; i < n; ++i) w[i] -= c * p.vector[i];
      }
    };

    reorthogonalize(v);
    double nv = norm2(v);
    if (nv == 0.0) {
      v.assign(n, 0.0);
      v[j % n] = 1.0;
      reorthogonalize(v);
      nv = norm2(v);
    }
    for (double& x : v) x /= nv;

    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
      std::vector<double> w = matvec(a, v);
      reorthogonalize(w);
      lambda = dot(v, w);
      const double nw = norm2(w);
      if (nw <= 1e-300) break;  // eigenvalue is numerically zero
      for (double& x : w) x /= nw;
      // residual ||A v - lambda v|| on the normalized iterate
      std::vector<double> r = matvec(a, w);
      const double lw = dot(w, r);
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = r[i] - lw * w[i];
        res += d * d;
      }
      v = std::move(w);
      lambda = lw;
      if (std::sqrt(res) <= tol * std::max(1.0, std::abs(lw))) break;
    }

    out.push_back({lambda, v});
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a(r, c) -= lambda * v[r] * v[c];
  }

  for (std::size_t i = 1; i < out.size(); ++i)
    for (std::size_t k = i; k > 0 && out[k].value > out[k - 1].value; --k)
      std::swap(out[k], out[k - 1]);
  return out;
}

}  // namespace geomm
