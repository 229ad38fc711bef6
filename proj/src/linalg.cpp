#include "nlgpc/linalg.hpp"

#include <cmath>

#include "nlgpc/errors.hpp"

namespace nlgpc {

Vec matvec(const Mat& m, const Vec& x) {
  if (x.size() != m.cols) throw DimensionError("matvec: vector length != matrix cols");
  Vec y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = &m.a[r * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions differ");
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Mat transpose(const Mat& m) {
  Mat out(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
  return out;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

std::optional<Mat> cholesky(const Mat& m) {
  if (m.rows != m.cols) return std::nullopt;
  const std::size_t n = m.rows;
  Mat lower(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = m(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= lower(i, k) * lower(j, k);
      lower(i, j) = acc / ljj;
    }
  }
  return lower;
}

Vec cholesky_solve(const Mat& lower, const Vec& b) {
  const std::size_t n = lower.rows;
  if (b.size() != n) throw DimensionError("cholesky_solve: rhs length mismatch");
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b[i];
    for (std::size_t k = 0; k < i; ++k) acc -= lower(i, k) * y[k];
    y[i] = acc / lower(i, i);
  }
  Vec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= lower(k, ii) * x[k];
    x[ii] = acc / lower(ii, ii);
  }
  return x;
}

}  // namespace nlgpc
