#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace nlgpc {

using Vec = std::vector<double>;

/// Dense row-major matrix, sized for the small systems this library solves
/// (horizon x channel blocks, tiny network layers).
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

Vec matvec(const Mat& m, const Vec& x);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& m);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);

/// In-place Cholesky factor of a symmetric matrix; nullopt when any pivot
/// is non-positive or non-finite.
std::optional<Mat> cholesky(const Mat& m);

/// Solve L Lᵀ x = b given the lower factor from cholesky().
Vec cholesky_solve(const Mat& lower, const Vec& b);

}  // namespace nlgpc
