#include "orars/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "orars/error.hpp"

namespace orars {

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw ShapeError("jacobi_eigen requires a square matrix");

  Matrix a = symmetric;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return s;
  };
  double scale = 0.0;
  for (const double x : a.data()) scale += x * x;
  const double threshold = tolerance * tolerance * std::max(scale, 1e-300);

  for (int sweep = 0; sweep < max_sweeps && off_diagonal() > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p, q) (Golub & Van Loan, sym.schur2).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

PcaResult pca_project(const Matrix& samples, std::size_t k) {
  const std::size_t n = samples.rows();
  const std::size_t dim = samples.cols();
  if (n < 2) throw ShapeError("pca_project needs at least 2 samples");
  if (k == 0 || k > dim) {
    throw ShapeError("pca component count " + std::to_string(k) + " outside [1, " +
                     std::to_string(dim) + "]");
  }

  PcaResult r;
  r.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) r.mean[j] += samples(i, j);
  for (auto& m : r.mean) m /= static_cast<double>(n);

  Matrix centred(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j) centred(i, j) = samples(i, j) - r.mean[j];

  Matrix cov(dim, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = centred.row(i);
    for (std::size_t p = 0; p < dim; ++p)
      for (std::size_t q = p; q < dim; ++q) cov(p, q) += row[p] * row[q];
  }
  for (std::size_t p = 0; p < dim; ++p) {
    for (std::size_t q = p; q < dim; ++q) {
      cov(p, q) /= static_cast<double>(n - 1);
      cov(q, p) = cov(p, q);
    }
  }

  const auto eig = jacobi_eigen(cov);
  r.components = Matrix(dim, k);
  r.variances.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t largest = 0;
    for (std::size_t i = 1; i < dim; ++i) {
      if (std::abs(eig.vectors(i, c)) > std::abs(eig.vectors(largest, c))) largest = i;
    }
    const double sign = eig.vectors(largest, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < dim; ++i) r.components(i, c) = sign * eig.vectors(i, c);
  }

  r.projected = Matrix(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) s += centred(i, j) * r.components(j, c);
      r.projected(i, c) = s;
    }
  return r;
}

}  // namespace orars
