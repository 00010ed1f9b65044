#pragma once

#include <cstddef>
#include <vector>

#include "orars/matrix.hpp"

namespace orars {

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k is the eigenvector of values[k]
};

// Cyclic Jacobi rotations; intended for small dense symmetric matrices.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-14,
                            int max_sweeps = 100);

struct PcaResult {
  std::vector<double> mean;        // per input dimension
  Matrix components;               // (dim, k), unit columns, largest |entry| positive
  std::vector<double> variances;   // top-k eigenvalues of the covariance, descending
  Matrix projected;                // (n, k)
};

// Mean-centred projection of the rows of `samples` onto the top-k principal axes.
PcaResult pca_project(const Matrix& samples, std::size_t k);

}  // namespace orars
