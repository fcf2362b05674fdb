#pragma once

#include <cstddef>
#include <vector>

namespace qki {

// Dense row-major matrix of doubles. Minimal by design: only what the
// eigensolver, PCA, and kernel post-processing need.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
std::vector<std::vector<double>> matrix_rows(const Matrix& m);

// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
// eigenvalues are sorted descending; eigenvectors.at(r, k) is component r of
// the eigenvector for eigenvalues[k] (eigenvectors stored as columns).
struct SymmetricEigen {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

// Throws std::invalid_argument if m is not square or not symmetric to within
// `sym_tol` (relative to the largest absolute entry).
SymmetricEigen eigen_symmetric(const Matrix& m, double sym_tol = 1e-9);

}  // namespace qki
