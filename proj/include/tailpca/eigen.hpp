#pragma once

#include <cstddef>
#include <vector>

#include "tailpca/matrix.hpp"

namespace tailpca::linalg {

// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending,
// eigenvectors stored as matched orthonormal columns.
struct SymmetricEigen {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;

    std::size_t dim() const { return eigenvalues.size(); }
};

// Grouping of sorted eigenvalues into near-equal clusters.
// boundaries = (N_1 < ... < N_m = d); cluster j spans indices (N_{j-1}, N_j].
struct EigenClusters {
    std::vector<std::size_t> boundaries;
    std::vector<double> values;  // one representative (mean) per cluster, strictly decreasing

    std::size_t count() const { return boundaries.size(); }
};

// Symmetric idempotent matrix with its rank; validated on construction.
struct ProjectionMatrix {
    ProjectionMatrix(Matrix m, std::size_t rank);

    const Matrix& matrix() const { return matrix_; }
    std::size_t rank() const { return rank_; }

private:
    Matrix matrix_;
    std::size_t rank_;
};

// Cyclic Jacobi eigensolver. Deterministic ordering: descending eigenvalues,
// each eigenvector sign-normalized (first non-negligible entry positive), and
// eigenvector columns of near-equal eigenvalues ordered lexicographically.
SymmetricEigen symmetric_eigh(const Matrix& s);

// Projection onto the span of the top p eigenvectors.
ProjectionMatrix top_p_projection(const SymmetricEigen& e, std::size_t p);

// Merge consecutive eigenvalues whose gap is at most gap_tol.
EigenClusters cluster_eigenvalues(const std::vector<double>& lambda, double gap_tol);

inline constexpr double kDefaultGapTol = 1e-8;

}  // namespace tailpca::linalg
