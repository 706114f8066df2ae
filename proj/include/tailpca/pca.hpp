#pragma once

#include <cstddef>
#include <vector>

#include "tailpca/eigen.hpp"
#include "tailpca/extremes.hpp"
#include "tailpca/matrix.hpp"

namespace tailpca::pca {

struct PcaFit {
    linalg::SymmetricEigen eigen;
    std::size_t p = 0;
    linalg::ProjectionMatrix projection;
    double captured = 0.0;  // sum of the top p eigenvalues
};

// Eigendecompose the moment matrix and project onto the top-p eigenspace.
PcaFit fit_pca(const extremes::MomentMatrix& sigma, std::size_t p);

// One projection per eigenvalue cluster; mutually orthogonal, summing to I.
std::vector<linalg::ProjectionMatrix> cluster_projections(const linalg::SymmetricEigen& e,
                                                          const linalg::EigenClusters& c);

// Captured-mass gap between the optimal rank-p projection of sigma_truth and
// a candidate projection of the same rank. Nonnegative up to rounding.
double excess_risk(const extremes::MomentMatrix& sigma_truth, const linalg::ProjectionMatrix& pi_hat,
                   std::size_t p);

// Skew-symmetric matrix, validated on construction (A^T = -A within 1e-12).
class SkewMatrix {
public:
    explicit SkewMatrix(linalg::Matrix m);

    const linalg::Matrix& matrix() const { return matrix_; }
    std::size_t dim() const { return matrix_.rows(); }

private:
    linalg::Matrix matrix_;
};

// Spectral frame of a limit matrix: eigendecomposition, eigenvalue clusters,
// a split rank p with a non-degenerate gap, and the pair of complementary
// projections belonging to the split.
class EigenFrame {
public:
    EigenFrame(linalg::SymmetricEigen eigen, std::size_t p,
               double gap_tol = linalg::kDefaultGapTol);

    const linalg::SymmetricEigen& eigen() const { return eigen_; }
    const linalg::EigenClusters& clusters() const { return clusters_; }
    std::size_t p() const { return p_; }
    std::size_t d() const { return eigen_.dim(); }
    const linalg::Matrix& pi_star() const { return pi_star_; }
    const linalg::Matrix& pi_perp() const { return pi_perp_; }

    // Index J_p with N_{J_p} = p; throws when p is not a cluster boundary.
    std::size_t split_cluster_index() const;

private:
    linalg::SymmetricEigen eigen_;
    linalg::EigenClusters clusters_;
    std::size_t p_;
    linalg::Matrix pi_star_, pi_perp_;
};

// Cross-block part of a skew matrix w.r.t. the frame's split: keeps the
// blocks mapping the top space to its complement and vice versa.
SkewMatrix project_to_restricted_skew(const SkewMatrix& b, const EigenFrame& f);

// Conjugation of the frame's base projection by exp(k^{-1/2} A).
linalg::ProjectionMatrix local_projection(const EigenFrame& f, const SkewMatrix& a, std::size_t k);

// Second-order Taylor surrogate of local_projection; remainder O(k^{-3/2}).
linalg::Matrix local_projection_expansion(const EigenFrame& f, const SkewMatrix& a, std::size_t k);

// Linear maps between cross-split skew matrices and top-right-block matrices:
// s_lambda scales the (i <= p < j) eigen-blocks by sqrt(lambda_i - lambda_j),
// t_lambda divides by it, and tbar_lambda(B) = t_lambda(B) - t_lambda(B)^T
// inverts s_lambda.
linalg::Matrix s_lambda(const SkewMatrix& a, const EigenFrame& f);
linalg::Matrix t_lambda(const linalg::Matrix& b, const EigenFrame& f);
SkewMatrix tbar_lambda(const linalg::Matrix& b, const EigenFrame& f);

// Gaussian-limit deviation of the PCA projection around the optimum, for a
// split at cluster boundary p: cross-cluster blocks of U scaled by inverse
// eigenvalue-cluster gaps.
linalg::Matrix limit_projection_deviation(const linalg::Matrix& u, const EigenFrame& f,
                                          std::size_t p);

// Limit law of k * excess risk: squared cross-cluster block norms of U over
// the cluster gaps.
double limit_excess_risk(const linalg::Matrix& u, const EigenFrame& f, std::size_t p);

// Unique maximizer of the local limit process, computed from rank-one
// eigenvector products (an independent route from tbar_lambda(t_lambda(U))).
SkewMatrix local_maximizer(const linalg::Matrix& u, const EigenFrame& f);

// Deterministic eigenvalue part of the finite-sample excess-risk bound:
// min over admissible index pairs of the k^{-1}-scaled inverse-gap term plus
// the spectral slack term.
double excess_risk_bound(const std::vector<double>& lambda, std::size_t p, std::size_t k);

}  // namespace tailpca::pca
