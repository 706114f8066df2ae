#pragma once

#include <cstddef>
#include <vector>

#include "tailpca/extremes.hpp"
#include "tailpca/pca.hpp"

namespace tailpca::dimension {

// One diagnostic row of the selection table.
struct DimensionRow {
    std::size_t p = 0;
    double captured = 0.0;   // sum of the top-p eigenvalues
    double sigma_hat = 0.0;  // spread of the projected squared norms
    double threshold = 0.0;  // tau + k^{-1/2} z_beta sigma_hat
};

struct DimensionSelection {
    std::size_t p_hat = 0;
    double tau = 0.0;
    double beta = 0.0;
    std::vector<DimensionRow> per_p;  // one row per p = 1..d
};

// Sample standard deviation of |proj(Theta)|^2 over the exceedance angles,
// centered at the captured mass of the fit (their mean when the fit comes
// from the same sample). Requires at least two exceedances.
double sigma_hat_p(const extremes::AngularSample& sample, const pca::PcaFit& fit);

// Smallest p whose captured mass exceeds tau + k^{-1/2} z_beta sigma_hat_p.
// The captured sequence reaches the trace of sigma at p = d with a zero
// spread for unit angles, so the scan terminates there; if even the last row
// fails the strict inequality, p_hat = d is forced.
DimensionSelection select_dimension(const extremes::AngularSample& sample,
                                    const extremes::MomentMatrix& sigma, double tau, double beta);

}  // namespace tailpca::dimension
