#include "tailpca/dimension.hpp"

#include <cmath>
#include <stdexcept>

#include "tailpca/eigen.hpp"
#include "tailpca/rng.hpp"

namespace tailpca::dimension {

namespace {

// theta^T proj theta = |proj theta|^2 for a projection matrix.
double projected_square_norm(const linalg::Matrix& proj, const std::vector<double>& theta) {
    double sq = 0.0;
    for (std::size_t i = 0; i < proj.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < proj.cols(); ++j) row += proj(i, j) * theta[j];
        sq += theta[i] * row;
    }
    return sq;
}

double spread_of_projected_norms(const extremes::AngularSample& sample, const linalg::Matrix& proj,
                                 double captured) {
    const std::size_t m = sample.angles.size();
    double acc = 0.0;
    for (const auto& theta : sample.angles) {
        const double dev = projected_square_norm(proj, theta) - captured;
        acc += dev * dev;
    }
    return std::sqrt(acc / static_cast<double>(m - 1));
}

void require_enough_angles(const extremes::AngularSample& sample) {
    if (sample.angles.size() < 2)
        throw std::invalid_argument("dimension selection needs at least two exceedance angles");
}

}  // namespace

double sigma_hat_p(const extremes::AngularSample& sample, const pca::PcaFit& fit) {
    require_enough_angles(sample);
    if (fit.projection.matrix().rows() != sample.d())
        throw std::invalid_argument("fit dimension does not match the sample dimension");
    return spread_of_projected_norms(sample, fit.projection.matrix(), fit.captured);
}

DimensionSelection select_dimension(const extremes::AngularSample& sample,
                                    const extremes::MomentMatrix& sigma, double tau, double beta) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
    require_enough_angles(sample);
    const std::size_t d = sample.d();
    if (sigma.matrix.rows() != d || sigma.matrix.cols() != d)
        throw std::invalid_argument("moment matrix dimension does not match the sample");

    const auto eig = linalg::symmetric_eigh(sigma.matrix);
    const double z = rng::normal_quantile(beta);
    const double root_inv_k = 1.0 / std::sqrt(static_cast<double>(sample.angles.size()));

    DimensionSelection sel;
    sel.tau = tau;
    sel.beta = beta;
    sel.per_p.reserve(d);
    double captured = 0.0;
    for (std::size_t p = 1; p <= d; ++p) {
        captured += eig.eigenvalues[p - 1];
        const auto proj = linalg::top_p_projection(eig, p);
        const double sig = spread_of_projected_norms(sample, proj.matrix(), captured);
        const double threshold = tau + root_inv_k * z * sig;
        sel.per_p.push_back({p, captured, sig, threshold});
        if (sel.p_hat == 0 && captured > threshold) sel.p_hat = p;
    }
    if (sel.p_hat == 0) sel.p_hat = d;
    return sel;
}

}  // namespace tailpca::dimension
