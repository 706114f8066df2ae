#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "tailpca/extremes.hpp"

namespace tailpca::functionals {

// Parameters of the four tail probabilities evaluated against a measure.
struct TailFunctionalParams {
    double alpha = 1.0;      // tail index of the standardized margins
    std::size_t p_model = 1; // subspace dimension the functionals refer to
    double t_i = 0.3;        // threshold of the first functional, in (0, p^{-1/2})
};

struct FixedDimension {
    std::size_t p;
};
struct AutoDimension {
    double tau;
    double beta;
};
using DimensionMode = std::variant<FixedDimension, AutoDimension>;

// k: exceedance budget for the measure atoms; k_tilde: budget for fitting
// the subspace (and selecting p in auto mode). Requires 1 <= k_tilde <= k <= n-1.
struct EstimatorConfig {
    std::size_t k = 0;
    std::size_t k_tilde = 0;
    DimensionMode dim_mode = FixedDimension{1};
};

struct PcaMeasureEstimate {
    extremes::DiscreteAngularMeasure measure;
    std::size_t p = 0;          // subspace dimension actually used
    double mass_deficit = 0.0;  // weight of atoms dropped for vanishing projection
};

// Fit a p-dimensional subspace on the k_tilde largest-norm observations,
// project the angles of the k largest-norm observations onto it, and
// renormalize to unit length. Weights are 1/k; atoms whose projection
// vanishes are dropped and their weight reported as mass_deficit.
PcaMeasureEstimate pca_angular_measure(const extremes::DataMatrix& data,
                                       const EstimatorConfig& cfg);

// (i)   H{x : mean of the first p coordinates > t_i}
// (ii)  integral of ((min_{j<=p} x_j)^alpha - (max_{j>p} x_j)^alpha)^+
// (iii) integral of (x_1)^alpha over the integral of (max_{j<=d} x_j)^alpha
// (iv)  integral of (min_{j<=d} x_j)^alpha
// Negative coordinates are clamped to zero inside the integrands of
// (ii)-(iv) before powering.
double functional_i(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm);
double functional_ii(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm);
double functional_iii(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm);
double functional_iv(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm);

// Per-column rank transform onto the unit-Frechet scale:
// x_ij -> -1/log(rank_ij / (n+1)), ties broken by input order.
extremes::DataMatrix rank_frechet_standardize(const extremes::DataMatrix& data);

// One atom per row: d coordinate columns followed by a weight column.
void write_measure_csv(const std::string& path, const extremes::DiscreteAngularMeasure& h);
extremes::DiscreteAngularMeasure read_measure_csv(const std::string& path);

}  // namespace tailpca::functionals
