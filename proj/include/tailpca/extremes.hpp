#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tailpca/eigen.hpp"
#include "tailpca/matrix.hpp"

namespace tailpca::extremes {

// n observations in R^d, row-major. Entries are validated finite; zero rows
// are legal here and rejected by the operations that need angles.
class DataMatrix {
public:
    DataMatrix(std::size_t n, std::size_t d);

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }

    double& at(std::size_t i, std::size_t j) { return values_[i * d_ + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * d_, d_}; }
    std::span<double> row(std::size_t i) { return {values_.data() + i * d_, d_}; }

private:
    std::size_t n_, d_;
    std::vector<double> values_;
};

struct PolarPoint {
    double radius;
    std::vector<double> angle;
};

// T(x) = (|x|, x/|x|) with the Euclidean norm. Zero input is an error.
PolarPoint polar_transform(std::span<const double> x);

// The (k+1)-th largest value among the radii; requires 1 <= k <= n-1.
double threshold_select(const std::vector<double>& radii, std::size_t k);

// Angles and radii of the observations whose radius strictly exceeds the
// selected threshold. With ties there may be fewer than k of them.
struct AngularSample {
    double threshold = 0.0;
    std::size_t k = 0;
    std::size_t dim = 0;  // ambient dimension, kept even when ties leave no angles
    std::vector<std::vector<double>> angles;
    std::vector<double> radii;

    std::size_t d() const { return angles.empty() ? dim : angles.front().size(); }
};

AngularSample extract_exceedances(const DataMatrix& data, std::size_t k);

// (1/k) sum of angle outer products; the divisor stays k even when ties leave
// fewer than k exceedances.
struct MomentMatrix {
    linalg::Matrix matrix;
    std::size_t k = 0;
};

MomentMatrix empirical_moment_matrix(const AngularSample& sample);

// <Sigma, Pi> under the Hilbert-Schmidt pairing: the captured tail mass.
double empirical_risk(const MomentMatrix& sigma, const linalg::ProjectionMatrix& pi);

struct DiscreteAngularMeasure {
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;

    double total_mass() const;
};

DiscreteAngularMeasure empirical_angular_measure(const AngularSample& sample);

// CSV ingestion: optional header line, comma-separated numeric columns, one
// observation per row. Parse failures report 1-based row and column; rows that
// are entirely zero are rejected with their indices listed.
DataMatrix read_data_csv(const std::string& path);

// Writes with 17 significant digits so values round-trip exactly.
void write_data_csv(const std::string& path, const DataMatrix& data);

}  // namespace tailpca::extremes
