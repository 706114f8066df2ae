#pragma once

#include <cstddef>
#include <vector>

namespace tailpca::linalg {

// Dense row-major matrix of doubles. Small and value-semantic; everything in
// this project is d x d with d at most a few hundred, so no cleverness.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix& operator+=(const Matrix& o);
    Matrix& operator-=(const Matrix& o);
    Matrix& operator*=(double s);

    Matrix transpose() const;
    double trace() const;
    double frobenius_norm() const;
    double one_norm() const;   // max absolute column sum
    double max_abs() const;

    bool is_finite() const;
    bool is_symmetric(double tol) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, Matrix a);

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x);

// Hilbert-Schmidt inner product tr(A B^T) = sum_ij a_ij b_ij.
double hs_inner(const Matrix& a, const Matrix& b);
double hs_norm(const Matrix& a);

// Matrix exponential by scaling-and-squaring over a truncated Taylor series.
// Accurate far beyond 1e-12 for the small (norm <= ~5) skew matrices used here.
Matrix expm(const Matrix& m);

// Identity with a 2x2 rotation block in the (i, j) plane.
Matrix givens_rotation(std::size_t d, std::size_t i, std::size_t j, double phi);

}  // namespace tailpca::linalg
