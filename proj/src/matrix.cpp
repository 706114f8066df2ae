#include "tailpca/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace tailpca::linalg {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix& Matrix::operator+=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch in +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch in -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

double Matrix::trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_ && i < cols_; ++i) s += (*this)(i, i);
    return s;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double Matrix::one_norm() const {
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) s += std::fabs((*this)(i, j));
        if (s > best) best = s;
    }
    return best;
}

double Matrix::max_abs() const {
    double best = 0.0;
    for (double v : data_) best = std::max(best, std::fabs(v));
    return best;
}

bool Matrix::is_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Matrix::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matrix shape mismatch in *");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double v = a(i, l);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += v * b(l, j);
        }
    return c;
}

Matrix operator*(double s, Matrix a) { return a *= s; }

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
    if (a.cols() != x.size()) throw std::invalid_argument("matrix/vector shape mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double hs_inner(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("hs_inner: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

double hs_norm(const Matrix& a) { return a.frobenius_norm(); }

Matrix expm(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("expm: non-square input");
    if (!m.is_finite()) throw std::invalid_argument("expm: non-finite entries");
    const std::size_t d = m.rows();

    // Scale down so the Taylor series at order 12 is exact to double precision,
    // then square back up.
    const double norm = m.one_norm();
    int squarings = static_cast<int>(std::ceil(std::log2(std::max(1.0, norm)))) + 3;
    Matrix a = std::pow(0.5, squarings) * m;

    Matrix result = Matrix::identity(d);
    Matrix term = Matrix::identity(d);
    for (int order = 1; order <= 12; ++order) {
        term = (1.0 / order) * (term * a);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

Matrix givens_rotation(std::size_t d, std::size_t i, std::size_t j, double phi) {
    if (i == j) throw std::invalid_argument("givens_rotation: equal axes");
    if (i >= d || j >= d) throw std::invalid_argument("givens_rotation: axis out of range");
    Matrix g = Matrix::identity(d);
    const double c = std::cos(phi), s = std::sin(phi);
    g(i, i) = c;
    g(j, j) = c;
    g(i, j) = -s;
    g(j, i) = s;
    return g;
}

}  // namespace tailpca::linalg
