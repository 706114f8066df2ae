#include "tailpca/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tailpca::linalg {

ProjectionMatrix::ProjectionMatrix(Matrix m, std::size_t rank) : matrix_(std::move(m)), rank_(rank) {
    if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("projection: non-square");
    if (!matrix_.is_symmetric(1e-10)) throw std::invalid_argument("projection: not symmetric");
    const Matrix sq = matrix_ * matrix_;
    if ((sq - matrix_).max_abs() > 1e-9) throw std::invalid_argument("projection: not idempotent");
    if (std::fabs(matrix_.trace() - static_cast<double>(rank_)) > 1e-9)
        throw std::invalid_argument("projection: trace does not match rank");
}

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Lexicographic comparison of eigenvector columns, used only to fix an
// arbitrary-but-deterministic order inside groups of equal eigenvalues.
bool column_less(const Matrix& v, std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < v.rows(); ++i) {
        if (v(i, a) < v(i, b)) return true;
        if (v(i, a) > v(i, b)) return false;
    }
    return false;
}

}  // namespace

SymmetricEigen symmetric_eigh(const Matrix& s) {
    if (s.rows() != s.cols()) throw std::invalid_argument("symmetric_eigh: non-square input");
    if (s.rows() == 0) throw std::invalid_argument("symmetric_eigh: empty input");
    if (s.rows() > 10000) throw std::invalid_argument("symmetric_eigh: dimension above 10000");
    if (!s.is_finite()) throw std::invalid_argument("symmetric_eigh: non-finite entries");
    if (!s.is_symmetric(1e-12 * std::max(1.0, s.max_abs())))
        throw std::invalid_argument("symmetric_eigh: input not symmetric");

    const std::size_t d = s.rows();
    Matrix a = s;
    Matrix v = Matrix::identity(d);
    const double target = 1e-14 * s.frobenius_norm();

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (offdiag_frobenius(a) <= target) break;
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;

                for (std::size_t i = 0; i < d; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - sn * aiq;
                    a(i, q) = sn * aip + c * aiq;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    const double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - sn * aqj;
                    a(q, j) = sn * apj + c * aqj;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - sn * viq;
                    v(i, q) = sn * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymmetricEigen out;
    out.eigenvalues.resize(d);
    out.eigenvectors = Matrix(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }

    // Deterministic basis inside tie groups: positive leading sign, then
    // lexicographic column order.
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < d; ++i) {
            const double e = out.eigenvectors(i, j);
            if (std::fabs(e) > 1e-12) {
                if (e < 0.0)
                    for (std::size_t r = 0; r < d; ++r) out.eigenvectors(r, j) = -out.eigenvectors(r, j);
                break;
            }
        }
    }
    std::size_t lo = 0;
    while (lo < d) {
        std::size_t hi = lo + 1;
        while (hi < d && out.eigenvalues[hi - 1] - out.eigenvalues[hi] <= 1e-12) ++hi;
        if (hi - lo > 1) {
            std::vector<std::size_t> idx(hi - lo);
            std::iota(idx.begin(), idx.end(), lo);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
                return column_less(out.eigenvectors, x, y);
            });
            Matrix tmp(d, hi - lo);
            for (std::size_t j = 0; j < idx.size(); ++j)
                for (std::size_t i = 0; i < d; ++i) tmp(i, j) = out.eigenvectors(i, idx[j]);
            for (std::size_t j = 0; j < idx.size(); ++j)
                for (std::size_t i = 0; i < d; ++i) out.eigenvectors(i, lo + j) = tmp(i, j);
        }
        lo = hi;
    }

    // Post checks: orthonormality and reconstruction within contract tolerances.
    const Matrix& vv = out.eigenvectors;
    Matrix gram = vv.transpose() * vv;
    if ((gram - Matrix::identity(d)).max_abs() > 1e-10)
        throw std::runtime_error("symmetric_eigh: eigenvector basis lost orthonormality");
    Matrix rec(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < d; ++l) acc += vv(i, l) * out.eigenvalues[l] * vv(j, l);
            rec(i, j) = acc;
        }
    if ((rec - s).max_abs() > 1e-10 * std::max(1.0, s.max_abs()))
        throw std::runtime_error("symmetric_eigh: reconstruction check failed");

    return out;
}

ProjectionMatrix top_p_projection(const SymmetricEigen& e, std::size_t p) {
    const std::size_t d = e.dim();
    if (p < 1 || p > d) throw std::invalid_argument("top_p_projection: rank out of range");
    Matrix pi(d, d);
    for (std::size_t l = 0; l < p; ++l)
        for (std::size_t i = 0; i < d; ++i) {
            const double vi = e.eigenvectors(i, l);
            if (vi == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j) pi(i, j) += vi * e.eigenvectors(j, l);
        }
    // Exact symmetry regardless of rounding in the accumulation above.
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double m = 0.5 * (pi(i, j) + pi(j, i));
            pi(i, j) = m;
            pi(j, i) = m;
        }
    return ProjectionMatrix(std::move(pi), p);
}

EigenClusters cluster_eigenvalues(const std::vector<double>& lambda, double gap_tol) {
    if (gap_tol <= 0.0) throw std::invalid_argument("cluster_eigenvalues: gap_tol must be positive");
    if (lambda.empty()) throw std::invalid_argument("cluster_eigenvalues: empty input");
    for (std::size_t i = 1; i < lambda.size(); ++i)
        if (lambda[i - 1] < lambda[i]) throw std::invalid_argument("cluster_eigenvalues: input not sorted");

    EigenClusters c;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= lambda.size(); ++i) {
        if (i == lambda.size() || lambda[i - 1] - lambda[i] > gap_tol) {
            double mean = 0.0;
            for (std::size_t j = start; j < i; ++j) mean += lambda[j];
            mean /= static_cast<double>(i - start);
            c.boundaries.push_back(i);
            c.values.push_back(mean);
            start = i;
        }
    }
    return c;
}

}  // namespace tailpca::linalg
