#include "tailpca/pca.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tailpca::pca {

using linalg::Matrix;

PcaFit fit_pca(const extremes::MomentMatrix& sigma, std::size_t p) {
    const std::size_t d = sigma.matrix.rows();
    if (p < 1 || p > d) throw std::invalid_argument("fit_pca: rank out of range");
    PcaFit fit{linalg::symmetric_eigh(sigma.matrix), p,
               linalg::ProjectionMatrix(Matrix::identity(1), 1), 0.0};
    fit.projection = linalg::top_p_projection(fit.eigen, p);
    for (std::size_t i = 0; i < p; ++i) fit.captured += fit.eigen.eigenvalues[i];
    return fit;
}

std::vector<linalg::ProjectionMatrix> cluster_projections(const linalg::SymmetricEigen& e,
                                                          const linalg::EigenClusters& c) {
    const std::size_t d = e.dim();
    if (c.boundaries.empty() || c.boundaries.back() != d)
        throw std::invalid_argument("cluster_projections: clusters do not cover the dimension");

    std::vector<linalg::ProjectionMatrix> out;
    std::size_t start = 0;
    for (std::size_t j = 0; j < c.count(); ++j) {
        const std::size_t stop = c.boundaries[j];
        Matrix pi(d, d);
        for (std::size_t m = start; m < stop; ++m)
            for (std::size_t r = 0; r < d; ++r) {
                const double vr = e.eigenvectors(r, m);
                for (std::size_t s = 0; s < d; ++s) pi(r, s) += vr * e.eigenvectors(s, m);
            }
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t s = r + 1; s < d; ++s) {
                const double mean = 0.5 * (pi(r, s) + pi(s, r));
                pi(r, s) = mean;
                pi(s, r) = mean;
            }
        out.emplace_back(std::move(pi), stop - start);
        start = stop;
    }
    return out;
}

double excess_risk(const extremes::MomentMatrix& sigma_truth,
                   const linalg::ProjectionMatrix& pi_hat, std::size_t p) {
    if (pi_hat.rank() != p) throw std::invalid_argument("excess_risk: projection rank mismatch");
    const PcaFit best = fit_pca(sigma_truth, p);
    return linalg::hs_inner(sigma_truth.matrix, best.projection.matrix()) -
           linalg::hs_inner(sigma_truth.matrix, pi_hat.matrix());
}

SkewMatrix::SkewMatrix(Matrix m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("skew: non-square");
    if (!matrix_.is_finite()) throw std::invalid_argument("skew: non-finite entries");
    for (std::size_t i = 0; i < matrix_.rows(); ++i)
        for (std::size_t j = i; j < matrix_.cols(); ++j)
            if (std::fabs(matrix_(i, j) + matrix_(j, i)) > 1e-12)
                throw std::invalid_argument("skew: A^T != -A");
}

EigenFrame::EigenFrame(linalg::SymmetricEigen eigen, std::size_t p, double gap_tol)
    : eigen_(std::move(eigen)),
      clusters_(linalg::cluster_eigenvalues(eigen_.eigenvalues, gap_tol)),
      p_(p) {
    const std::size_t d = eigen_.dim();
    if (p < 1 || p >= d) throw std::invalid_argument("EigenFrame: need 1 <= p < d");
    if (eigen_.eigenvalues[p - 1] - eigen_.eigenvalues[p] <= 1e-10)
        throw std::invalid_argument("EigenFrame: degenerate split, no unique optimal projection");
    pi_star_ = linalg::top_p_projection(eigen_, p).matrix();
    pi_perp_ = Matrix::identity(d) - pi_star_;
}

std::size_t EigenFrame::split_cluster_index() const {
    for (std::size_t j = 0; j < clusters_.count(); ++j)
        if (clusters_.boundaries[j] == p_) return j + 1;  // 1-based J_p
    throw std::invalid_argument("EigenFrame: split rank is not a cluster boundary");
}

namespace {

// Representation of b in the frame's eigenbasis: V^T b V.
Matrix to_eigen_basis(const Matrix& b, const EigenFrame& f) {
    const Matrix& v = f.eigen().eigenvectors;
    return v.transpose() * b * v;
}

Matrix from_eigen_basis(const Matrix& c, const EigenFrame& f) {
    const Matrix& v = f.eigen().eigenvectors;
    return v * c * v.transpose();
}

void require_restricted_skew(const SkewMatrix& a, const EigenFrame& f) {
    const Matrix& m = a.matrix();
    if (m.rows() != f.d()) throw std::invalid_argument("frame/matrix dimension mismatch");
    const Matrix top = f.pi_star() * m * f.pi_star();
    const Matrix bot = f.pi_perp() * m * f.pi_perp();
    if (top.max_abs() > 1e-10 || bot.max_abs() > 1e-10)
        throw std::invalid_argument("matrix has diagonal split-blocks: not in the restricted skew class");
}

void require_top_right_block(const Matrix& b, const EigenFrame& f) {
    if (b.rows() != f.d() || b.cols() != f.d())
        throw std::invalid_argument("frame/matrix dimension mismatch");
    if ((b * f.pi_star()).max_abs() > 1e-10 || (f.pi_perp() * b).max_abs() > 1e-10)
        throw std::invalid_argument("matrix is not supported on the top-right split block");
}

}  // namespace

SkewMatrix project_to_restricted_skew(const SkewMatrix& b, const EigenFrame& f) {
    if (b.dim() != f.d()) throw std::invalid_argument("frame/matrix dimension mismatch");
    Matrix m = f.pi_perp() * b.matrix() * f.pi_star() + f.pi_star() * b.matrix() * f.pi_perp();
    // Exactly antisymmetrize away the accumulation rounding.
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = 0.5 * (m(i, j) - m(j, i));
    return SkewMatrix(std::move(out));
}

linalg::ProjectionMatrix local_projection(const EigenFrame& f, const SkewMatrix& a, std::size_t k) {
    if (k < 1) throw std::invalid_argument("local_projection: k must be at least 1");
    if (a.dim() != f.d()) throw std::invalid_argument("frame/matrix dimension mismatch");
    const double eps = 1.0 / std::sqrt(static_cast<double>(k));
    Matrix scaled = a.matrix();
    scaled *= eps;
    Matrix neg = scaled;
    neg *= -1.0;
    Matrix m = linalg::expm(neg) * f.pi_star() * linalg::expm(scaled);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j) {
            const double mean = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = mean;
            m(j, i) = mean;
        }
    return linalg::ProjectionMatrix(std::move(m), f.p());
}

linalg::Matrix local_projection_expansion(const EigenFrame& f, const SkewMatrix& a, std::size_t k) {
    if (k < 1) throw std::invalid_argument("local_projection_expansion: k must be at least 1");
    if (a.dim() != f.d()) throw std::invalid_argument("frame/matrix dimension mismatch");
    const double eps = 1.0 / std::sqrt(static_cast<double>(k));
    const Matrix& am = a.matrix();
    const Matrix& pi = f.pi_star();
    const Matrix a2 = am * am;
    Matrix first = pi * am - am * pi;
    first *= eps;
    Matrix second = 0.5 * (pi * a2 + a2 * pi) - am * pi * am;
    second *= eps * eps;
    return pi + first + second;
}

linalg::Matrix s_lambda(const SkewMatrix& a, const EigenFrame& f) {
    require_restricted_skew(a, f);
    const auto& lam = f.eigen().eigenvalues;
    const std::size_t d = f.d(), p = f.p();
    Matrix c = to_eigen_basis(a.matrix(), f);
    Matrix out_c(d, d);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = p; j < d; ++j) out_c(i, j) = std::sqrt(lam[i] - lam[j]) * c(i, j);
    return from_eigen_basis(out_c, f);
}

linalg::Matrix t_lambda(const Matrix& b, const EigenFrame& f) {
    if (b.rows() != f.d() || b.cols() != f.d())
        throw std::invalid_argument("frame/matrix dimension mismatch");
    const auto& lam = f.eigen().eigenvalues;
    const std::size_t d = f.d(), p = f.p();
    Matrix c = to_eigen_basis(b, f);
    Matrix out_c(d, d);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = p; j < d; ++j) out_c(i, j) = c(i, j) / std::sqrt(lam[i] - lam[j]);
    return from_eigen_basis(out_c, f);
}

SkewMatrix tbar_lambda(const Matrix& b, const EigenFrame& f) {
    require_top_right_block(b, f);
    const Matrix t = t_lambda(b, f);
    return SkewMatrix(t - t.transpose());
}

namespace {

// Cluster index (1-based) of each eigenvalue position.
std::vector<std::size_t> position_clusters(const linalg::EigenClusters& c, std::size_t d) {
    std::vector<std::size_t> idx(d);
    std::size_t j = 0;
    for (std::size_t m = 0; m < d; ++m) {
        if (m >= c.boundaries[j]) ++j;
        idx[m] = j + 1;
    }
    return idx;
}

}  // namespace

linalg::Matrix limit_projection_deviation(const Matrix& u, const EigenFrame& f, std::size_t p) {
    if (u.rows() != f.d() || u.cols() != f.d())
        throw std::invalid_argument("frame/matrix dimension mismatch");
    if (!u.is_symmetric(1e-10)) throw std::invalid_argument("limit_projection_deviation: U not symmetric");
    const auto& c = f.clusters();
    std::size_t jp = 0;
    for (std::size_t j = 0; j < c.count(); ++j)
        if (c.boundaries[j] == p) jp = j + 1;
    if (jp == 0 || jp == c.count())
        throw std::invalid_argument("limit_projection_deviation: p is not an interior cluster boundary");

    const std::size_t d = f.d();
    const auto pos = position_clusters(c, d);
    Matrix cu = to_eigen_basis(u, f);
    Matrix out_c(d, d);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = p; b < d; ++b) {
            const double gap = c.values[pos[a] - 1] - c.values[pos[b] - 1];
            out_c(a, b) = cu(a, b) / gap;
            out_c(b, a) = out_c(a, b);
        }
    return from_eigen_basis(out_c, f);
}

double limit_excess_risk(const Matrix& u, const EigenFrame& f, std::size_t p) {
    if (u.rows() != f.d() || u.cols() != f.d())
        throw std::invalid_argument("frame/matrix dimension mismatch");
    if (!u.is_symmetric(1e-10)) throw std::invalid_argument("limit_excess_risk: U not symmetric");
    const auto& c = f.clusters();
    std::size_t jp = 0;
    for (std::size_t j = 0; j < c.count(); ++j)
        if (c.boundaries[j] == p) jp = j + 1;
    if (jp == 0 || jp == c.count())
        throw std::invalid_argument("limit_excess_risk: p is not an interior cluster boundary");

    const std::size_t d = f.d();
    const auto pos = position_clusters(c, d);
    Matrix cu = to_eigen_basis(u, f);
    double total = 0.0;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = p; b < d; ++b) {
            const double gap = c.values[pos[a] - 1] - c.values[pos[b] - 1];
            total += cu(a, b) * cu(a, b) / gap;
        }
    return total;
}

SkewMatrix local_maximizer(const Matrix& u, const EigenFrame& f) {
    if (u.rows() != f.d() || u.cols() != f.d())
        throw std::invalid_argument("frame/matrix dimension mismatch");
    if (!u.is_symmetric(1e-10)) throw std::invalid_argument("local_maximizer: U not symmetric");
    const std::size_t d = f.d(), p = f.p();
    const auto& lam = f.eigen().eigenvalues;
    const Matrix& v = f.eigen().eigenvectors;

    // Rank-one assembly: sum over (i <= p < j) of coefficient * (v_i v_j^T - v_j v_i^T).
    Matrix out(d, d);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = p; j < d; ++j) {
            double uij = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                double acc = 0.0;
                for (std::size_t s = 0; s < d; ++s) acc += u(r, s) * v(s, j);
                uij += v(r, i) * acc;
            }
            const double coeff = uij / (lam[i] - lam[j]);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t s = 0; s < d; ++s)
                    out(r, s) += coeff * (v(r, i) * v(s, j) - v(r, j) * v(s, i));
        }
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = r; s < d; ++s) {
            const double half = 0.5 * (out(r, s) - out(s, r));
            out(r, s) = half;
            out(s, r) = -half;
        }
    return SkewMatrix(std::move(out));
}

double excess_risk_bound(const std::vector<double>& lambda, std::size_t p, std::size_t k) {
    const std::size_t d = lambda.size();
    if (p < 1 || p >= d) throw std::invalid_argument("excess_risk_bound: need 1 <= p < d");
    if (k < 1) throw std::invalid_argument("excess_risk_bound: k must be at least 1");
    for (std::size_t i = 1; i < d; ++i)
        if (lambda[i - 1] < lambda[i]) throw std::invalid_argument("excess_risk_bound: input not sorted");

    // 1-based convention with lambda_0 = +inf and lambda_{d+1} = -inf; the
    // boundary reciprocals vanish and zero gaps send a pair to +inf.
    auto lam = [&](std::size_t idx) -> double {
        if (idx == 0) return std::numeric_limits<double>::infinity();
        if (idx == d + 1) return -std::numeric_limits<double>::infinity();
        return lambda[idx - 1];
    };
    auto inv_gap = [&](double a, double b) -> double {
        const double g = a - b;
        if (std::isinf(a) || std::isinf(b)) return 0.0;
        if (g <= 0.0) return std::numeric_limits<double>::infinity();
        return 1.0 / g;
    };

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i <= p; ++i)
        for (std::size_t j = p + 1; j <= d + 1; ++j) {
            const double inv_term = inv_gap(lam(i - 1), lam(p + 1)) + inv_gap(lam(p), lam(j));
            const double slack = lam(i) - lam(j - 1);
            const double value = inv_term / static_cast<double>(k) + slack;
            best = std::min(best, value);
        }
    return best;
}

}  // namespace tailpca::pca
