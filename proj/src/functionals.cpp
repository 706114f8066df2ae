#include "tailpca/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tailpca/dimension.hpp"
#include "tailpca/parallel.hpp"
#include "tailpca/pca.hpp"

namespace tailpca::functionals {

namespace {

double clamped_pow(double x, double alpha) { return std::pow(std::max(x, 0.0), alpha); }

std::size_t measure_dim(const extremes::DiscreteAngularMeasure& h) {
    return h.atoms.empty() ? 0 : h.atoms.front().size();
}

void require_params(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm,
                    bool needs_alpha) {
    if (prm.p_model == 0) throw std::invalid_argument("p_model must be at least 1");
    if (needs_alpha && !(prm.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!h.atoms.empty() && prm.p_model > measure_dim(h))
        throw std::invalid_argument("p_model exceeds the atom dimension");
}

}  // namespace

PcaMeasureEstimate pca_angular_measure(const extremes::DataMatrix& data,
                                       const EstimatorConfig& cfg) {
    if (cfg.k_tilde < 1 || cfg.k_tilde > cfg.k || cfg.k + 1 > data.n())
        throw std::invalid_argument("estimator config needs 1 <= k_tilde <= k <= n-1");

    const auto fit_sample = extremes::extract_exceedances(data, cfg.k_tilde);
    const auto fit_moment = extremes::empirical_moment_matrix(fit_sample);

    std::size_t p = 0;
    if (const auto* fixed = std::get_if<FixedDimension>(&cfg.dim_mode)) {
        if (fixed->p < 1 || fixed->p > data.d())
            throw std::invalid_argument("fixed dimension must lie in 1..d");
        p = fixed->p;
    } else {
        const auto& autod = std::get<AutoDimension>(cfg.dim_mode);
        p = dimension::select_dimension(fit_sample, fit_moment, autod.tau, autod.beta).p_hat;
    }
    const auto fit = pca::fit_pca(fit_moment, p);
    const auto& proj = fit.projection.matrix();

    const auto atom_sample = extremes::extract_exceedances(data, cfg.k);
    const double w = 1.0 / static_cast<double>(cfg.k);

    PcaMeasureEstimate est;
    est.p = p;
    for (const auto& theta : atom_sample.angles) {
        std::vector<double> y(theta.size(), 0.0);
        double sq = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            for (std::size_t j = 0; j < y.size(); ++j) y[i] += proj(i, j) * theta[j];
            sq += y[i] * y[i];
        }
        const double nrm = std::sqrt(sq);
        if (nrm < 1e-15) {
            est.mass_deficit += w;
            continue;
        }
        for (double& v : y) v /= nrm;
        est.measure.atoms.push_back(std::move(y));
        est.measure.weights.push_back(w);
    }
    if (est.measure.atoms.empty())
        throw std::invalid_argument("pca angular measure has no surviving atoms");
    return est;
}

double functional_i(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm) {
    require_params(h, prm, false);
    std::vector<double> terms;
    terms.reserve(h.atoms.size());
    for (std::size_t a = 0; a < h.atoms.size(); ++a) {
        double mean = 0.0;
        for (std::size_t j = 0; j < prm.p_model; ++j) mean += h.atoms[a][j];
        mean /= static_cast<double>(prm.p_model);
        terms.push_back(mean > prm.t_i ? h.weights[a] : 0.0);
    }
    return parallel::pairwise_sum(terms);
}

double functional_ii(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm) {
    require_params(h, prm, true);
    const std::size_t d = measure_dim(h);
    std::vector<double> terms;
    terms.reserve(h.atoms.size());
    for (std::size_t a = 0; a < h.atoms.size(); ++a) {
        const auto& x = h.atoms[a];
        double lo = x[0];
        for (std::size_t j = 1; j < prm.p_model; ++j) lo = std::min(lo, x[j]);
        double hi = 0.0;
        for (std::size_t j = prm.p_model; j < d; ++j) hi = std::max(hi, x[j]);
        const double v = clamped_pow(lo, prm.alpha) - clamped_pow(hi, prm.alpha);
        terms.push_back(h.weights[a] * std::max(v, 0.0));
    }
    return parallel::pairwise_sum(terms);
}

double functional_iii(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm) {
    require_params(h, prm, true);
    const std::size_t d = measure_dim(h);
    std::vector<double> num, den;
    num.reserve(h.atoms.size());
    den.reserve(h.atoms.size());
    for (std::size_t a = 0; a < h.atoms.size(); ++a) {
        const auto& x = h.atoms[a];
        num.push_back(h.weights[a] * clamped_pow(x[0], prm.alpha));
        double hi = 0.0;
        for (std::size_t j = 0; j < d; ++j) hi = std::max(hi, x[j]);
        den.push_back(h.weights[a] * clamped_pow(hi, prm.alpha));
    }
    const double denominator = parallel::pairwise_sum(den);
    if (denominator == 0.0)
        throw std::invalid_argument("functional denominator vanishes on this measure");
    return parallel::pairwise_sum(num) / denominator;
}

double functional_iv(const extremes::DiscreteAngularMeasure& h, const TailFunctionalParams& prm) {
    require_params(h, prm, true);
    const std::size_t d = measure_dim(h);
    std::vector<double> terms;
    terms.reserve(h.atoms.size());
    for (std::size_t a = 0; a < h.atoms.size(); ++a) {
        const auto& x = h.atoms[a];
        double lo = x[0];
        for (std::size_t j = 1; j < d; ++j) lo = std::min(lo, x[j]);
        terms.push_back(h.weights[a] * clamped_pow(lo, prm.alpha));
    }
    return parallel::pairwise_sum(terms);
}

extremes::DataMatrix rank_frechet_standardize(const extremes::DataMatrix& data) {
    const std::size_t n = data.n();
    if (n < 2) throw std::invalid_argument("standardization needs at least two observations");
    extremes::DataMatrix out(n, data.d());
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < data.d(); ++j) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return data.at(a, j) < data.at(b, j); });
        if (data.at(order.front(), j) == data.at(order.back(), j))
            throw std::invalid_argument("column " + std::to_string(j + 1) + " is constant");
        for (std::size_t r = 0; r < n; ++r) {
            const double u = static_cast<double>(r + 1) / static_cast<double>(n + 1);
            out.at(order[r], j) = -1.0 / std::log(u);
        }
    }
    return out;
}

void write_measure_csv(const std::string& path, const extremes::DiscreteAngularMeasure& h) {
    if (h.atoms.size() != h.weights.size())
        throw std::invalid_argument("measure has mismatched atom and weight counts");
    if (h.atoms.empty()) throw std::invalid_argument("refusing to write an empty measure");
    const std::size_t d = h.atoms.front().size();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t j = 0; j < d; ++j) out << (j ? ",x" : "x") << (j + 1);
    out << ",weight\n";
    char buf[64];
    for (std::size_t a = 0; a < h.atoms.size(); ++a) {
        if (h.atoms[a].size() != d)
            throw std::invalid_argument("measure atoms have inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", h.atoms[a][j]);
            if (j) out << ",";
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", h.weights[a]);
        out << "," << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path);
}

extremes::DiscreteAngularMeasure read_measure_csv(const std::string& path) {
    const auto table = extremes::read_data_csv(path);
    const std::size_t d = table.d() - 1;
    if (d < 2) throw std::invalid_argument("measure file needs at least two coordinate columns");
    extremes::DiscreteAngularMeasure h;
    h.atoms.reserve(table.n());
    h.weights.reserve(table.n());
    for (std::size_t i = 0; i < table.n(); ++i) {
        std::vector<double> atom(d);
        for (std::size_t j = 0; j < d; ++j) atom[j] = table.at(i, j);
        h.atoms.push_back(std::move(atom));
        h.weights.push_back(table.at(i, d));
    }
    return h;
}

}  // namespace tailpca::functionals
