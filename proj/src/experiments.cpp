#include "tailpca/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "tailpca/svg.hpp"

namespace tailpca::experiments {
namespace {

constexpr std::size_t kBatches = 20;
constexpr std::size_t kModelChunk = 65536;

std::size_t cov_index(std::size_t d, std::size_t i, std::size_t j, std::size_t l, std::size_t m) {
    return ((i * d + j) * d + l) * d + m;
}

double mean_of(std::span<const double> v) {
    return parallel::pairwise_sum(v) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mu) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
    return std::sqrt(parallel::pairwise_sum(sq) / static_cast<double>(v.size() - 1));
}

double clamp_pow(double x, double alpha) { return std::pow(std::max(x, 0.0), alpha); }

std::size_t uniform_index(rng::RngStream& rs, std::size_t m) {
    const double u = rs.uniform();
    const auto idx = static_cast<std::size_t>(u * static_cast<double>(m));
    return std::min(idx, m - 1);
}

// Runs body(r) for r in [0, reps), serially or under OpenMP. Each replicate
// owns slot r of whatever the body writes, so the two modes are bit-identical;
// exceptions are captured per replicate and rethrown after the loop.
template <class Body>
void run_replicates(std::size_t reps, parallel::ExecMode mode, const Body& body) {
    std::vector<std::string> errors(reps);
    auto guarded = [&](std::size_t r) {
        try {
            body(r);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        } catch (...) {
            errors[r] = "unknown error";
        }
    };
    if (mode == parallel::ExecMode::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (long long r = 0; r < static_cast<long long>(reps); ++r)
            guarded(static_cast<std::size_t>(r));
#else
        for (std::size_t r = 0; r < reps; ++r) guarded(r);
#endif
    } else {
        for (std::size_t r = 0; r < reps; ++r) guarded(r);
    }
    for (std::size_t r = 0; r < reps; ++r)
        if (!errors[r].empty())
            throw std::runtime_error("replicate " + std::to_string(r) + ": " + errors[r]);
}

// Generates `total` model rows in fixed-size chunks (bounded memory, same
// stream order for a given seed) and hands each row to fn(index, row).
template <class RowFn>
void stream_model_rows(rng::RngStream& rs, const models::ModelSpec& spec, std::size_t total,
                       const RowFn& fn) {
    std::size_t done = 0;
    while (done < total) {
        const std::size_t m = std::min(kModelChunk, total - done);
        const extremes::DataMatrix block = models::sample_model(rs, spec, m);
        for (std::size_t i = 0; i < m; ++i) fn(done + i, block.row(i));
        done += m;
    }
}

void require_functional_params(const functionals::TailFunctionalParams& prm, std::size_t d) {
    if (prm.p_model < 1 || prm.p_model > d)
        throw std::invalid_argument("functional p_model must lie in [1, d]");
    if (!(prm.alpha > 0.0)) throw std::invalid_argument("functional alpha must be positive");
}

struct Integrands {
    double g1, g2, g4, num3, den3;
};

Integrands evaluate_integrands(std::span<const double> x, const functionals::TailFunctionalParams& prm) {
    const std::size_t d = x.size();
    const std::size_t p = prm.p_model;
    double head_sum = 0.0, head_min = std::numeric_limits<double>::infinity();
    double tail_max = -std::numeric_limits<double>::infinity();
    double all_min = std::numeric_limits<double>::infinity(), all_max = -all_min;
    for (std::size_t j = 0; j < d; ++j) {
        const double v = x[j];
        if (j < p) {
            head_sum += v;
            head_min = std::min(head_min, v);
        } else {
            tail_max = std::max(tail_max, v);
        }
        all_min = std::min(all_min, v);
        all_max = std::max(all_max, v);
    }
    Integrands out{};
    out.g1 = head_sum / static_cast<double>(p) > prm.t_i ? 1.0 : 0.0;
    const double hi = p == d ? 0.0 : clamp_pow(tail_max, prm.alpha);
    out.g2 = std::max(clamp_pow(head_min, prm.alpha) - hi, 0.0);
    out.num3 = clamp_pow(x[0], prm.alpha);
    out.den3 = clamp_pow(all_max, prm.alpha);
    out.g4 = clamp_pow(all_min, prm.alpha);
    return out;
}

bool angle_radius_independent(const models::ModelSpec& spec) {
    return spec.noise_sigma == 0.0 && spec.family != models::ModelFamily::gumbel;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx <= 0.0) throw std::runtime_error("degenerate regression: k grid has no spread");
    return sxy / sxx;
}

linalg::Matrix random_symmetric(rng::RngStream& rs, std::size_t d) {
    linalg::Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            const double g = rs.normal();
            m(i, j) = g;
            m(j, i) = g;
        }
    return m;
}

pca::SkewMatrix random_skew(rng::RngStream& rs, std::size_t d) {
    linalg::Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double g = rs.normal();
            m(i, j) = g;
            m(j, i) = -g;
        }
    return pca::SkewMatrix(std::move(m));
}

double limit_process_value(const linalg::Matrix& u, const linalg::Matrix& sigma,
                           const pca::EigenFrame& f, const pca::SkewMatrix& a) {
    const linalg::Matrix& am = a.matrix();
    const linalg::Matrix a2 = am * am;
    const linalg::Matrix diff = f.pi_star() - f.pi_perp();
    return 2.0 * linalg::hs_inner(u, f.pi_star() * am) + linalg::hs_inner(sigma, a2 * diff);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::array<const char*, 4> kFunctionalLabels = {"i", "ii", "iii", "iv"};

}  // namespace

std::pair<std::vector<double>, double> sample_limit_angle(rng::RngStream& rs,
                                                          const models::ModelSpec& spec) {
    models::require_valid(spec);
    std::vector<double> angle(spec.d, 0.0);
    if (spec.family == models::ModelFamily::gumbel) {
        if (spec.theta == 1.0) {
            // independent margins: mass splits evenly over the supported axes
            angle[uniform_index(rs, spec.p)] = 1.0;
            return {std::move(angle), 1.0};
        }
        // The model is a product of a tail-index-alpha factor and the lighter
        // vector z_j = E_j^{-1/(theta*alpha)} built from iid exponentials, so
        // the limit angle is z/||z|| under the ||z||^alpha-tilted law. The
        // naive weight ||z||^alpha is heavy-tailed; instead absorb its
        // dominant factor (min_j E_j)^{-1/theta} into the draw itself. Tilting
        // Exp(p) by m^{-1/theta} gives a Gamma(1 - 1/theta, rate p) minimum,
        // the gaps above it stay iid Exp(1), and the residual weight
        // ||z||^alpha / max_j z_j^alpha lies in [1, p^{alpha/2}].
        const double inv = -1.0 / (spec.theta * spec.alpha);
        const double m = rs.gamma(1.0 - 1.0 / spec.theta) / static_cast<double>(spec.p);
        const std::size_t imin = uniform_index(rs, spec.p);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < spec.p; ++j) {
            const double e = j == imin ? m : m + rs.exponential();
            const double z = std::pow(e, inv);
            angle[j] = z;
            norm2 += z * z;
        }
        const double norm = std::sqrt(norm2);
        for (std::size_t j = 0; j < spec.p; ++j) angle[j] /= norm;
        const double weight = std::pow(norm, spec.alpha) * std::pow(m, 1.0 / spec.theta);
        return {std::move(angle), weight};
    }
    const std::vector<double> w = models::sample_dirichlet(rs, models::effective_dirichlet_params(spec));
    double norm2 = 0.0;
    for (double v : w) norm2 += v * v;
    const double norm = std::sqrt(norm2);
    for (std::size_t j = 0; j < spec.p; ++j) angle[j] = w[j] / norm;
    if (spec.family == models::ModelFamily::dirichlet_rotated && spec.rotation_angle_bound > 0.0) {
        const std::size_t a = uniform_index(rs, spec.p);
        const std::size_t b = spec.p + uniform_index(rs, spec.d - spec.p);
        const double phi = spec.rotation_angle_bound * (2.0 * rs.uniform() - 1.0);
        const double c = std::cos(phi), sn = std::sin(phi);
        const double xa = angle[a], xb = angle[b];
        angle[a] = c * xa - sn * xb;
        angle[b] = sn * xa + c * xb;
    }
    return {std::move(angle), 1.0};
}

OracleTruth compute_oracle(const models::ModelSpec& spec, double k_over_n, std::size_t mc_size,
                           const functionals::TailFunctionalParams& params, std::uint64_t seed) {
    models::require_valid(spec);
    require_functional_params(params, spec.d);
    if (mc_size < 100000) throw std::invalid_argument("compute_oracle needs mc_size >= 1e5");
    if (!(k_over_n > 0.0 && k_over_n < 1.0))
        throw std::invalid_argument("k_over_n must lie in (0, 1)");
    const auto k_mc = static_cast<std::size_t>(std::llround(k_over_n * static_cast<double>(mc_size)));
    if (k_mc < 1000)
        throw std::invalid_argument("too few exceedances: mc_size * k_over_n must be at least 1e3");

    const std::size_t d = spec.d;
    const std::size_t d2 = d * d;
    OracleTruth out;
    out.mc_size = mc_size;

    // ---- limit-law pass: weighted moments, functionals, fourth moments ----
    std::vector<double> batch_w(kBatches, 0.0);
    std::vector<double> batch_sig(kBatches * d2, 0.0);
    std::array<std::vector<double>, 5> batch_f;  // g1 g2 g4 num3 den3
    for (auto& v : batch_f) v.assign(kBatches, 0.0);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) pairs.emplace_back(i, j);
    const std::size_t np = pairs.size();
    std::vector<std::size_t> pair_of(d2);
    for (std::size_t a = 0; a < np; ++a) {
        pair_of[pairs[a].first * d + pairs[a].second] = a;
        pair_of[pairs[a].second * d + pairs[a].first] = a;
    }
    std::vector<double> m4(np * np, 0.0);
    std::vector<double> pp(np);

    rng::RngStream limit_rs(seed, 0);
    for (std::size_t i = 0; i < mc_size; ++i) {
        const auto [theta, w] = sample_limit_angle(limit_rs, spec);
        const std::size_t b = i * kBatches / mc_size;
        batch_w[b] += w;
        double* sig = batch_sig.data() + b * d2;
        for (std::size_t a = 0; a < np; ++a) {
            const double prod = theta[pairs[a].first] * theta[pairs[a].second];
            pp[a] = prod;
            sig[pairs[a].first * d + pairs[a].second] += w * prod;
        }
        for (std::size_t a = 0; a < np; ++a) {
            const double wa = w * pp[a];
            double* row = m4.data() + a * np;
            for (std::size_t c = a; c < np; ++c) row[c] += wa * pp[c];
        }
        const Integrands g = evaluate_integrands(theta, params);
        batch_f[0][b] += w * g.g1;
        batch_f[1][b] += w * g.g2;
        batch_f[2][b] += w * g.g4;
        batch_f[3][b] += w * g.num3;
        batch_f[4][b] += w * g.den3;
    }

    const double total_w = parallel::pairwise_sum(batch_w);
    linalg::Matrix sigma_inf(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t b = 0; b < kBatches; ++b) s += batch_sig[b * d2 + i * d + j];
            sigma_inf(i, j) = s / total_w;
            sigma_inf(j, i) = sigma_inf(i, j);
        }
    out.sigma_inf = extremes::MomentMatrix{sigma_inf, mc_size};

    out.sigma_inf_se = linalg::Matrix(d, d);
    std::vector<double> entry_vals(kBatches);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            for (std::size_t b = 0; b < kBatches; ++b)
                entry_vals[b] = batch_sig[b * d2 + i * d + j] / batch_w[b];
            const double mu = mean_of(entry_vals);
            const double se = sample_sd(entry_vals, mu) / std::sqrt(static_cast<double>(kBatches));
            out.sigma_inf_se(i, j) = se;
            out.sigma_inf_se(j, i) = se;
        }

    const double sum_den3 = parallel::pairwise_sum(batch_f[4]);
    if (!(sum_den3 > 0.0))
        throw std::runtime_error("limit law puts no mass on positive coordinate maxima");
    out.functional_truths[0] = parallel::pairwise_sum(batch_f[0]) / total_w;
    out.functional_truths[1] = parallel::pairwise_sum(batch_f[1]) / total_w;
    out.functional_truths[2] = parallel::pairwise_sum(batch_f[3]) / sum_den3;
    out.functional_truths[3] = parallel::pairwise_sum(batch_f[2]) / total_w;
    for (std::size_t f = 0; f < 4; ++f) {
        std::vector<double> vals;
        vals.reserve(kBatches);
        for (std::size_t b = 0; b < kBatches; ++b) {
            if (f == 2) {
                if (batch_f[4][b] > 0.0) vals.push_back(batch_f[3][b] / batch_f[4][b]);
            } else {
                const std::size_t src = f == 3 ? 2 : f;
                vals.push_back(batch_f[src][b] / batch_w[b]);
            }
        }
        const double mu = mean_of(vals);
        out.functional_se[f] = sample_sd(vals, mu) / std::sqrt(static_cast<double>(vals.size()));
    }

    out.cov4.assign(d2 * d2, 0.0);
    for (std::size_t a = 0; a < np; ++a)
        for (std::size_t c = 0; c < a; ++c) m4[a * np + c] = m4[c * np + a];
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t l = 0; l < d; ++l)
                for (std::size_t m = 0; m < d; ++m) {
                    const double e4 = m4[pair_of[i * d + j] * np + pair_of[l * d + m]] / total_w;
                    out.cov4[cov_index(d, i, j, l, m)] = e4 - sigma_inf(i, j) * sigma_inf(l, m);
                }

    // ---- pre-limit pass: threshold and conditional moment matrix ----
    if (angle_radius_independent(spec)) {
        // The angle never depends on the radius here, so the conditional law
        // above any threshold is the limit law and the radius is exact Pareto.
        out.t_nk = std::pow(k_over_n, -1.0 / spec.alpha);
        out.sigma_nk = out.sigma_inf;
        out.sigma_nk.k = k_mc;
        out.sigma_nk_se = out.sigma_inf_se;
        return out;
    }

    std::vector<double> radii(mc_size);
    {
        rng::RngStream model_rs(seed, 1);
        stream_model_rows(model_rs, spec, mc_size, [&](std::size_t i, std::span<const double> row) {
            double norm2 = 0.0;
            for (double v : row) norm2 += v * v;
            radii[i] = std::sqrt(norm2);
        });
    }
    out.t_nk = extremes::threshold_select(radii, k_mc);

    std::vector<double> cond_w(kBatches, 0.0);
    std::vector<double> cond_sig(kBatches * d2, 0.0);
    std::size_t exceed = 0;
    {
        rng::RngStream model_rs(seed, 1);
        stream_model_rows(model_rs, spec, mc_size, [&](std::size_t i, std::span<const double> row) {
            if (!(radii[i] > out.t_nk)) return;
            ++exceed;
            const std::size_t b = i * kBatches / mc_size;
            cond_w[b] += 1.0;
            double* sig = cond_sig.data() + b * d2;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t c = a; c < d; ++c)
                    sig[a * d + c] += row[a] * row[c] / (radii[i] * radii[i]);
        });
    }
    if (exceed < 1000) throw std::runtime_error("too few exceedances above the oracle threshold");

    const double total_c = parallel::pairwise_sum(cond_w);
    linalg::Matrix sigma_nk(d, d);
    out.sigma_nk_se = linalg::Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            std::vector<double> vals;
            vals.reserve(kBatches);
            for (std::size_t b = 0; b < kBatches; ++b) {
                s += cond_sig[b * d2 + i * d + j];
                if (cond_w[b] > 0.0) vals.push_back(cond_sig[b * d2 + i * d + j] / cond_w[b]);
            }
            sigma_nk(i, j) = s / total_c;
            sigma_nk(j, i) = sigma_nk(i, j);
            const double mu = mean_of(vals);
            const double se = sample_sd(vals, mu) / std::sqrt(static_cast<double>(vals.size()));
            out.sigma_nk_se(i, j) = se;
            out.sigma_nk_se(j, i) = se;
        }
    out.sigma_nk = extremes::MomentMatrix{sigma_nk, exceed};
    return out;
}

const std::vector<std::string>& estimator_names() {
    static const std::vector<std::string> names = {"direct",       "pca_fixed",   "pca_auto",
                                                   "altpca_fixed", "altpca_auto", "truth"};
    return names;
}

namespace {

enum class EstKind { direct, pca_fixed, pca_auto, altpca_fixed, altpca_auto, truth };

EstKind kind_from_name(const std::string& name) {
    const auto& names = estimator_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<EstKind>(i);
    std::string valid;
    for (const auto& n : names) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw std::invalid_argument("unknown estimator '" + name + "'; valid names: " + valid);
}

bool is_auto(EstKind k) { return k == EstKind::pca_auto || k == EstKind::altpca_auto; }

std::array<double, 4> eval_functionals(const extremes::DiscreteAngularMeasure& h,
                                       const functionals::TailFunctionalParams& prm) {
    return {functionals::functional_i(h, prm), functionals::functional_ii(h, prm),
            functionals::functional_iii(h, prm), functionals::functional_iv(h, prm)};
}

}  // namespace

RmseTable rmse_study(const RmseStudyConfig& cfg) {
    models::require_valid(cfg.spec);
    require_functional_params(cfg.params, cfg.spec.d);
    if (cfg.k_grid.empty()) throw std::invalid_argument("rmse_study needs a non-empty k grid");
    if (cfg.replicates == 0) throw std::invalid_argument("rmse_study needs at least one replicate");
    if (cfg.n < 2) throw std::invalid_argument("rmse_study needs n >= 2");
    std::size_t min_k = cfg.n;
    for (std::size_t k : cfg.k_grid) {
        if (k < 1 || k > cfg.n - 1)
            throw std::invalid_argument("every k must lie in [1, n-1]");
        min_k = std::min(min_k, k);
    }

    std::vector<std::string> names = cfg.estimators;
    if (names.empty())
        names.assign(estimator_names().begin(), estimator_names().end() - 1);  // all but truth
    std::vector<EstKind> kinds;
    kinds.reserve(names.size());
    bool any_alt = false, any_auto = false;
    for (const auto& n : names) {
        kinds.push_back(kind_from_name(n));
        any_alt |= kinds.back() == EstKind::altpca_fixed || kinds.back() == EstKind::altpca_auto;
        any_auto |= is_auto(kinds.back());
    }
    if (any_alt && (cfg.k_tilde < 1 || cfg.k_tilde > min_k))
        throw std::invalid_argument("k_tilde must lie in [1, min k]");
    if (any_auto && !(cfg.tau > 0.0 && cfg.tau < 1.0 && cfg.beta > 0.0 && cfg.beta < 1.0))
        throw std::invalid_argument("tau and beta must lie in (0, 1)");
    const std::size_t fixed_p = cfg.fixed_p ? cfg.fixed_p : cfg.spec.p;
    if (fixed_p > cfg.spec.d) throw std::invalid_argument("fixed_p must lie in [1, d]");

    // first auto estimator carries the mean selected-dimension diagnostic
    std::size_t capture = names.size();
    for (std::size_t e = 0; e < kinds.size() && capture == names.size(); ++e)
        if (kinds[e] == EstKind::pca_auto) capture = e;
    for (std::size_t e = 0; e < kinds.size() && capture == names.size(); ++e)
        if (kinds[e] == EstKind::altpca_auto) capture = e;

    const std::size_t E = names.size(), K = cfg.k_grid.size(), R = cfg.replicates;
    std::vector<double> errs(R * E * 4 * K, 0.0);
    std::vector<double> phat(capture < E ? R * K : 0, 0.0);

    run_replicates(R, cfg.mode, [&](std::size_t r) {
        rng::RngStream rs(cfg.seed, r);
        const extremes::DataMatrix data = models::sample_model(rs, cfg.spec, cfg.n);
        for (std::size_t ki = 0; ki < K; ++ki) {
            const std::size_t k = cfg.k_grid[ki];
            for (std::size_t e = 0; e < E; ++e) {
                std::array<double, 4> vals{};
                std::size_t p_used = 0;
                switch (kinds[e]) {
                    case EstKind::direct: {
                        const auto sam = extremes::extract_exceedances(data, k);
                        vals = eval_functionals(extremes::empirical_angular_measure(sam), cfg.params);
                        break;
                    }
                    case EstKind::truth:
                        vals = cfg.truths;
                        break;
                    default: {
                        functionals::EstimatorConfig est_cfg;
                        est_cfg.k = k;
                        est_cfg.k_tilde =
                            (kinds[e] == EstKind::altpca_fixed || kinds[e] == EstKind::altpca_auto)
                                ? cfg.k_tilde
                                : k;
                        if (is_auto(kinds[e]))
                            est_cfg.dim_mode = functionals::AutoDimension{cfg.tau, cfg.beta};
                        else
                            est_cfg.dim_mode = functionals::FixedDimension{fixed_p};
                        const auto est = functionals::pca_angular_measure(data, est_cfg);
                        p_used = est.p;
                        vals = eval_functionals(est.measure, cfg.params);
                        break;
                    }
                }
                if (e == capture) phat[r * K + ki] = static_cast<double>(p_used);
                for (std::size_t f = 0; f < 4; ++f) {
                    const double diff = vals[f] - cfg.truths[f];
                    errs[((r * E + e) * 4 + f) * K + ki] = diff * diff;
                }
            }
        }
    });

    RmseTable table;
    table.k_grid = cfg.k_grid;
    table.estimators = names;
    table.replicates = R;
    table.spec = cfg.spec;
    table.truths = cfg.truths;
    table.rmse.resize(E);
    std::vector<double> col(R);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t f = 0; f < 4; ++f) {
            table.rmse[e][f].resize(K);
            for (std::size_t ki = 0; ki < K; ++ki) {
                for (std::size_t r = 0; r < R; ++r) col[r] = errs[((r * E + e) * 4 + f) * K + ki];
                table.rmse[e][f][ki] = std::sqrt(mean_of(col));
            }
        }
    if (capture < E) {
        table.mean_p_hat.resize(K);
        for (std::size_t ki = 0; ki < K; ++ki) {
            for (std::size_t r = 0; r < R; ++r) col[r] = phat[r * K + ki];
            table.mean_p_hat[ki] = mean_of(col);
        }
    }
    return table;
}

bool VerificationReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return !checks.empty();
}

namespace {

VerificationCheck make_check(std::string name, double statistic, double tolerance, std::string note) {
    VerificationCheck c;
    c.name = std::move(name);
    c.statistic = statistic;
    c.tolerance = tolerance;
    c.pass = statistic <= tolerance;
    c.note = std::move(note);
    return c;
}

void require_cov4(const OracleTruth& truth, std::size_t d) {
    if (truth.cov4.size() != d * d * d * d)
        throw std::invalid_argument("oracle cov4 tensor does not match the model dimension");
}

}  // namespace

VerificationReport verify_clt(const CltConfig& cfg, const OracleTruth& truth) {
    models::require_valid(cfg.spec);
    const std::size_t d = cfg.spec.d;
    if (truth.sigma_nk.matrix.rows() != d)
        throw std::invalid_argument("oracle sigma_nk does not match the model dimension");
    require_cov4(truth, d);
    if (cfg.replicates < 500) throw std::invalid_argument("verify_clt needs at least 500 replicates");
    if (cfg.k < 1 || cfg.k > cfg.n - 1) throw std::invalid_argument("k must lie in [1, n-1]");

    const std::size_t R = cfg.replicates, d2 = d * d;
    const double sqrt_k = std::sqrt(static_cast<double>(cfg.k));
    std::vector<double> deltas(R * d2);
    run_replicates(R, cfg.mode, [&](std::size_t r) {
        rng::RngStream rs(cfg.seed, r);
        const auto data = models::sample_model(rs, cfg.spec, cfg.n);
        const auto m = extremes::empirical_moment_matrix(extremes::extract_exceedances(data, cfg.k));
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                deltas[r * d2 + a * d + b] =
                    sqrt_k * (m.matrix(a, b) - truth.sigma_nk.matrix(a, b));
    });

    std::vector<double> col(R);
    std::vector<double> means(d2), sds(d2);
    for (std::size_t e = 0; e < d2; ++e) {
        for (std::size_t r = 0; r < R; ++r) col[r] = deltas[r * d2 + e];
        means[e] = mean_of(col);
        sds[e] = sample_sd(col, means[e]);
    }

    VerificationReport report;
    report.suite = "clt";

    double zmax = 0.0;
    std::size_t argmax = 0;
    for (std::size_t e = 0; e < d2; ++e) {
        double z;
        if (sds[e] > 0.0)
            z = std::fabs(means[e]) / (sds[e] / std::sqrt(static_cast<double>(R)));
        else
            z = means[e] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        if (z > zmax) {
            zmax = z;
            argmax = e;
        }
    }
    report.checks.push_back(make_check(
        "entry_means_within_4se", zmax, 4.0,
        "worst entry (" + std::to_string(argmax / d) + ";" + std::to_string(argmax % d) +
            ") mean " + fmt17(means[argmax])));

    auto covariance_of = [&](std::size_t ij, std::size_t lm) {
        double s = 0.0;
        for (std::size_t r = 0; r < R; ++r)
            s += (deltas[r * d2 + ij] - means[ij]) * (deltas[r * d2 + lm] - means[lm]);
        return s / static_cast<double>(R - 1);
    };

    const double var00 = covariance_of(0, 0);
    const double c4_00 = truth.cov4[cov_index(d, 0, 0, 0, 0)];
    if (c4_00 == 0.0) {
        report.checks.push_back(make_check("var_00_vs_cov4", std::fabs(var00), 1e-12,
                                           "degenerate target: cov4(00;00) = 0"));
    } else {
        report.checks.push_back(make_check("var_00_vs_cov4", std::fabs(var00 / c4_00 - 1.0), 0.15,
                                           "empirical " + fmt17(var00) + " target " + fmt17(c4_00)));
    }

    const double scale = std::fabs(c4_00);
    const std::array<std::array<std::size_t, 4>, 2> extra = {{{0, 0, 1, 1}, {0, 1, 0, 1}}};
    for (const auto& q : extra) {
        if (d < 2) break;
        const std::size_t ij = q[0] * d + q[1], lm = q[2] * d + q[3];
        const double emp = covariance_of(ij, lm);
        const double tgt = truth.cov4[cov_index(d, q[0], q[1], q[2], q[3])];
        const double denom = std::max(std::fabs(tgt), 0.1 * scale);
        const std::string name = "cov_" + std::to_string(q[0]) + std::to_string(q[1]) + "_" +
                                 std::to_string(q[2]) + std::to_string(q[3]) + "_vs_cov4";
        if (denom == 0.0) {
            report.checks.push_back(make_check(name, std::fabs(emp), 1e-12, "degenerate target"));
        } else {
            report.checks.push_back(make_check(name, std::fabs(emp - tgt) / denom, 0.2,
                                               "empirical " + fmt17(emp) + " target " + fmt17(tgt)));
        }
    }
    return report;
}

VerificationReport verify_excess_rate(const RateConfig& cfg, const OracleTruth& truth) {
    models::require_valid(cfg.spec);
    const std::size_t d = cfg.spec.d, p = cfg.spec.p;
    if (truth.sigma_inf.matrix.rows() != d)
        throw std::invalid_argument("oracle sigma_inf does not match the model dimension");
    require_cov4(truth, d);
    if (cfg.k_grid.size() < 2) throw std::invalid_argument("the k grid needs at least two points");
    for (std::size_t i = 1; i < cfg.k_grid.size(); ++i)
        if (cfg.k_grid[i] <= cfg.k_grid[i - 1])
            throw std::invalid_argument("the k grid must be strictly increasing");
    if (cfg.k_grid.back() < 10 * cfg.k_grid.front())
        throw std::invalid_argument("the k grid must span at least one decade");
    if (cfg.k_grid.back() > cfg.n - 1) throw std::invalid_argument("every k must lie in [1, n-1]");
    if (cfg.replicates < 2) throw std::invalid_argument("need at least two replicates");
    if (cfg.oracle_draws < 100) throw std::invalid_argument("need at least 100 oracle draws");

    const auto eig = linalg::symmetric_eigh(truth.sigma_inf.matrix);
    const pca::EigenFrame frame(eig, p);
    const linalg::Matrix& pi_star = frame.pi_star();
    const extremes::MomentMatrix sigma_truth{truth.sigma_inf.matrix, truth.sigma_inf.k};

    const std::size_t R = cfg.replicates, K = cfg.k_grid.size();
    std::vector<double> excess(R * K);
    std::vector<double> dev2(R);
    run_replicates(R, cfg.mode, [&](std::size_t r) {
        rng::RngStream rs(cfg.seed, r);
        const auto data = models::sample_model(rs, cfg.spec, cfg.n);
        for (std::size_t ki = 0; ki < K; ++ki) {
            const std::size_t k = cfg.k_grid[ki];
            const auto m = extremes::empirical_moment_matrix(extremes::extract_exceedances(data, k));
            const auto fit = pca::fit_pca(m, p);
            excess[r * K + ki] = pca::excess_risk(sigma_truth, fit.projection, p);
            if (ki + 1 == K) {
                const linalg::Matrix diff = fit.projection.matrix() - pi_star;
                dev2[r] = static_cast<double>(k) * linalg::hs_inner(diff, diff);
            }
        }
    });

    std::vector<double> col(R), log_k(K), log_mean(K), mean_excess(K);
    for (std::size_t ki = 0; ki < K; ++ki) {
        for (std::size_t r = 0; r < R; ++r) col[r] = excess[r * K + ki];
        mean_excess[ki] = mean_of(col);
        if (!(mean_excess[ki] > 0.0))
            throw std::runtime_error("degenerate regression: mean excess risk is zero at k = " +
                                     std::to_string(cfg.k_grid[ki]));
        log_k[ki] = std::log(static_cast<double>(cfg.k_grid[ki]));
        log_mean[ki] = std::log(mean_excess[ki]);
    }
    const double slope = ols_slope(log_k, log_mean);

    VerificationReport report;
    report.suite = "rate";
    report.checks.push_back(
        make_check("log_slope_near_minus_one", std::fabs(slope + 1.0), 0.25, "slope " + fmt17(slope)));

    // Gaussian oracle: factor cov4 and push draws through the limit laws.
    const std::size_t d2 = d * d;
    linalg::Matrix cov_mat(d2, d2);
    for (std::size_t a = 0; a < d2; ++a)
        for (std::size_t b = 0; b < d2; ++b) cov_mat(a, b) = truth.cov4[a * d2 + b];
    const auto cov_eig = linalg::symmetric_eigh(cov_mat);
    const double lam_max = cov_eig.eigenvalues.empty() ? 0.0 : std::max(cov_eig.eigenvalues[0], 0.0);
    std::vector<std::vector<double>> factor_cols;
    for (std::size_t l = 0; l < d2; ++l) {
        if (!(cov_eig.eigenvalues[l] > 1e-12 * std::max(lam_max, 1e-300))) continue;
        std::vector<double> colv(d2);
        const double s = std::sqrt(cov_eig.eigenvalues[l]);
        for (std::size_t a = 0; a < d2; ++a) colv[a] = s * cov_eig.eigenvectors(a, l);
        factor_cols.push_back(std::move(colv));
    }

    rng::RngStream oracle_rs(cfg.seed, R);
    std::vector<double> draw_excess(cfg.oracle_draws), draw_dev(cfg.oracle_draws), vec(d2);
    for (std::size_t t = 0; t < cfg.oracle_draws; ++t) {
        std::fill(vec.begin(), vec.end(), 0.0);
        for (const auto& fc : factor_cols) {
            const double xi = oracle_rs.normal();
            for (std::size_t a = 0; a < d2; ++a) vec[a] += xi * fc[a];
        }
        linalg::Matrix u(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) u(i, j) = 0.5 * (vec[i * d + j] + vec[j * d + i]);
        draw_excess[t] = pca::limit_excess_risk(u, frame, p);
        const linalg::Matrix w = pca::limit_projection_deviation(u, frame, p);
        draw_dev[t] = linalg::hs_inner(w, w);
    }
    const double limit_excess_mean = mean_of(draw_excess);
    const double limit_dev_mean = mean_of(draw_dev);

    const double k_last = static_cast<double>(cfg.k_grid.back());
    const double emp_k_excess = k_last * mean_excess.back();
    report.checks.push_back(make_check(
        "k_excess_matches_limit", std::fabs(emp_k_excess / limit_excess_mean - 1.0), 0.2,
        "empirical " + fmt17(emp_k_excess) + " limit " + fmt17(limit_excess_mean)));

    const double emp_dev = mean_of(dev2);
    report.checks.push_back(make_check("projection_deviation_matches_limit",
                                       std::fabs(emp_dev / limit_dev_mean - 1.0), 0.2,
                                       "empirical " + fmt17(emp_dev) + " limit " + fmt17(limit_dev_mean)));
    return report;
}

VerificationReport verify_local_expansion(const pca::EigenFrame& frame,
                                          const std::vector<pca::SkewMatrix>& directions,
                                          const std::vector<std::size_t>& k_grid) {
    if (k_grid.size() < 2) throw std::invalid_argument("the k grid needs at least two points");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (k_grid[i] <= k_grid[i - 1])
            throw std::invalid_argument("the k grid must be strictly increasing");
    for (const auto& a : directions) {
        if (a.dim() != frame.d()) throw std::invalid_argument("direction dimension mismatch");
        if (linalg::hs_norm(a.matrix()) > 5.0)
            throw std::invalid_argument("directions must satisfy ||A|| <= 5");
    }

    VerificationReport report;
    report.suite = "local-expansion";

    const pca::SkewMatrix zero(linalg::Matrix(frame.d(), frame.d()));
    double zero_max = 0.0;
    for (std::size_t k : k_grid) {
        const linalg::Matrix diff =
            pca::local_projection(frame, zero, k).matrix() - pca::local_projection_expansion(frame, zero, k);
        zero_max = std::max(zero_max, linalg::hs_norm(diff));
    }
    report.checks.push_back(make_check("zero_direction_exact", zero_max, 1e-12, ""));

    const std::size_t k_max = k_grid.back();
    double worst_ratio = 1.0, worst_bound = 0.0;
    for (const auto& a : directions) {
        const double norm_a = linalg::hs_norm(a.matrix());
        double win_min = std::numeric_limits<double>::infinity(), win_max = 0.0;
        for (std::size_t k : k_grid) {
            const linalg::Matrix diff =
                pca::local_projection(frame, a, k).matrix() - pca::local_projection_expansion(frame, a, k);
            const double r = linalg::hs_norm(diff);
            const double kd = static_cast<double>(k);
            const double scaled = r * kd * std::sqrt(kd);
            if (norm_a > 0.0)
                worst_bound = std::max(worst_bound, scaled / (10.0 * norm_a * norm_a * norm_a));
            if (k * 10 >= k_max) {
                win_min = std::min(win_min, scaled);
                win_max = std::max(win_max, scaled);
            }
        }
        if (win_min > 0.0)
            worst_ratio = std::max(worst_ratio, win_max / win_min);
        else if (win_max > 0.0)
            worst_ratio = std::numeric_limits<double>::infinity();
    }
    report.checks.push_back(make_check("scaled_remainder_stable", worst_ratio, 2.0,
                                       "max over directions of top-decade max/min"));
    report.checks.push_back(
        make_check("cubic_bound", worst_bound, 1.0, "remainder over 10 * ||A||^3 * k^{-3/2}"));
    return report;
}

VerificationReport verify_local_identities(const LocalIdentityConfig& cfg) {
    if (cfg.d < 2) throw std::invalid_argument("need dimension at least 2");
    if (cfg.p >= cfg.d) throw std::invalid_argument("p must lie in [1, d-1] (or 0 to cycle)");
    if (cfg.trials == 0) throw std::invalid_argument("need at least one trial");

    rng::RngStream rs(cfg.seed, 0);
    double dev_roundtrip = 0.0, dev_quadratic = 0.0, dev_pairing = 0.0, dev_value = 0.0;
    double maximizer_gap = -std::numeric_limits<double>::infinity();
    double zero_dev = 0.0;

    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::size_t p = cfg.p ? cfg.p : 1 + t % (cfg.d - 1);
        std::vector<double> lam(cfg.d);
        double cur = 2.0;
        for (std::size_t i = 0; i < cfg.d; ++i) {
            lam[i] = cur;
            cur -= 0.05 + 0.25 * rs.uniform();
        }
        const auto basis = linalg::symmetric_eigh(random_symmetric(rs, cfg.d)).eigenvectors;
        linalg::Matrix sigma(cfg.d, cfg.d);
        for (std::size_t l = 0; l < cfg.d; ++l)
            for (std::size_t i = 0; i < cfg.d; ++i)
                for (std::size_t j = 0; j < cfg.d; ++j)
                    sigma(i, j) += lam[l] * basis(i, l) * basis(j, l);
        const pca::EigenFrame frame(linalg::symmetric_eigh(sigma), p);

        const linalg::Matrix u = random_symmetric(rs, cfg.d);
        const pca::SkewMatrix a = pca::project_to_restricted_skew(random_skew(rs, cfg.d), frame);

        const linalg::Matrix s = pca::s_lambda(a, frame);
        dev_roundtrip =
            std::max(dev_roundtrip, (pca::tbar_lambda(s, frame).matrix() - a.matrix()).max_abs());

        const linalg::Matrix a2 = a.matrix() * a.matrix();
        const double quad = linalg::hs_inner(sigma, a2 * (frame.pi_star() - frame.pi_perp()));
        dev_quadratic = std::max(dev_quadratic, std::fabs(quad + linalg::hs_inner(s, s)));

        const double lhs = linalg::hs_inner(u, frame.pi_star() * a.matrix());
        const double rhs = linalg::hs_inner(pca::t_lambda(u, frame), s);
        dev_pairing = std::max(dev_pairing, std::fabs(lhs - rhs));

        const pca::SkewMatrix a_star = pca::local_maximizer(u, frame);
        const double v_star = limit_process_value(u, sigma, frame, a_star);
        const linalg::Matrix tu = pca::t_lambda(u, frame);
        dev_value = std::max(dev_value, std::fabs(v_star - linalg::hs_inner(tu, tu)));

        for (std::size_t c = 0; c < cfg.competitors; ++c) {
            const double eps = c % 2 == 0 ? 0.3 : 0.03;
            const pca::SkewMatrix b = pca::project_to_restricted_skew(random_skew(rs, cfg.d), frame);
            linalg::Matrix cand = a_star.matrix();
            for (std::size_t i = 0; i < cfg.d; ++i)
                for (std::size_t j = 0; j < cfg.d; ++j) cand(i, j) += eps * b.matrix()(i, j);
            const double v = limit_process_value(u, sigma, frame, pca::SkewMatrix(cand));
            maximizer_gap = std::max(maximizer_gap, v - v_star);
        }

        if (t == 0) {
            const linalg::Matrix zero_u(cfg.d, cfg.d);
            const pca::SkewMatrix a0 = pca::local_maximizer(zero_u, frame);
            zero_dev = std::max(a0.matrix().max_abs(),
                                std::fabs(limit_process_value(zero_u, sigma, frame, a0)));
        }
    }

    VerificationReport report;
    report.suite = "local-identities";
    report.checks.push_back(make_check("rescaling_roundtrip", dev_roundtrip, 1e-10, ""));
    report.checks.push_back(make_check("quadratic_term_identity", dev_quadratic, 1e-10, ""));
    report.checks.push_back(make_check("inner_product_pairing", dev_pairing, 1e-10, ""));
    report.checks.push_back(make_check("maximizer_dominates", std::max(maximizer_gap, 0.0), 1e-9,
                                       "largest competitor advantage"));
    report.checks.push_back(make_check("value_equals_limit", dev_value, 1e-10, ""));
    report.checks.push_back(make_check("zero_noise_maximizer", zero_dev, 1e-12, ""));
    return report;
}

void write_rmse_csv(const std::string& path, const RmseTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "estimator,functional,k,rmse\n";
    for (std::size_t e = 0; e < table.estimators.size(); ++e)
        for (std::size_t f = 0; f < 4; ++f)
            for (std::size_t ki = 0; ki < table.k_grid.size(); ++ki)
                out << table.estimators[e] << ',' << kFunctionalLabels[f] << ',' << table.k_grid[ki]
                    << ',' << fmt17(table.rmse[e][f][ki]) << '\n';
    for (std::size_t ki = 0; ki < table.mean_p_hat.size(); ++ki)
        out << "mean_p_hat,p_hat," << table.k_grid[ki] << ',' << fmt17(table.mean_p_hat[ki]) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_report_csv(const std::string& path, const VerificationReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "suite,check,statistic,tolerance,pass,note\n";
    for (const auto& c : report.checks) {
        std::string note = c.note;
        std::replace(note.begin(), note.end(), ',', ';');
        out << report.suite << ',' << c.name << ',' << fmt17(c.statistic) << ',' << fmt17(c.tolerance)
            << ',' << (c.pass ? 1 : 0) << ',' << note << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_rmse_charts(const std::string& path_prefix, const RmseTable& table) {
    for (std::size_t f = 0; f < 4; ++f) {
        std::vector<svg::Series> series(table.estimators.size());
        for (std::size_t e = 0; e < table.estimators.size(); ++e) {
            series[e].label = table.estimators[e];
            for (std::size_t ki = 0; ki < table.k_grid.size(); ++ki) {
                series[e].x.push_back(static_cast<double>(table.k_grid[ki]));
                series[e].y.push_back(table.rmse[e][f][ki]);
            }
        }
        const std::string label = kFunctionalLabels[f];
        svg::write_line_chart(path_prefix + "_" + label + ".svg",
                              "RMSE of tail functional (" + label + ")", "k", "RMSE", series);
    }
}

}  // namespace tailpca::experiments
