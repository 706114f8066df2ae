#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tailpca/extremes.hpp"
#include "tailpca/functionals.hpp"
#include "tailpca/matrix.hpp"
#include "tailpca/models.hpp"
#include "tailpca/parallel.hpp"
#include "tailpca/pca.hpp"
#include "tailpca/rng.hpp"

namespace tailpca::experiments {

// Monte Carlo ground truth for one model: the limit second-moment matrix, its
// pre-limit counterpart at a given exceedance ratio, the limit values of the
// four tail functionals, and the fourth-moment covariance tensor driving the
// Gaussian fluctuation law.
struct OracleTruth {
    extremes::MomentMatrix sigma_inf;
    extremes::MomentMatrix sigma_nk;
    double t_nk = 0.0;
    std::array<double, 4> functional_truths{};
    // Cov(theta_i theta_j, theta_l theta_m) under the limit law, flattened as
    // [((i*d + j)*d + l)*d + m].
    std::vector<double> cov4;
    std::size_t mc_size = 0;
    linalg::Matrix sigma_inf_se;
    linalg::Matrix sigma_nk_se;
    std::array<double, 4> functional_se{};
};

// One draw from the model's exact angular limit law. Returns the unit-norm
// angle and its importance weight. The weight is 1 except for the gumbel
// family with theta > 1, where the limit is the ||z||^alpha-tilted law of
// z/||z|| with z_j = E_j^{-1/(theta*alpha)}. Noise never enters the limit.
std::pair<std::vector<double>, double> sample_limit_angle(rng::RngStream& rs,
                                                          const models::ModelSpec& spec);

// Estimate the truth for `spec` at exceedance ratio k/n = k_over_n using
// mc_size draws (>= 1e5). Batch means over 20 batches give the standard
// errors. Functional truths use `params`. For noise-free dirichlet-family
// models the angle is independent of the radius, so sigma_nk equals sigma_inf
// and t_nk = (k/n)^{-1/alpha} exactly; otherwise a second model-level pass
// estimates both, and requires at least 1e3 exceedances.
OracleTruth compute_oracle(const models::ModelSpec& spec, double k_over_n, std::size_t mc_size,
                           const functionals::TailFunctionalParams& params, std::uint64_t seed);

// Canonical estimator names accepted by rmse_study: direct, pca_fixed,
// pca_auto, altpca_fixed, altpca_auto, truth.
const std::vector<std::string>& estimator_names();

struct RmseStudyConfig {
    models::ModelSpec spec;
    std::size_t n = 1000;
    std::vector<std::size_t> k_grid;
    std::size_t k_tilde = 10;           // subspace budget of the altpca_* estimators
    std::size_t replicates = 200;
    std::vector<std::string> estimators; // empty selects every canonical estimator
    functionals::TailFunctionalParams params;
    std::array<double, 4> truths{};
    std::size_t fixed_p = 0;            // subspace dimension of the *_fixed estimators; 0 = spec.p
    double tau = 0.95;                  // auto dimension selection
    double beta = 0.95;
    std::uint64_t seed = 0;
    parallel::ExecMode mode = parallel::ExecMode::serial;
};

struct RmseTable {
    std::vector<std::size_t> k_grid;
    std::vector<std::string> estimators;
    // rmse[estimator][functional][k index]
    std::vector<std::array<std::vector<double>, 4>> rmse;
    // Mean selected dimension per k for the first auto estimator present;
    // empty when none is.
    std::vector<double> mean_p_hat;
    std::size_t replicates = 0;
    models::ModelSpec spec;
    std::array<double, 4> truths{};
};

// Root-mean-square error of each selected estimator against cfg.truths over
// cfg.replicates independent datasets, one dataset per replicate shared by
// the whole k grid. Replicate r draws from stream r of cfg.seed, so results
// are bit-identical across execution modes and schedules.
RmseTable rmse_study(const RmseStudyConfig& cfg);

struct VerificationCheck {
    std::string name;
    double statistic = 0.0; // deviation measure, compared against tolerance
    double tolerance = 0.0;
    bool pass = false;      // statistic <= tolerance
    std::string note;       // raw values behind the statistic
};

struct VerificationReport {
    std::string suite;
    std::vector<VerificationCheck> checks;
    bool all_pass() const;
};

struct CltConfig {
    models::ModelSpec spec;
    std::size_t n = 100000;
    std::size_t k = 200;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    parallel::ExecMode mode = parallel::ExecMode::serial;
};

// Simulates sqrt(k) * (moment-matrix estimate - truth.sigma_nk) and checks
// that every entry mean is within 4 standard errors of zero, the variance of
// the (0,0) entry is within 15% of cov4, and selected entry covariances are
// within 20%.
VerificationReport verify_clt(const CltConfig& cfg, const OracleTruth& truth);

struct RateConfig {
    models::ModelSpec spec;
    std::size_t n = 100000;
    std::vector<std::size_t> k_grid; // must span at least one decade
    std::size_t replicates = 300;
    std::size_t oracle_draws = 20000;
    std::uint64_t seed = 0;
    parallel::ExecMode mode = parallel::ExecMode::serial;
};

// Fits log(mean excess risk) against log k (slope must sit in [-1.25, -0.75])
// and compares k * mean excess risk and k * mean squared projection deviation
// at the largest k against their Gaussian-oracle limits, both within 20%.
// The Gaussian draws factor truth.cov4 and are pushed through
// limit_excess_risk / limit_projection_deviation.
VerificationReport verify_excess_rate(const RateConfig& cfg, const OracleTruth& truth);

// Second-order accuracy of local_projection_expansion: for each direction the
// scaled remainder r(k) * k^{3/2} varies by less than 2x over the top decade
// of the grid, stays below 10 * ||A||^3 * k^{-3/2}, and vanishes at A = 0.
// Requires ||A|| <= 5 for every direction.
VerificationReport verify_local_expansion(const pca::EigenFrame& frame,
                                          const std::vector<pca::SkewMatrix>& directions,
                                          const std::vector<std::size_t>& k_grid);

struct LocalIdentityConfig {
    std::size_t d = 6;
    std::size_t p = 0; // 0 cycles p over 1..d-1
    std::size_t trials = 1000;
    std::size_t competitors = 10; // random perturbations tested against the maximizer
    std::uint64_t seed = 0;
};

// Random-frame stress test of the local geometry identities: the paired
// rescalings invert each other, the quadratic term matches -||S(A)||^2, the
// inner products pair up, the closed-form maximizer beats random competitors,
// and its value equals ||T(U)||^2. Deviations are aggregated over all trials.
VerificationReport verify_local_identities(const LocalIdentityConfig& cfg);

// One row per (estimator, functional, k); mean selected dimension appended as
// pseudo-estimator rows when present.
void write_rmse_csv(const std::string& path, const RmseTable& table);

// suite,check,statistic,tolerance,pass,note with pass as 1/0.
void write_report_csv(const std::string& path, const VerificationReport& report);

// One SVG line chart per functional at path_prefix + "_<functional>.svg",
// k on the x axis, RMSE on the y axis, one polyline per estimator.
void write_rmse_charts(const std::string& path_prefix, const RmseTable& table);

}  // namespace tailpca::experiments
