#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tailpca/extremes.hpp"
#include "tailpca/rng.hpp"

namespace tailpca::models {

enum class ModelFamily { gumbel, dirichlet, dirichlet_rotated };

std::string family_name(ModelFamily f);
ModelFamily family_from_name(const std::string& name);

// Simulation model: heavy-tailed data supported on (or near) a p-dimensional
// coordinate subspace of R^d, with half-normal noise added everywhere.
struct ModelSpec {
    ModelFamily family = ModelFamily::gumbel;
    std::size_t d = 2;
    std::size_t p = 1;
    double alpha = 1.0;                    // Frechet / Pareto tail index
    double theta = 1.0;                    // gumbel dependence, >= 1
    std::vector<double> dirichlet_params;  // dirichlet families; empty = all 3
    double noise_sigma = 1.0;
    double rotation_angle_bound = 0.3141592653589793;  // pi/10, rotated family
};

void require_valid(const ModelSpec& spec);

// dirichlet_params padded out to one entry per supported coordinate.
std::vector<double> effective_dirichlet_params(const ModelSpec& spec);

// Flat key=value form used by the config file; values round-trip exactly.
std::map<std::string, std::string> to_config(const ModelSpec& spec);
ModelSpec model_from_config(const std::map<std::string, std::string>& kv);

// i.i.d. Frechet(alpha) draws by inverse transform.
std::vector<double> sample_frechet(rng::RngStream& rs, double alpha, std::size_t n);

// One draw on the simplex via the gamma-ratio construction.
std::vector<double> sample_dirichlet(rng::RngStream& rs, const std::vector<double>& params);

// First p coordinates carry a Gumbel (logistic) copula with Frechet(alpha)
// margins via the positive-stable mixture; the rest are zero before noise.
extremes::DataMatrix sample_gumbel_model(rng::RngStream& rs, const ModelSpec& spec, std::size_t n);

// First p coordinates are R * W/|W| with W Dirichlet and R Pareto(alpha);
// the rotated family additionally tilts each row by a random Givens rotation
// mixing one supported axis with one unsupported axis. A zero angle bound
// (like zero noise) draws nothing and reproduces the plain family bit for bit.
extremes::DataMatrix sample_dirichlet_model(rng::RngStream& rs, const ModelSpec& spec,
                                            std::size_t n);

// Adds |N(0, sigma^2)| to every entry, row-major; sigma = 0 copies the input
// without consuming any draws.
extremes::DataMatrix apply_noise(rng::RngStream& rs, const extremes::DataMatrix& data,
                                 double sigma);

// Family dispatch; rows are sampled first, then noise sweeps the matrix.
extremes::DataMatrix sample_model(rng::RngStream& rs, const ModelSpec& spec, std::size_t n);

}  // namespace tailpca::models
