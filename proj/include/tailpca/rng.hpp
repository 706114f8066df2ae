#pragma once

#include <cstdint>

namespace tailpca::rng {

// Counter-seeded xoshiro256++ stream. Identical (seed, stream) pairs produce
// bit-identical sequences on every platform; distinct stream ids give
// decorrelated sequences, so parallel replicates can each own stream = index.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    // Strictly inside (0, 1): safe under log().
    double uniform();

    double normal();
    double exponential();           // rate 1
    double gamma(double shape);     // scale 1
    double frechet(double alpha);   // CDF exp(-x^{-alpha})
    double pareto(double alpha);    // P(X > x) = x^{-alpha}, x >= 1

    // Positive alpha-stable with Laplace transform exp(-t^a), 0 < a < 1.
    double positive_stable(double a);

private:
    std::uint64_t s_[4];
};

// Inverse standard normal CDF; absolute error below 1e-12.
double normal_quantile(double beta);

// Inverse transforms used by the samplers, exposed for direct checking.
double frechet_quantile(double u, double alpha);
double pareto_quantile(double u, double alpha);

}  // namespace tailpca::rng
