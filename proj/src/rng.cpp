#include "tailpca/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tailpca::rng {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// SplitMix64 output function: a bijective 64-bit finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
    // Hash (seed, stream) into one key, then expand it with a SplitMix64
    // sequence to fill the xoshiro256++ state.
    std::uint64_t x = mix64(seed + kGolden) ^ mix64(stream + 0x3C6EF372FE94F82AULL);
    for (auto& w : s_) {
        x += kGolden;
        w = mix64(x);
    }
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = kGolden;  // all-zero state is invalid
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform() {
    for (;;) {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double RngStream::normal() { return normal_quantile(uniform()); }

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        // Shape boost: G(a) = G(a+1) * U^{1/a} in distribution.
        const double g = gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze method.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RngStream::frechet(double alpha) { return frechet_quantile(uniform(), alpha); }

double RngStream::pareto(double alpha) { return pareto_quantile(uniform(), alpha); }

double RngStream::positive_stable(double a) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("positive_stable: need 0 < a < 1");
    // Kanter's representation: S = (A(U)/E)^{(1-a)/a} with U ~ Uniform(0, pi),
    // E ~ Exp(1), A(u) = sin((1-a)u) sin(au)^{a/(1-a)} / sin(u)^{1/(1-a)}.
    const double u = uniform() * std::numbers::pi;
    const double e = exponential();
    const double au = std::sin((1.0 - a) * u) * std::pow(std::sin(a * u), a / (1.0 - a)) /
                      std::pow(std::sin(u), 1.0 / (1.0 - a));
    return std::pow(au / e, (1.0 - a) / a);
}

double normal_quantile(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("normal_quantile: need 0 < beta < 1");

    // Rational approximation (relative error ~1e-9), then one Halley step
    // against the exact CDF through erfc pushes the error below 1e-12.
    static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    double x;
    if (beta < plow) {
        const double q = std::sqrt(-2.0 * std::log(beta));
        x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else if (beta <= 1.0 - plow) {
        const double q = beta - 0.5;
        const double r = q * q;
        x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
            (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - beta));
        x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - beta;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double frechet_quantile(double u, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("frechet_quantile: alpha must be positive");
    return std::pow(-std::log(u), -1.0 / alpha);
}

double pareto_quantile(double u, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("pareto_quantile: alpha must be positive");
    return std::pow(u, -1.0 / alpha);
}

}  // namespace tailpca::rng
