#include "tailpca/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace tailpca::models {

namespace {

double parse_number(const std::string& key, const std::string& text) {
    const char* s = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v))
        throw std::invalid_argument("config value for " + key + " is not a number: " + text);
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    const double v = parse_number(key, text);
    if (v < 0 || v != std::floor(v))
        throw std::invalid_argument("config value for " + key + " is not a count: " + text);
    return static_cast<std::size_t>(v);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Uniform index in 0..m-1 from one uniform draw.
std::size_t uniform_index(rng::RngStream& rs, std::size_t m) {
    const auto idx = static_cast<std::size_t>(rs.uniform() * static_cast<double>(m));
    return idx < m ? idx : m - 1;
}

}  // namespace

std::string family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::gumbel: return "gumbel";
        case ModelFamily::dirichlet: return "dirichlet";
        case ModelFamily::dirichlet_rotated: return "dirichlet_rotated";
    }
    throw std::logic_error("unreachable model family");
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "gumbel") return ModelFamily::gumbel;
    if (name == "dirichlet") return ModelFamily::dirichlet;
    if (name == "dirichlet_rotated") return ModelFamily::dirichlet_rotated;
    throw std::invalid_argument("unknown model family: " + name);
}

void require_valid(const ModelSpec& spec) {
    if (spec.d < 2) throw std::invalid_argument("model needs d >= 2");
    if (spec.p < 1 || spec.p >= spec.d) throw std::invalid_argument("model needs 1 <= p < d");
    if (!(spec.alpha > 0.0)) throw std::invalid_argument("model needs alpha > 0");
    if (!(spec.theta >= 1.0)) throw std::invalid_argument("model needs theta >= 1");
    if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("model needs noise_sigma >= 0");
    if (!(spec.rotation_angle_bound >= 0.0))
        throw std::invalid_argument("model needs rotation_angle_bound >= 0");
    if (!spec.dirichlet_params.empty() && spec.dirichlet_params.size() != spec.p)
        throw std::invalid_argument("dirichlet_params must have one entry per supported coordinate");
    for (double a : spec.dirichlet_params)
        if (!(a > 0.0)) throw std::invalid_argument("dirichlet_params must be positive");
}

std::vector<double> effective_dirichlet_params(const ModelSpec& spec) {
    if (!spec.dirichlet_params.empty()) return spec.dirichlet_params;
    return std::vector<double>(spec.p, 3.0);
}

std::map<std::string, std::string> to_config(const ModelSpec& spec) {
    std::map<std::string, std::string> kv;
    kv["family"] = family_name(spec.family);
    kv["d"] = std::to_string(spec.d);
    kv["p"] = std::to_string(spec.p);
    kv["alpha"] = format_number(spec.alpha);
    kv["theta"] = format_number(spec.theta);
    kv["noise_sigma"] = format_number(spec.noise_sigma);
    kv["rotation_angle_bound"] = format_number(spec.rotation_angle_bound);
    if (!spec.dirichlet_params.empty()) {
        std::string joined;
        for (double a : spec.dirichlet_params) {
            if (!joined.empty()) joined += ",";
            joined += format_number(a);
        }
        kv["dirichlet_params"] = joined;
    }
    return kv;
}

ModelSpec model_from_config(const std::map<std::string, std::string>& kv) {
    ModelSpec spec;
    for (const auto& [key, value] : kv) {
        if (key == "family") {
            spec.family = family_from_name(value);
        } else if (key == "d") {
            spec.d = parse_count(key, value);
        } else if (key == "p") {
            spec.p = parse_count(key, value);
        } else if (key == "alpha") {
            spec.alpha = parse_number(key, value);
        } else if (key == "theta") {
            spec.theta = parse_number(key, value);
        } else if (key == "noise_sigma") {
            spec.noise_sigma = parse_number(key, value);
        } else if (key == "rotation_angle_bound") {
            spec.rotation_angle_bound = parse_number(key, value);
        } else if (key == "dirichlet_params") {
            spec.dirichlet_params.clear();
            std::string token;
            for (std::size_t pos = 0; pos <= value.size(); ++pos) {
                if (pos == value.size() || value[pos] == ',') {
                    spec.dirichlet_params.push_back(parse_number(key, token));
                    token.clear();
                } else {
                    token += value[pos];
                }
            }
        } else {
            throw std::invalid_argument("unknown model config key: " + key);
        }
    }
    require_valid(spec);
    return spec;
}

std::vector<double> sample_frechet(rng::RngStream& rs, double alpha, std::size_t n) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sample_frechet needs alpha > 0");
    std::vector<double> out(n);
    for (double& v : out) v = rs.frechet(alpha);
    return out;
}

std::vector<double> sample_dirichlet(rng::RngStream& rs, const std::vector<double>& params) {
    if (params.empty()) throw std::invalid_argument("sample_dirichlet needs parameters");
    for (double a : params)
        if (!(a > 0.0)) throw std::invalid_argument("dirichlet parameters must be positive");
    std::vector<double> out(params.size());
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[i] = rs.gamma(params[i]);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

extremes::DataMatrix sample_gumbel_model(rng::RngStream& rs, const ModelSpec& spec,
                                         std::size_t n) {
    require_valid(spec);
    if (spec.family != ModelFamily::gumbel)
        throw std::invalid_argument("sample_gumbel_model needs the gumbel family");
    extremes::DataMatrix data(n, spec.d);
    const double expo = 1.0 / (spec.theta * spec.alpha);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = spec.theta == 1.0 ? 1.0 : rs.positive_stable(1.0 / spec.theta);
        for (std::size_t j = 0; j < spec.p; ++j)
            data.at(i, j) = std::pow(s / rs.exponential(), expo);
    }
    return apply_noise(rs, data, spec.noise_sigma);
}

extremes::DataMatrix sample_dirichlet_model(rng::RngStream& rs, const ModelSpec& spec,
                                            std::size_t n) {
    require_valid(spec);
    if (spec.family != ModelFamily::dirichlet && spec.family != ModelFamily::dirichlet_rotated)
        throw std::invalid_argument("sample_dirichlet_model needs a dirichlet family");
    const auto params = effective_dirichlet_params(spec);
    const bool rotate =
        spec.family == ModelFamily::dirichlet_rotated && spec.rotation_angle_bound > 0.0;
    extremes::DataMatrix data(n, spec.d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = sample_dirichlet(rs, params);
        const double r = rs.pareto(spec.alpha);
        double sq = 0.0;
        for (double v : w) sq += v * v;
        const double nrm = std::sqrt(sq);
        for (std::size_t j = 0; j < spec.p; ++j) data.at(i, j) = r * w[j] / nrm;
        if (rotate) {
            const std::size_t a = uniform_index(rs, spec.p);
            const std::size_t b = spec.p + uniform_index(rs, spec.d - spec.p);
            const double phi =
                spec.rotation_angle_bound * (2.0 * rs.uniform() - 1.0);
            const double c = std::cos(phi), sn = std::sin(phi);
            const double xa = data.at(i, a), xb = data.at(i, b);
            data.at(i, a) = c * xa - sn * xb;
            data.at(i, b) = sn * xa + c * xb;
        }
    }
    return apply_noise(rs, data, spec.noise_sigma);
}

extremes::DataMatrix apply_noise(rng::RngStream& rs, const extremes::DataMatrix& data,
                                 double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("apply_noise needs sigma >= 0");
    extremes::DataMatrix out(data.n(), data.d());
    for (std::size_t i = 0; i < data.n(); ++i)
        for (std::size_t j = 0; j < data.d(); ++j) {
            const double shift = sigma == 0.0 ? 0.0 : sigma * std::fabs(rs.normal());
            out.at(i, j) = data.at(i, j) + shift;
        }
    return out;
}

extremes::DataMatrix sample_model(rng::RngStream& rs, const ModelSpec& spec, std::size_t n) {
    if (spec.family == ModelFamily::gumbel) return sample_gumbel_model(rs, spec, n);
    return sample_dirichlet_model(rs, spec, n);
}

}  // namespace tailpca::models
