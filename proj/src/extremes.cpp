#include "tailpca/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tailpca::extremes {

DataMatrix::DataMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), values_(n * d, 0.0) {
    if (d < 2) throw std::invalid_argument("DataMatrix: dimension must be at least 2");
}

PolarPoint polar_transform(std::span<const double> x) {
    double sq = 0.0;
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("polar_transform: non-finite entry");
        sq += v * v;
    }
    if (sq == 0.0) throw std::invalid_argument("polar_transform: zero vector has no angle");
    PolarPoint p;
    p.radius = std::sqrt(sq);
    p.angle.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p.angle[i] = x[i] / p.radius;
    return p;
}

double threshold_select(const std::vector<double>& radii, std::size_t k) {
    const std::size_t n = radii.size();
    if (k < 1 || k >= n) throw std::invalid_argument("threshold_select: need 1 <= k <= n-1");
    std::vector<double> sorted = radii;
    // (k+1)-th largest = index k of the descending order.
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end(),
                     std::greater<double>());
    return sorted[k];
}

AngularSample extract_exceedances(const DataMatrix& data, std::size_t k) {
    std::vector<double> radii(data.n());
    std::string zero_rows;
    for (std::size_t i = 0; i < data.n(); ++i) {
        double sq = 0.0;
        for (double v : data.row(i)) sq += v * v;
        if (sq == 0.0) {
            if (!zero_rows.empty()) zero_rows += ", ";
            zero_rows += std::to_string(i + 1);
        }
        radii[i] = std::sqrt(sq);
    }
    if (!zero_rows.empty())
        throw std::invalid_argument("extract_exceedances: zero rows at " + zero_rows);

    AngularSample s;
    s.k = k;
    s.dim = data.d();
    s.threshold = threshold_select(radii, k);
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (radii[i] > s.threshold) {
            PolarPoint p = polar_transform(data.row(i));
            s.angles.push_back(std::move(p.angle));
            s.radii.push_back(p.radius);
        }
    }
    return s;
}

MomentMatrix empirical_moment_matrix(const AngularSample& sample) {
    if (sample.k < 1) throw std::invalid_argument("empirical_moment_matrix: k must be at least 1");
    const std::size_t d = sample.d();
    if (d == 0)
        throw std::invalid_argument("empirical_moment_matrix: sample carries no dimension");

    MomentMatrix m;
    m.k = sample.k;
    m.matrix = linalg::Matrix(d, d);
    for (const auto& theta : sample.angles)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) m.matrix(i, j) += theta[i] * theta[j];
    const double inv_k = 1.0 / static_cast<double>(sample.k);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            m.matrix(i, j) *= inv_k;
            m.matrix(j, i) = m.matrix(i, j);
        }
    return m;
}

double empirical_risk(const MomentMatrix& sigma, const linalg::ProjectionMatrix& pi) {
    return linalg::hs_inner(sigma.matrix, pi.matrix());
}

double DiscreteAngularMeasure::total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

DiscreteAngularMeasure empirical_angular_measure(const AngularSample& sample) {
    if (sample.k < 1) throw std::invalid_argument("empirical_angular_measure: k must be at least 1");
    DiscreteAngularMeasure m;
    m.atoms = sample.angles;
    m.weights.assign(sample.angles.size(), 1.0 / static_cast<double>(sample.k));
    return m;
}

namespace {

bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t') ++end;
    return *end == '\0';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto a = f.find_first_not_of(" \t");
        const auto b = f.find_last_not_of(" \t");
        f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
    }
    return fields;
}

}  // namespace

DataMatrix read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t d = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_csv_line(line);

        if (first_content_line) {
            first_content_line = false;
            double tmp;
            bool numeric = true;
            for (const auto& f : fields)
                if (!parse_double(f, tmp)) numeric = false;
            if (!numeric) {  // header line
                d = fields.size();
                continue;
            }
            d = fields.size();
        }

        if (fields.size() != d)
            throw std::runtime_error(path + ": row " + std::to_string(lineno) + " has " +
                                     std::to_string(fields.size()) + " columns, expected " +
                                     std::to_string(d));
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) {
            if (!parse_double(fields[j], row[j]) || !std::isfinite(row[j]))
                throw std::runtime_error(path + ": parse failure at row " + std::to_string(lineno) +
                                         ", column " + std::to_string(j + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");
    if (d < 2) throw std::runtime_error(path + ": need at least 2 columns");

    std::string zero_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        bool all_zero = true;
        for (double v : rows[i])
            if (v != 0.0) all_zero = false;
        if (all_zero) {
            if (!zero_rows.empty()) zero_rows += ", ";
            zero_rows += std::to_string(i + 1);
        }
    }
    if (!zero_rows.empty()) throw std::runtime_error(path + ": zero rows at " + zero_rows);

    DataMatrix m(rows.size(), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) m.at(i, j) = rows[i][j];
    return m;
}

void write_data_csv(const std::string& path, const DataMatrix& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t j = 0; j < data.d(); ++j) out << (j ? ",x" : "x") << (j + 1);
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.d(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.at(i, j));
            if (j) out << ",";
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path);
}

}  // namespace tailpca::extremes
