#include "tailpca/cli.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "tailpca/dimension.hpp"
#include "tailpca/experiments.hpp"
#include "tailpca/functionals.hpp"

namespace tailpca::cli {
namespace {

using KV = std::map<std::string, std::string>;

// Maps to exit code 2; library std::invalid_argument lands in the same bucket.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Decorrelates the oracle-truth RNG from the replicate streams of the same
// user seed (replicates own streams 0, 1, ... of the seed itself).
constexpr std::uint64_t kOracleSeedSalt = 0x9e3779b97f4a7c15ULL;

// Stream id for auxiliary draws (random directions); far above any replicate index.
constexpr std::uint64_t kAuxStream = 1000000007ULL;

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const auto a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> pieces;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        pieces.push_back(trim(text.substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return pieces;
}

double parse_double(const std::string& key, const std::string& text) {
    const char* s = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s || *end != '\0' || !std::isfinite(v))
        throw UsageError("option '" + key + "' expects a number, got '" + text + "'");
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
    const double v = parse_double(key, text);
    if (v < 0.0 || v != std::floor(v) || v > 9.007199254740992e15)
        throw UsageError("option '" + key + "' expects a nonnegative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError("option '" + key + "' expects a nonnegative integer, got '" + text + "'");
    errno = 0;
    const unsigned long long v = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE)
        throw UsageError("option '" + key + "' is out of range: '" + text + "'");
    return v;
}

std::vector<std::size_t> parse_count_list(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& piece : split_commas(text)) out.push_back(parse_count(key, piece));
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& piece : split_commas(text)) out.push_back(parse_double(key, piece));
    return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "0") return false;
    if (text == "1") return true;
    throw UsageError("option '" + key + "' expects 0 or 1, got '" + text + "'");
}

parallel::ExecMode parse_mode(const std::string& text) {
    if (text == "serial") return parallel::ExecMode::serial;
    if (text == "openmp") return parallel::ExecMode::openmp;
    throw UsageError("option 'mode' expects serial or openmp, got '" + text + "'");
}

std::string join_counts(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_num(v[i]);
    }
    return out;
}

std::string join_strings(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += v[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// option tables and help text

struct Opt {
    const char* key;
    const char* arg;
    const char* doc;
};

constexpr Opt kAnalyzeOpts[] = {
    {"input", "FILE", "CSV dataset to analyze (required)"},
    {"k", "K", "tail exceedances defining the angular measure (required)"},
    {"k_tilde", "K", "exceedances used to fit the subspace and select p (default: k)"},
    {"p", "P", "fixed subspace dimension; 0 selects p automatically (default: 0)"},
    {"tau", "T", "captured-mass target of the automatic selector (default: 0.95)"},
    {"beta", "B", "confidence level of the automatic selector (default: 0.95)"},
    {"standardize", "0|1", "rank-standardize margins to unit Frechet first (default: 0)"},
    {"alpha", "A", "tail index used by the functionals (default: 1)"},
    {"p_model", "P", "head dimension of functionals (i)/(ii); 0 uses the fitted p (default: 0)"},
    {"t_i", "T", "threshold of functional (i) (default: 0.3)"},
    {"out", "PREFIX", "output prefix (default: analysis)"},
    {"config", "FILE", "key=value defaults; command-line flags override"},
};

constexpr Opt kSimulateOpts[] = {
    {"n", "N", "number of rows to draw (required; 0 writes a header-only CSV)"},
    {"seed", "S", "RNG seed; when omitted one is drawn from system entropy and printed"},
    {"out", "FILE", "output CSV path (default: simulated.csv)"},
    {"config", "FILE", "key=value defaults; command-line flags override"},
};

constexpr Opt kRmseOpts[] = {
    {"seed", "S", "RNG seed (required; reruns are byte-identical)"},
    {"k_grid", "K1,K2,...", "exceedance budgets to sweep (required)"},
    {"n", "N", "rows per replicate dataset (default: 1000)"},
    {"k_tilde", "K", "subspace budget of the altpca_* estimators (default: 10)"},
    {"replicates", "R", "Monte Carlo replicates (default: 200)"},
    {"estimators", "A,B,...", "subset of: direct, pca_fixed, pca_auto, altpca_fixed, altpca_auto, truth"},
    {"fixed_p", "P", "subspace dimension of the *_fixed estimators; 0 uses model.p (default: 0)"},
    {"tau", "T", "automatic selector target (default: 0.95)"},
    {"beta", "B", "automatic selector confidence (default: 0.95)"},
    {"alpha", "A", "functional tail index (default: model.alpha)"},
    {"p_model", "P", "head dimension of functionals (i)/(ii) (default: model.p)"},
    {"t_i", "T", "threshold of functional (i) (default: 0.3)"},
    {"truths", "A,B,C,D", "functional ground truths; when omitted they are computed by Monte Carlo"},
    {"oracle_mc", "N", "limit-law draws behind computed truths (default: 1000000)"},
    {"mode", "serial|openmp", "replicate-loop execution; results are identical (default: openmp)"},
    {"out", "PREFIX", "output prefix (default: rmse)"},
    {"config", "FILE", "key=value defaults; command-line flags override"},
};

constexpr Opt kVerifyOpts[] = {
    {"suite", "NAME", "clt | rate | local-identities | local-expansion | all (also the first positional argument)"},
    {"seed", "S", "RNG seed (required)"},
    {"mode", "serial|openmp", "replicate-loop execution; results are identical (default: openmp)"},
    {"out", "PREFIX", "output prefix (default: verify)"},
    {"n", "N", "sample size per replicate (clt, rate; default: 100000)"},
    {"k", "K", "exceedance count (clt; default: 200)"},
    {"k_grid", "K1,...", "exceedance grid (rate default: 50,100,200,400,800; local-expansion default: 1000,10000,100000)"},
    {"replicates", "R", "replicates (clt default: 1000; rate default: 300)"},
    {"oracle_mc", "N", "limit-law draws behind the oracle truth (clt, rate; default: 1000000)"},
    {"oracle_draws", "N", "Gaussian-oracle draws (rate; default: 20000)"},
    {"d", "D", "frame dimension (local-identities; default: 6)"},
    {"p", "P", "split dimension (local-identities: 0 cycles over 1..d-1; local-expansion default: 2)"},
    {"trials", "N", "random frames (local-identities; default: 1000)"},
    {"competitors", "N", "perturbations tested per trial (local-identities; default: 10)"},
    {"lambda", "L1,...", "frame eigenvalues (local-expansion; default: 1,0.7,0.4,0.15)"},
    {"directions", "N", "random skew directions (local-expansion; default: 20)"},
    {"direction_norm", "X", "Hilbert-Schmidt norm of each direction, at most 5 (local-expansion; default: 2)"},
    {"config", "FILE", "key=value defaults; command-line flags override"},
};

constexpr const char* kModelHelp =
    "model keys (flags --model.X VALUE or config lines model.X=VALUE):\n"
    "  model.family                gumbel | dirichlet | dirichlet_rotated\n"
    "  model.d                     ambient dimension\n"
    "  model.p                     tail-support dimension\n"
    "  model.alpha                 tail index\n"
    "  model.theta                 gumbel dependence parameter (>= 1)\n"
    "  model.dirichlet_params      comma list, padded to p entries (default: all 3)\n"
    "  model.noise_sigma           half-normal noise scale\n"
    "  model.rotation_angle_bound  rotated-family mixing angle bound\n";

const std::set<std::string> kSuiteNames = {"clt", "rate", "local-identities", "local-expansion",
                                           "all"};

template <std::size_t N>
std::set<std::string> allowed_keys(const Opt (&opts)[N]) {
    std::set<std::string> out;
    for (const Opt& o : opts) out.insert(o.key);
    return out;
}

template <std::size_t N>
void print_options(std::ostream& out, const Opt (&opts)[N]) {
    out << "options:\n";
    for (const Opt& o : opts) {
        std::string head = std::string("  --") + o.key + " " + o.arg;
        if (head.size() < 32)
            head += std::string(32 - head.size(), ' ');
        else
            head += "  ";
        out << head << o.doc << "\n";
    }
}

void print_global_help(std::ostream& out) {
    out << "tailpca: tail principal component analysis toolkit\n\n"
        << "usage: tailpca <command> [options]\n\n"
        << "commands:\n"
        << "  analyze   eigenvalues, dimension selection, angular measure, and tail\n"
        << "            functionals of a CSV dataset\n"
        << "  simulate  draw a synthetic heavy-tailed dataset and write it as CSV\n"
        << "  rmse      Monte Carlo RMSE study of the angular-measure estimators\n"
        << "  verify    statistical and algebraic verification suites\n\n"
        << "run 'tailpca <command> --help' for the command's options.\n"
        << "exit codes: 0 success, 1 runtime error, 2 usage error.\n";
}

// Accepts "<suite>.<key>" scoping for verify so that the resolved config of a
// combined run feeds straight back in.
bool key_allowed(const std::string& key, const std::set<std::string>& allowed, bool model_keys,
                 bool suite_scoping) {
    if (allowed.count(key)) return true;
    if (model_keys && key.rfind("model.", 0) == 0 && key.size() > 6) return true;
    if (suite_scoping) {
        for (const auto& suite : kSuiteNames) {
            if (suite == "all") continue;
            const std::string prefix = suite + ".";
            if (key.rfind(prefix, 0) == 0)
                return key_allowed(key.substr(prefix.size()), allowed, model_keys, false);
        }
    }
    return false;
}

struct GatherSpec {
    const std::set<std::string>* allowed;
    bool model_keys = false;
    bool suite_scoping = false;
    std::size_t max_positionals = 0;
};

// Collects --key value / --key=value pairs plus an optional --config file;
// flags override file entries. Returns the merged map.
KV gather_options(const std::vector<std::string>& rest, const GatherSpec& gs, bool& want_help,
                  std::vector<std::string>& positionals) {
    KV from_file;
    KV from_flags;
    auto check = [&](const std::string& key, const char* origin) {
        if (!key_allowed(key, *gs.allowed, gs.model_keys, gs.suite_scoping))
            throw UsageError(std::string("unknown ") + origin + " '" + key + "'");
    };
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const std::string& a = rest[i];
        if (a == "--help" || a == "-h") {
            want_help = true;
            continue;
        }
        if (a.rfind("--", 0) != 0) {
            if (positionals.size() < gs.max_positionals) {
                positionals.push_back(a);
                continue;
            }
            throw UsageError("unexpected argument '" + a + "'");
        }
        std::string key = a.substr(2);
        std::string value;
        bool have_value = false;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
            have_value = true;
        }
        if (key.empty()) throw UsageError("malformed option '" + a + "'");
        if (!have_value) {
            if (i + 1 >= rest.size()) throw UsageError("option '--" + key + "' expects a value");
            value = rest[++i];
        }
        check(key, "option");
        if (key == "config") {
            for (const auto& [fk, fv] : parse_config_file(value)) {
                if (fk == "config")
                    throw UsageError("config files cannot set 'config'");
                check(fk, "config key");
                from_file[fk] = fv;
            }
        } else {
            from_flags[key] = value;
        }
    }
    KV merged = from_file;
    for (const auto& [k, v] : from_flags) merged[k] = v;
    return merged;
}

const std::string* find(const KV& kv, const std::string& key) {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
}

std::string require(const KV& kv, const std::string& key, const char* cmd) {
    if (const std::string* v = find(kv, key)) return *v;
    throw UsageError(std::string(cmd) + " requires --" + key);
}

std::string get_string(const KV& kv, const std::string& key, const std::string& dflt) {
    const std::string* v = find(kv, key);
    return v ? *v : dflt;
}

double get_double(const KV& kv, const std::string& key, double dflt) {
    const std::string* v = find(kv, key);
    return v ? parse_double(key, *v) : dflt;
}

std::size_t get_count(const KV& kv, const std::string& key, std::size_t dflt) {
    const std::string* v = find(kv, key);
    return v ? parse_count(key, *v) : dflt;
}

// Suite-scoped lookup: "<tag>.<key>" wins over plain "<key>".
const std::string* find_scoped(const KV& kv, const std::string& tag, const std::string& key) {
    if (const std::string* v = find(kv, tag + "." + key)) return v;
    return find(kv, key);
}

double get_double_scoped(const KV& kv, const std::string& tag, const std::string& key,
                         double dflt) {
    const std::string* v = find_scoped(kv, tag, key);
    return v ? parse_double(key, *v) : dflt;
}

std::size_t get_count_scoped(const KV& kv, const std::string& tag, const std::string& key,
                             std::size_t dflt) {
    const std::string* v = find_scoped(kv, tag, key);
    return v ? parse_count(key, *v) : dflt;
}

// Model spec from model.* keys layered over per-command defaults; for verify
// an extra "<tag>.model.*" layer binds keys to one suite.
models::ModelSpec resolve_model(const KV& kv, const KV& defaults, const std::string& tag = "") {
    KV merged = defaults;
    for (const auto& [k, v] : kv)
        if (k.rfind("model.", 0) == 0) merged[k.substr(6)] = v;
    if (!tag.empty()) {
        const std::string prefix = tag + ".model.";
        for (const auto& [k, v] : kv)
            if (k.rfind(prefix, 0) == 0) merged[k.substr(prefix.size())] = v;
    }
    return models::model_from_config(merged);
}

void add_model_config(KV& resolved, const models::ModelSpec& spec, const std::string& prefix) {
    for (const auto& [k, v] : models::to_config(spec)) resolved[prefix + k] = v;
}

void write_config_file(const std::string& path, const KV& resolved) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& [k, v] : resolved) out << k << '=' << v << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failure on " + path);
}

std::string config_sibling(const std::string& csv_path) {
    if (csv_path.size() > 4 && csv_path.compare(csv_path.size() - 4, 4, ".csv") == 0)
        return csv_path.substr(0, csv_path.size() - 4) + "_config.txt";
    return csv_path + "_config.txt";
}

functionals::TailFunctionalParams make_params(double alpha, std::size_t p_model, double t_i) {
    functionals::TailFunctionalParams prm;
    prm.alpha = alpha;
    prm.p_model = p_model;
    prm.t_i = t_i;
    return prm;
}

pca::SkewMatrix random_direction(rng::RngStream& rs, std::size_t d, double norm) {
    linalg::Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double g = rs.normal();
            m(i, j) = g;
            m(j, i) = -g;
        }
    const double h = linalg::hs_norm(m);
    if (h == 0.0) throw std::runtime_error("degenerate random direction");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) *= norm / h;
    return pca::SkewMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const std::vector<std::string>& rest, std::ostream& out) {
    static const std::set<std::string> allowed = allowed_keys(kAnalyzeOpts);
    bool help = false;
    std::vector<std::string> positionals;
    const KV kv = gather_options(rest, {&allowed}, help, positionals);
    if (help) {
        out << "usage: tailpca analyze --input FILE --k K [options]\n\n"
            << "Extracts the largest-radius observations of a data set, fits the tail\n"
            << "PCA subspace, selects its dimension, and reports the projected angular\n"
            << "measure with tail functionals (i)-(iv).\n\n";
        print_options(out, kAnalyzeOpts);
        return 0;
    }

    const std::string input = require(kv, "input", "analyze");
    const std::size_t k = parse_count("k", require(kv, "k", "analyze"));
    const std::size_t k_tilde = get_count(kv, "k_tilde", k);
    const std::size_t p_flag = get_count(kv, "p", 0);
    const double tau = get_double(kv, "tau", 0.95);
    const double beta = get_double(kv, "beta", 0.95);
    const bool standardize =
        find(kv, "standardize") ? parse_bool("standardize", kv.at("standardize")) : false;
    const double alpha = get_double(kv, "alpha", 1.0);
    const std::size_t p_model_flag = get_count(kv, "p_model", 0);
    const double t_i = get_double(kv, "t_i", 0.3);
    const std::string prefix = get_string(kv, "out", "analysis");

    extremes::DataMatrix data = extremes::read_data_csv(input);
    if (standardize) data = functionals::rank_frechet_standardize(data);

    const extremes::AngularSample subspace_sample = extremes::extract_exceedances(data, k_tilde);
    const extremes::MomentMatrix sigma = extremes::empirical_moment_matrix(subspace_sample);
    const linalg::SymmetricEigen eig = linalg::symmetric_eigh(sigma.matrix);
    const dimension::DimensionSelection sel =
        dimension::select_dimension(subspace_sample, sigma, tau, beta);
    const std::size_t p_used = p_flag ? p_flag : sel.p_hat;

    functionals::EstimatorConfig ecfg;
    ecfg.k = k;
    ecfg.k_tilde = k_tilde;
    ecfg.dim_mode = functionals::FixedDimension{p_used};
    const functionals::PcaMeasureEstimate est = functionals::pca_angular_measure(data, ecfg);

    const functionals::TailFunctionalParams prm =
        make_params(alpha, p_model_flag ? p_model_flag : p_used, t_i);
    const std::array<double, 4> f = {
        functionals::functional_i(est.measure, prm),
        functionals::functional_ii(est.measure, prm),
        functionals::functional_iii(est.measure, prm),
        functionals::functional_iv(est.measure, prm),
    };

    KV resolved;
    resolved["input"] = input;
    resolved["k"] = std::to_string(k);
    resolved["k_tilde"] = std::to_string(k_tilde);
    resolved["p"] = std::to_string(p_flag);
    resolved["tau"] = fmt_num(tau);
    resolved["beta"] = fmt_num(beta);
    resolved["standardize"] = standardize ? "1" : "0";
    resolved["alpha"] = fmt_num(alpha);
    resolved["p_model"] = std::to_string(prm.p_model);
    resolved["t_i"] = fmt_num(t_i);
    resolved["out"] = prefix;
    write_config_file(prefix + "_config.txt", resolved);

    {
        const std::string path = prefix + "_eigenvalues.csv";
        std::ofstream ev(path);
        if (!ev) throw std::runtime_error("cannot open " + path + " for writing");
        ev << "index,eigenvalue,cumulative_fraction\n";
        double total = 0.0;
        for (double v : eig.eigenvalues) total += v;
        double cum = 0.0;
        for (std::size_t i = 0; i < eig.eigenvalues.size(); ++i) {
            cum += eig.eigenvalues[i];
            const double frac = total > 0.0 ? cum / total : 0.0;
            ev << i + 1 << ',' << fmt_num(eig.eigenvalues[i]) << ',' << fmt_num(frac) << '\n';
        }
        ev.flush();
        if (!ev) throw std::runtime_error("write failure on " + path);
    }
    {
        const std::string path = prefix + "_dimension.csv";
        std::ofstream dt(path);
        if (!dt) throw std::runtime_error("cannot open " + path + " for writing");
        dt << "p,captured,sigma_hat,threshold,selected\n";
        for (const auto& row : sel.per_p)
            dt << row.p << ',' << fmt_num(row.captured) << ',' << fmt_num(row.sigma_hat) << ','
               << fmt_num(row.threshold) << ',' << (row.p == sel.p_hat ? 1 : 0) << '\n';
        dt.flush();
        if (!dt) throw std::runtime_error("write failure on " + path);
    }
    functionals::write_measure_csv(prefix + "_measure.csv", est.measure);
    {
        const std::string path = prefix + "_functionals.csv";
        std::ofstream fn(path);
        if (!fn) throw std::runtime_error("cannot open " + path + " for writing");
        fn << "functional,value\n";
        const char* names[4] = {"i", "ii", "iii", "iv"};
        for (std::size_t i = 0; i < 4; ++i) fn << names[i] << ',' << fmt_num(f[i]) << '\n';
        fn << "mass_deficit," << fmt_num(est.mass_deficit) << '\n';
        fn.flush();
        if (!fn) throw std::runtime_error("write failure on " + path);
    }

    out << "rows " << data.n() << ", columns " << data.d() << ", exceedances " << k
        << " (subspace budget " << k_tilde << ")\n";
    out << "selected dimension p_hat = " << sel.p_hat << " (tau " << fmt_short(tau) << ", beta "
        << fmt_short(beta) << "); subspace dimension used: " << p_used << "\n";
    out << "functionals: (i) " << fmt_short(f[0]) << "  (ii) " << fmt_short(f[1]) << "  (iii) "
        << fmt_short(f[2]) << "  (iv) " << fmt_short(f[3]) << "; mass deficit "
        << fmt_short(est.mass_deficit) << "\n";
    out << "wrote " << prefix << "_{config.txt,eigenvalues.csv,dimension.csv,measure.csv,"
        << "functionals.csv}\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::vector<std::string>& rest, std::ostream& out) {
    static const std::set<std::string> allowed = allowed_keys(kSimulateOpts);
    bool help = false;
    std::vector<std::string> positionals;
    const KV kv = gather_options(rest, {&allowed, /*model_keys=*/true}, help, positionals);
    if (help) {
        out << "usage: tailpca simulate --n N [options]\n\n"
            << "Draws a synthetic heavy-tailed dataset and writes it as CSV, together\n"
            << "with the fully-resolved configuration next to it.\n\n";
        print_options(out, kSimulateOpts);
        out << "\n" << kModelHelp;
        return 0;
    }

    const models::ModelSpec spec = resolve_model(kv, {});
    const std::size_t n = parse_count("n", require(kv, "n", "simulate"));
    const std::string out_path = get_string(kv, "out", "simulated.csv");
    bool entropy_seed = false;
    std::uint64_t seed;
    if (const std::string* v = find(kv, "seed")) {
        seed = parse_seed("seed", *v);
    } else {
        std::random_device rd;
        seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        entropy_seed = true;
    }

    rng::RngStream rs(seed, 0);
    const extremes::DataMatrix data = models::sample_model(rs, spec, n);
    extremes::write_data_csv(out_path, data);

    KV resolved;
    add_model_config(resolved, spec, "model.");
    resolved["n"] = std::to_string(n);
    resolved["seed"] = std::to_string(seed);
    resolved["out"] = out_path;
    const std::string config_path = config_sibling(out_path);
    write_config_file(config_path, resolved);

    out << "seed " << seed << (entropy_seed ? " (drawn from system entropy)" : "") << "\n";
    out << "wrote " << out_path << " (" << n << " rows, d = " << spec.d << ") and " << config_path
        << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// rmse

int cmd_rmse(const std::vector<std::string>& rest, std::ostream& out) {
    static const std::set<std::string> allowed = allowed_keys(kRmseOpts);
    bool help = false;
    std::vector<std::string> positionals;
    const KV kv = gather_options(rest, {&allowed, /*model_keys=*/true}, help, positionals);
    if (help) {
        out << "usage: tailpca rmse --seed S --k_grid K1,K2,... [options]\n\n"
            << "Runs a Monte Carlo RMSE study of the angular-measure estimators over a\n"
            << "grid of exceedance budgets and writes a CSV table plus one SVG chart\n"
            << "per tail functional.\n\n";
        print_options(out, kRmseOpts);
        out << "\n" << kModelHelp;
        return 0;
    }

    const models::ModelSpec spec = resolve_model(kv, {});
    const std::uint64_t seed = parse_seed("seed", require(kv, "seed", "rmse"));
    const std::vector<std::size_t> k_grid =
        parse_count_list("k_grid", require(kv, "k_grid", "rmse"));
    const std::size_t n = get_count(kv, "n", 1000);
    const std::size_t k_tilde = get_count(kv, "k_tilde", 10);
    const std::size_t replicates = get_count(kv, "replicates", 200);
    std::vector<std::string> estimators;
    if (const std::string* v = find(kv, "estimators")) estimators = split_commas(*v);
    const std::size_t fixed_p = get_count(kv, "fixed_p", 0);
    const double tau = get_double(kv, "tau", 0.95);
    const double beta = get_double(kv, "beta", 0.95);
    const double alpha = get_double(kv, "alpha", spec.alpha);
    const std::size_t p_model = get_count(kv, "p_model", spec.p);
    const double t_i = get_double(kv, "t_i", 0.3);
    const std::size_t oracle_mc = get_count(kv, "oracle_mc", 1000000);
    const parallel::ExecMode mode = parse_mode(get_string(kv, "mode", "openmp"));
    const std::string prefix = get_string(kv, "out", "rmse");

    const functionals::TailFunctionalParams prm = make_params(alpha, p_model, t_i);
    std::array<double, 4> truths{};
    if (const std::string* v = find(kv, "truths")) {
        const std::vector<double> xs = parse_double_list("truths", *v);
        if (xs.size() != 4)
            throw UsageError("option 'truths' expects four comma-separated values");
        std::copy(xs.begin(), xs.end(), truths.begin());
    } else {
        const experiments::OracleTruth oracle =
            experiments::compute_oracle(spec, 0.01, oracle_mc, prm, seed ^ kOracleSeedSalt);
        truths = oracle.functional_truths;
    }

    experiments::RmseStudyConfig cfg;
    cfg.spec = spec;
    cfg.n = n;
    cfg.k_grid = k_grid;
    cfg.k_tilde = k_tilde;
    cfg.replicates = replicates;
    cfg.estimators = estimators;
    cfg.params = prm;
    cfg.truths = truths;
    cfg.fixed_p = fixed_p;
    cfg.tau = tau;
    cfg.beta = beta;
    cfg.seed = seed;
    cfg.mode = mode;
    const experiments::RmseTable table = experiments::rmse_study(cfg);

    KV resolved;
    add_model_config(resolved, spec, "model.");
    resolved["seed"] = std::to_string(seed);
    resolved["k_grid"] = join_counts(k_grid);
    resolved["n"] = std::to_string(n);
    resolved["k_tilde"] = std::to_string(k_tilde);
    resolved["replicates"] = std::to_string(replicates);
    resolved["estimators"] = join_strings(table.estimators);
    resolved["fixed_p"] = std::to_string(fixed_p);
    resolved["tau"] = fmt_num(tau);
    resolved["beta"] = fmt_num(beta);
    resolved["alpha"] = fmt_num(alpha);
    resolved["p_model"] = std::to_string(p_model);
    resolved["t_i"] = fmt_num(t_i);
    resolved["truths"] = join_doubles({truths[0], truths[1], truths[2], truths[3]});
    resolved["oracle_mc"] = std::to_string(oracle_mc);
    resolved["mode"] = mode == parallel::ExecMode::serial ? "serial" : "openmp";
    resolved["out"] = prefix;
    write_config_file(prefix + "_config.txt", resolved);

    experiments::write_rmse_csv(prefix + "_table.csv", table);
    experiments::write_rmse_charts(prefix, table);

    out << "rmse study: " << models::family_name(spec.family) << " d=" << spec.d
        << " p=" << spec.p << ", n=" << n << ", " << replicates << " replicates, k in {"
        << join_counts(k_grid) << "}\n";
    out << "truths: " << fmt_short(truths[0]) << ", " << fmt_short(truths[1]) << ", "
        << fmt_short(truths[2]) << ", " << fmt_short(truths[3]) << "\n";
    const std::size_t last = k_grid.size() - 1;
    for (std::size_t e = 0; e < table.estimators.size(); ++e) {
        out << "  " << table.estimators[e] << " rmse at k=" << k_grid[last] << ":";
        for (std::size_t fidx = 0; fidx < 4; ++fidx)
            out << ' ' << fmt_short(table.rmse[e][fidx][last]);
        out << "\n";
    }
    if (!table.mean_p_hat.empty())
        out << "  mean selected dimension at k=" << k_grid[last] << ": "
            << fmt_short(table.mean_p_hat[last]) << "\n";
    out << "wrote " << prefix << "_config.txt, " << prefix << "_table.csv, " << prefix
        << "_{i,ii,iii,iv}.svg\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const std::vector<std::string>& rest, std::ostream& out) {
    static const std::set<std::string> allowed = allowed_keys(kVerifyOpts);
    bool help = false;
    std::vector<std::string> positionals;
    const KV kv = gather_options(rest, {&allowed, /*model_keys=*/true, /*suite_scoping=*/true, 1},
                                 help, positionals);
    if (help) {
        out << "usage: tailpca verify <suite> --seed S [options]\n\n"
            << "Runs a verification suite and writes one pass/fail CSV per suite; the\n"
            << "exit code is 0 exactly when every check passes. Under 'all', options\n"
            << "may be scoped to one suite as --clt.n, --rate.k_grid, and so on.\n\n";
        print_options(out, kVerifyOpts);
        out << "\n" << kModelHelp
            << "model defaults: clt starts from a noise-free dirichlet d=4 p=2;\n"
            << "rate from the rotated variant of the same model.\n";
        return 0;
    }

    std::string suite;
    if (!positionals.empty())
        suite = positionals.front();
    else
        suite = require(kv, "suite", "verify");
    if (!kSuiteNames.count(suite))
        throw UsageError("unknown suite '" + suite +
                         "': valid suites are clt, rate, local-identities, local-expansion, all");
    const std::uint64_t seed = parse_seed("seed", require(kv, "seed", "verify"));
    const parallel::ExecMode mode = parse_mode(get_string(kv, "mode", "openmp"));
    const std::string prefix = get_string(kv, "out", "verify");
    const bool combined = suite == "all";

    KV resolved;
    resolved["suite"] = suite;
    resolved["seed"] = std::to_string(seed);
    resolved["mode"] = mode == parallel::ExecMode::serial ? "serial" : "openmp";
    resolved["out"] = prefix;
    // Under 'all' each suite's keys are emitted with its name prefix, which the
    // option parser accepts back, so the resolved config reruns as-is.
    auto scoped = [&](const std::string& tag, const std::string& key) {
        return combined ? tag + "." + key : key;
    };

    std::vector<std::pair<std::string, experiments::VerificationReport>> reports;

    if (suite == "clt" || combined) {
        const std::string tag = "clt";
        const models::ModelSpec spec = resolve_model(
            kv, {{"family", "dirichlet"}, {"d", "4"}, {"p", "2"}, {"noise_sigma", "0"}}, tag);
        const std::size_t n = get_count_scoped(kv, tag, "n", 100000);
        const std::size_t k = get_count_scoped(kv, tag, "k", 200);
        const std::size_t replicates = get_count_scoped(kv, tag, "replicates", 1000);
        const std::size_t oracle_mc = get_count_scoped(kv, tag, "oracle_mc", 1000000);
        const functionals::TailFunctionalParams prm = make_params(spec.alpha, spec.p, 0.3);
        const experiments::OracleTruth truth =
            experiments::compute_oracle(spec, static_cast<double>(k) / static_cast<double>(n),
                                        oracle_mc, prm, seed ^ kOracleSeedSalt);
        experiments::CltConfig cfg;
        cfg.spec = spec;
        cfg.n = n;
        cfg.k = k;
        cfg.replicates = replicates;
        cfg.seed = seed;
        cfg.mode = mode;
        reports.emplace_back(tag, experiments::verify_clt(cfg, truth));
        add_model_config(resolved, spec, scoped(tag, "model."));
        resolved[scoped(tag, "n")] = std::to_string(n);
        resolved[scoped(tag, "k")] = std::to_string(k);
        resolved[scoped(tag, "replicates")] = std::to_string(replicates);
        resolved[scoped(tag, "oracle_mc")] = std::to_string(oracle_mc);
    }

    if (suite == "rate" || combined) {
        const std::string tag = "rate";
        const models::ModelSpec spec = resolve_model(
            kv, {{"family", "dirichlet_rotated"}, {"d", "4"}, {"p", "2"}, {"noise_sigma", "0"}},
            tag);
        const std::size_t n = get_count_scoped(kv, tag, "n", 100000);
        std::vector<std::size_t> k_grid = {50, 100, 200, 400, 800};
        if (const std::string* v = find_scoped(kv, tag, "k_grid"))
            k_grid = parse_count_list("k_grid", *v);
        const std::size_t replicates = get_count_scoped(kv, tag, "replicates", 300);
        const std::size_t oracle_draws = get_count_scoped(kv, tag, "oracle_draws", 20000);
        const std::size_t oracle_mc = get_count_scoped(kv, tag, "oracle_mc", 1000000);
        if (k_grid.empty()) throw UsageError("option 'k_grid' expects at least one value");
        const functionals::TailFunctionalParams prm = make_params(spec.alpha, spec.p, 0.3);
        const experiments::OracleTruth truth = experiments::compute_oracle(
            spec, static_cast<double>(k_grid.back()) / static_cast<double>(n), oracle_mc, prm,
            seed ^ kOracleSeedSalt);
        experiments::RateConfig cfg;
        cfg.spec = spec;
        cfg.n = n;
        cfg.k_grid = k_grid;
        cfg.replicates = replicates;
        cfg.oracle_draws = oracle_draws;
        cfg.seed = seed;
        cfg.mode = mode;
        reports.emplace_back(tag, experiments::verify_excess_rate(cfg, truth));
        add_model_config(resolved, spec, scoped(tag, "model."));
        resolved[scoped(tag, "n")] = std::to_string(n);
        resolved[scoped(tag, "k_grid")] = join_counts(k_grid);
        resolved[scoped(tag, "replicates")] = std::to_string(replicates);
        resolved[scoped(tag, "oracle_draws")] = std::to_string(oracle_draws);
        resolved[scoped(tag, "oracle_mc")] = std::to_string(oracle_mc);
    }

    if (suite == "local-identities" || combined) {
        const std::string tag = "local-identities";
        experiments::LocalIdentityConfig cfg;
        cfg.d = get_count_scoped(kv, tag, "d", 6);
        cfg.p = get_count_scoped(kv, tag, "p", 0);
        cfg.trials = get_count_scoped(kv, tag, "trials", 1000);
        cfg.competitors = get_count_scoped(kv, tag, "competitors", 10);
        cfg.seed = seed;
        reports.emplace_back(tag, experiments::verify_local_identities(cfg));
        resolved[scoped(tag, "d")] = std::to_string(cfg.d);
        resolved[scoped(tag, "p")] = std::to_string(cfg.p);
        resolved[scoped(tag, "trials")] = std::to_string(cfg.trials);
        resolved[scoped(tag, "competitors")] = std::to_string(cfg.competitors);
    }

    if (suite == "local-expansion" || combined) {
        const std::string tag = "local-expansion";
        std::vector<double> lambda = {1.0, 0.7, 0.4, 0.15};
        if (const std::string* v = find_scoped(kv, tag, "lambda"))
            lambda = parse_double_list("lambda", *v);
        const std::size_t p = get_count_scoped(kv, tag, "p", 2);
        const std::size_t directions = get_count_scoped(kv, tag, "directions", 20);
        const double direction_norm = get_double_scoped(kv, tag, "direction_norm", 2.0);
        std::vector<std::size_t> k_grid = {1000, 10000, 100000};
        if (const std::string* v = find_scoped(kv, tag, "k_grid"))
            k_grid = parse_count_list("k_grid", *v);
        if (lambda.size() < 2) throw UsageError("option 'lambda' expects at least two values");
        if (directions == 0) throw UsageError("option 'directions' expects a positive count");
        linalg::Matrix diag(lambda.size(), lambda.size());
        for (std::size_t i = 0; i < lambda.size(); ++i) diag(i, i) = lambda[i];
        const pca::EigenFrame frame(linalg::symmetric_eigh(diag), p);
        rng::RngStream rs(seed, kAuxStream);
        std::vector<pca::SkewMatrix> dirs;
        dirs.reserve(directions);
        for (std::size_t j = 0; j < directions; ++j)
            dirs.push_back(random_direction(rs, lambda.size(), direction_norm));
        reports.emplace_back(tag, experiments::verify_local_expansion(frame, dirs, k_grid));
        resolved[scoped(tag, "lambda")] = join_doubles(lambda);
        resolved[scoped(tag, "p")] = std::to_string(p);
        resolved[scoped(tag, "directions")] = std::to_string(directions);
        resolved[scoped(tag, "direction_norm")] = fmt_num(direction_norm);
        resolved[scoped(tag, "k_grid")] = join_counts(k_grid);
    }

    write_config_file(prefix + "_config.txt", resolved);
    bool all_pass = true;
    std::string written = prefix + "_config.txt";
    for (const auto& [name, report] : reports) {
        const std::string path = prefix + "_" + name + ".csv";
        experiments::write_report_csv(path, report);
        written += ", " + path;
        for (const auto& c : report.checks)
            out << "[" << name << "] " << c.name << ": " << (c.pass ? "pass" : "FAIL")
                << " (statistic " << fmt_short(c.statistic) << ", tolerance "
                << fmt_short(c.tolerance) << ")" << (c.note.empty() ? "" : "  -- " + c.note)
                << "\n";
        out << "suite " << name << ": " << (report.all_pass() ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && report.all_pass();
    }
    out << "wrote " << written << "\n";
    return all_pass ? 0 : 1;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.empty()) {
            print_global_help(err);
            return 2;
        }
        const std::string& cmd = args.front();
        const std::vector<std::string> rest(args.begin() + 1, args.end());
        if (cmd == "--help" || cmd == "-h" || cmd == "help") {
            print_global_help(out);
            return 0;
        }
        if (cmd == "analyze") return cmd_analyze(rest, out);
        if (cmd == "simulate") return cmd_simulate(rest, out);
        if (cmd == "rmse") return cmd_rmse(rest, out);
        if (cmd == "verify") return cmd_verify(rest, out);
        throw UsageError("unknown command '" + cmd +
                         "'; valid commands: analyze, simulate, rmse, verify");
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace tailpca::cli
