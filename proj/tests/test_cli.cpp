#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tailpca/cli.hpp"
#include "tailpca/extremes.hpp"

namespace fs = std::filesystem;
using tailpca::cli::run_cli;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// Every test works inside its own scratch directory under the build tree.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::path("cli_scratch") / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

}  // namespace

TEST_CASE("global and per-command help list every flag and exit 0") {
    const CliResult top = run({"--help"});
    CHECK(top.code == 0);
    CHECK(top.out.find("analyze") != std::string::npos);
    CHECK(top.out.find("simulate") != std::string::npos);
    CHECK(top.out.find("rmse") != std::string::npos);
    CHECK(top.out.find("verify") != std::string::npos);

    const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
        {"analyze",
         {"input", "k", "k_tilde", "p", "tau", "beta", "standardize", "alpha", "p_model", "t_i",
          "out", "config"}},
        {"simulate", {"n", "seed", "out", "config"}},
        {"rmse",
         {"seed", "k_grid", "n", "k_tilde", "replicates", "estimators", "fixed_p", "tau", "beta",
          "alpha", "p_model", "t_i", "truths", "oracle_mc", "mode", "out", "config"}},
        {"verify",
         {"suite", "seed", "mode", "out", "n", "k", "k_grid", "replicates", "oracle_mc",
          "oracle_draws", "d", "p", "trials", "competitors", "lambda", "directions",
          "direction_norm", "config"}},
    };
    for (const auto& [cmd, flags] : commands) {
        const CliResult r = run({cmd, "--help"});
        CHECK(r.code == 0);
        for (const auto& flag : flags) {
            INFO(cmd << " --help should mention --" << flag);
            CHECK(r.out.find("--" + flag) != std::string::npos);
        }
    }
    // model keys are documented wherever they are accepted
    for (const char* cmd : {"simulate", "rmse", "verify"}) {
        const CliResult r = run({cmd, "--help"});
        CHECK(r.out.find("model.family") != std::string::npos);
        CHECK(r.out.find("model.noise_sigma") != std::string::npos);
    }
}

TEST_CASE("empty invocation and unknown command are usage errors") {
    const CliResult none = run({});
    CHECK(none.code == 2);
    CHECK(none.err.find("usage") != std::string::npos);

    const CliResult bad = run({"frobnicate"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown command 'frobnicate'") != std::string::npos);
    CHECK(bad.err.find("analyze") != std::string::npos);

    const CliResult opt = run({"simulate", "--bogus", "3", "--n", "5"});
    CHECK(opt.code == 2);
    CHECK(opt.err.find("unknown option 'bogus'") != std::string::npos);
}

TEST_CASE("simulate: same seed gives byte-identical files, different seeds differ") {
    Scratch s("sim_seed");
    const std::vector<std::string> base = {"simulate",        "--model.family", "dirichlet",
                                           "--model.d",       "4",              "--model.p",
                                           "2",               "--n",            "200",
                                           "--seed",          "7",              "--out"};
    auto with_out = [&](const std::string& path, const std::string& seed) {
        std::vector<std::string> args = base;
        args.push_back(path);
        args[10] = seed;
        return args;
    };
    CHECK(run(with_out(s / "a.csv", "7")).code == 0);
    CHECK(run(with_out(s / "b.csv", "7")).code == 0);
    CHECK(run(with_out(s / "c.csv", "8")).code == 0);
    const std::string a = slurp(s / "a.csv");
    CHECK(a == slurp(s / "b.csv"));
    CHECK(a != slurp(s / "c.csv"));
    CHECK(count_lines(a) == 201);  // header + 200 rows

    // the emitted config names the seed and reproduces the file exactly
    const std::string config = slurp(s / "a_config.txt");
    CHECK(config.find("seed=7\n") != std::string::npos);
    CHECK(config.find("model.family=dirichlet\n") != std::string::npos);
}

TEST_CASE("simulate: omitted seed is drawn from entropy, printed, and reusable") {
    Scratch s("sim_entropy");
    const CliResult r = run({"simulate", "--n", "50", "--model.d", "3", "--model.p", "2",
                             "--out", s / "e.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("system entropy") != std::string::npos);

    // recover the seed from the resolved config and reproduce the file
    const std::string config = slurp(s / "e_config.txt");
    const auto pos = config.find("seed=");
    REQUIRE(pos != std::string::npos);
    const std::string seed = config.substr(pos + 5, config.find('\n', pos) - pos - 5);
    const CliResult again = run({"simulate", "--n", "50", "--model.d", "3", "--model.p", "2",
                                 "--seed", seed, "--out", s / "f.csv"});
    REQUIRE(again.code == 0);
    CHECK(slurp(s / "e.csv") == slurp(s / "f.csv"));
}

TEST_CASE("simulate: gumbel tail columns beyond p are noise-only") {
    Scratch s("sim_gumbel");
    // zero noise: the unsupported columns are exactly zero
    CHECK(run({"simulate", "--model.family", "gumbel", "--model.d", "10", "--model.p", "2",
               "--model.theta", "2", "--model.alpha", "2", "--model.noise_sigma", "0", "--n",
               "500", "--seed", "3", "--out", s / "g0.csv"})
              .code == 0);
    const auto z = tailpca::extremes::read_data_csv(s / "g0.csv");
    REQUIRE(z.n() == 500);
    REQUIRE(z.d() == 10);
    for (std::size_t i = 0; i < z.n(); ++i)
        for (std::size_t j = 2; j < 10; ++j) CHECK(z.at(i, j) == 0.0);

    // unit noise: those columns are nonnegative and light-tailed, while the
    // supported columns reach far larger values
    CHECK(run({"simulate", "--model.family", "gumbel", "--model.d", "10", "--model.p", "2",
               "--model.theta", "2", "--model.alpha", "2", "--model.noise_sigma", "1", "--n",
               "500", "--seed", "3", "--out", s / "g1.csv"})
              .code == 0);
    const auto w = tailpca::extremes::read_data_csv(s / "g1.csv");
    double tail_max = 0.0;
    double head_max = 0.0;
    for (std::size_t i = 0; i < w.n(); ++i) {
        for (std::size_t j = 2; j < 10; ++j) {
            CHECK(w.at(i, j) >= 0.0);
            tail_max = std::max(tail_max, w.at(i, j));
        }
        for (std::size_t j = 0; j < 2; ++j) head_max = std::max(head_max, w.at(i, j));
    }
    CHECK(tail_max < 8.0);
    CHECK(head_max > 20.0);
}

TEST_CASE("simulate: n=0 writes a header-only csv") {
    Scratch s("sim_empty");
    const CliResult r = run({"simulate", "--n", "0", "--model.d", "3", "--model.p", "2", "--seed",
                             "1", "--out", s / "empty.csv"});
    REQUIRE(r.code == 0);
    CHECK(slurp(s / "empty.csv") == "x1,x2,x3\n");
}

TEST_CASE("analyze: noiseless dirichlet round trip selects p_hat = 2") {
    Scratch s("an_roundtrip");
    REQUIRE(run({"simulate", "--model.family", "dirichlet", "--model.d", "10", "--model.p", "2",
                 "--model.noise_sigma", "0", "--n", "2000", "--seed", "42", "--out",
                 s / "d10.csv"})
                .code == 0);
    const CliResult r = run({"analyze", "--input", s / "d10.csv", "--k", "100", "--out", s / "an"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("p_hat = 2") != std::string::npos);

    // the dimension table marks exactly one selected row, at p = 2
    const std::string table = slurp(s / "an_dimension.csv");
    CHECK(table.find("\np,") == std::string::npos);  // single header
    std::istringstream lines(table);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "p,captured,sigma_hat,threshold,selected");
    std::size_t selected_p = 0;
    std::size_t selected_count = 0;
    while (std::getline(lines, line)) {
        if (line.size() >= 2 && line.back() == '1' && line[line.size() - 2] == ',') {
            ++selected_count;
            selected_p = std::stoul(line.substr(0, line.find(',')));
        }
    }
    CHECK(selected_count == 1);
    CHECK(selected_p == 2);

    // report files all exist and functional (iv) vanishes on this model
    CHECK(fs::exists(s / "an_eigenvalues.csv"));
    CHECK(fs::exists(s / "an_measure.csv"));
    CHECK(fs::exists(s / "an_config.txt"));
    const std::string f = slurp(s / "an_functionals.csv");
    CHECK(f.find("iv,0\n") != std::string::npos);
    CHECK(f.find("mass_deficit,0\n") != std::string::npos);
}

TEST_CASE("analyze: a zero row is rejected with its index, exit 1") {
    Scratch s("an_zero");
    write_file(s / "zero.csv", "x1,x2,x3\n1,2,3\n0.5,0,1\n0,0,0\n2,1,0\n");
    const CliResult r = run({"analyze", "--input", s / "zero.csv", "--k", "2"});
    CHECK(r.code == 1);
    CHECK(r.err.find("zero row") != std::string::npos);
    CHECK(r.err.find("3") != std::string::npos);
}

TEST_CASE("analyze: --k 0 is a usage error and leaves no output behind") {
    Scratch s("an_k0");
    write_file(s / "ok.csv", "x1,x2\n1,2\n2,1\n3,1\n1,3\n");
    const CliResult r = run({"analyze", "--input", s / "ok.csv", "--k", "0", "--out", s / "out"});
    CHECK(r.code == 2);
    CHECK(!fs::exists(s / "out_config.txt"));
    CHECK(!fs::exists(s / "out_functionals.csv"));
}

TEST_CASE("analyze: invalid functional parameters fail before any file is written") {
    Scratch s("an_partial");
    write_file(s / "ok.csv", "x1,x2\n1,2\n2,1\n3,1\n1,3\n5,2\n2,5\n");
    const CliResult r = run({"analyze", "--input", s / "ok.csv", "--k", "3", "--p_model", "99",
                             "--out", s / "zz"});
    CHECK(r.code == 2);
    CHECK(!fs::exists(s / "zz_config.txt"));
    CHECK(!fs::exists(s / "zz_eigenvalues.csv"));
    CHECK(!fs::exists(s / "zz_functionals.csv"));
}

TEST_CASE("analyze: missing input file is a runtime error") {
    const CliResult r = run({"analyze", "--input", "cli_scratch/no_such_file.csv", "--k", "5"});
    CHECK(r.code == 1);
}

TEST_CASE("config files: comments, overrides, and malformed lines") {
    Scratch s("config_file");
    write_file(s / "sim.conf",
               "# simulation defaults\nmodel.family = dirichlet\nmodel.d=4\nmodel.p=2\n"
               "n = 100   # desk scale\nseed=5\n");
    const std::string out1 = s / "c1.csv";
    REQUIRE(run({"simulate", "--config", s / "sim.conf", "--out", out1}).code == 0);
    CHECK(count_lines(slurp(out1)) == 101);

    // flags override file values
    const std::string out2 = s / "c2.csv";
    REQUIRE(run({"simulate", "--config", s / "sim.conf", "--n", "7", "--out", out2}).code == 0);
    CHECK(count_lines(slurp(out2)) == 8);
    CHECK(slurp(s / "c2_config.txt").find("n=7\n") != std::string::npos);

    // malformed content and unknown keys are usage errors
    write_file(s / "bad.conf", "model.d\n");
    CHECK(run({"simulate", "--config", s / "bad.conf", "--n", "5"}).code == 2);
    write_file(s / "unknown.conf", "frobnicate=1\n");
    CHECK(run({"simulate", "--config", s / "unknown.conf", "--n", "5"}).code == 2);
    write_file(s / "nested.conf", "config=other.conf\n");
    CHECK(run({"simulate", "--config", s / "nested.conf", "--n", "5"}).code == 2);
    CHECK(run({"simulate", "--config", s / "missing.conf", "--n", "5"}).code == 2);
}

TEST_CASE("rmse: single replicate yields a well-formed table and charts") {
    Scratch s("rmse_single");
    const CliResult r =
        run({"rmse",           "--seed",       "1",
             "--k_grid",       "20,40",        "--n",
             "200",            "--replicates", "1",
             "--model.family", "dirichlet",    "--model.d",
             "3",              "--model.p",    "2",
             "--model.noise_sigma",            "0",
             "--truths",       "0.9,0.4,0.7,0", "--out",
             s / "r1"});
    REQUIRE(r.code == 0);
    const std::string table = slurp(s / "r1_table.csv");
    std::istringstream lines(table);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "estimator,functional,k,rmse");
    std::size_t rows = 0;
    std::size_t p_hat_rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        const auto last_comma = line.rfind(',');
        const double value = std::stod(line.substr(last_comma + 1));
        CHECK(std::isfinite(value));
        CHECK(value >= 0.0);
        if (line.rfind("mean_p_hat", 0) == 0) ++p_hat_rows;
    }
    CHECK(rows == 5 * 4 * 2 + 2);  // five estimators, four functionals, two k, p_hat rows
    CHECK(p_hat_rows == 2);
    for (const char* leaf : {"r1_i.svg", "r1_ii.svg", "r1_iii.svg", "r1_iv.svg"}) {
        const std::string svg = slurp(s / leaf);
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
}

TEST_CASE("rmse: unknown estimator is a usage error listing the valid names") {
    Scratch s("rmse_estimator");
    const CliResult r = run({"rmse", "--seed", "1", "--k_grid", "20", "--n", "100",
                             "--replicates", "2", "--estimators", "direct,bogus", "--truths",
                             "0.9,0.4,0.7,0", "--out", s / "x"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown estimator 'bogus'") != std::string::npos);
    CHECK(r.err.find("valid names") != std::string::npos);
    CHECK(r.err.find("altpca_auto") != std::string::npos);
    CHECK(!fs::exists(s / "x_table.csv"));
}

TEST_CASE("rmse and verify require an explicit seed") {
    const CliResult r1 = run({"rmse", "--k_grid", "20", "--truths", "0.9,0.4,0.7,0"});
    CHECK(r1.code == 2);
    CHECK(r1.err.find("requires --seed") != std::string::npos);
    const CliResult r2 = run({"verify", "local-identities"});
    CHECK(r2.code == 2);
    CHECK(r2.err.find("requires --seed") != std::string::npos);
}

TEST_CASE("rmse: emitted config reruns to byte-identical outputs") {
    Scratch s("rmse_rerun");
    const std::vector<std::string> args = {
        "rmse",      "--seed",      "11",        "--k_grid", "30,60", "--n",   "400",
        "--replicates", "30",       "--model.family", "dirichlet", "--model.d", "5",
        "--model.p", "2",           "--model.noise_sigma", "0", "--oracle_mc", "200000",
        "--out",     s / "rm"};
    REQUIRE(run(args).code == 0);
    // second run via the resolved config; recorded truths skip the oracle pass
    REQUIRE(run({"rmse", "--config", s / "rm_config.txt", "--out", s / "rm2"}).code == 0);
    CHECK(slurp(s / "rm_table.csv") == slurp(s / "rm2_table.csv"));
    for (const char* f : {"_i.svg", "_ii.svg", "_iii.svg", "_iv.svg"})
        CHECK(slurp((s / "rm") + f) == slurp((s / "rm2") + f));
    CHECK(slurp(s / "rm2_config.txt").find("truths=") != std::string::npos);
}

TEST_CASE("verify: unknown suite exits 2") {
    const CliResult r = run({"verify", "bogus", "--seed", "3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown suite 'bogus'") != std::string::npos);
    CHECK(r.err.find("local-expansion") != std::string::npos);
}

TEST_CASE("verify: local-identities at default size passes with exit 0") {
    Scratch s("verify_ids");
    const CliResult r = run({"verify", "local-identities", "--seed", "3", "--out", s / "vid"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("suite local-identities: PASS") != std::string::npos);
    const std::string csv = slurp(s / "vid_local-identities.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "suite,check,statistic,tolerance,pass,note");
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.find(",1,") != std::string::npos);  // pass column
    }
    CHECK(rows == 6);
    // resolved defaults are recorded
    const std::string config = slurp(s / "vid_config.txt");
    CHECK(config.find("trials=1000\n") != std::string::npos);
    CHECK(config.find("d=6\n") != std::string::npos);
}

TEST_CASE("verify: local-expansion passes and reruns byte-identically") {
    Scratch s("verify_exp");
    const std::vector<std::string> args = {"verify", "local-expansion", "--seed", "9"};
    auto with_out = [&](const std::string& prefix) {
        std::vector<std::string> a = args;
        a.push_back("--out");
        a.push_back(prefix);
        return a;
    };
    REQUIRE(run(with_out(s / "e1")).code == 0);
    REQUIRE(run(with_out(s / "e2")).code == 0);
    CHECK(slurp(s / "e1_local-expansion.csv") == slurp(s / "e2_local-expansion.csv"));
    CHECK(slurp(s / "e1_local-expansion.csv").find(",1,") != std::string::npos);
}

TEST_CASE("verify: degenerate clt model passes quickly through the cli") {
    Scratch s("verify_clt");
    // d=2, p=1 has a deterministic angular part: every statistic is exactly zero
    const CliResult r = run({"verify", "clt", "--seed", "5", "--model.d", "2", "--model.p", "1",
                             "--n", "2000", "--k", "100", "--replicates", "500", "--oracle_mc",
                             "100000", "--out", s / "vc"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("suite clt: PASS") != std::string::npos);
    const std::string config = slurp(s / "vc_config.txt");
    CHECK(config.find("model.family=dirichlet\n") != std::string::npos);  // suite default
    CHECK(config.find("model.noise_sigma=0\n") != std::string::npos);
    CHECK(config.find("suite=clt\n") != std::string::npos);
}

TEST_CASE("verify: rate suite at desk scale passes with slope near -1") {
    Scratch s("verify_rate");
    const CliResult r = run({"verify", "rate", "--seed", "31", "--n", "20000", "--k_grid",
                             "40,80,160,400", "--replicates", "200", "--oracle_mc", "200000",
                             "--model.d", "3", "--model.p", "1", "--out", s / "vr"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("log_slope_near_minus_one: pass") != std::string::npos);
    CHECK(r.out.find("suite rate: PASS") != std::string::npos);
    // the rate suite inherits the rotated model family by default
    CHECK(slurp(s / "vr_config.txt").find("model.family=dirichlet_rotated\n") !=
          std::string::npos);
}

TEST_CASE("verify: combined run accepts suite-scoped keys and its config reruns") {
    Scratch s("verify_all");
    const std::vector<std::string> args = {"verify",
                                           "all",
                                           "--seed",
                                           "5",
                                           "--clt.model.d",
                                           "2",
                                           "--clt.model.p",
                                           "1",
                                           "--clt.n",
                                           "2000",
                                           "--clt.k",
                                           "100",
                                           "--clt.replicates",
                                           "500",
                                           "--clt.oracle_mc",
                                           "100000",
                                           "--rate.model.d",
                                           "3",
                                           "--rate.model.p",
                                           "1",
                                           "--rate.n",
                                           "20000",
                                           "--rate.k_grid",
                                           "40,80,160,400",
                                           "--rate.replicates",
                                           "200",
                                           "--rate.oracle_mc",
                                           "200000",
                                           "--local-identities.trials",
                                           "100",
                                           "--local-expansion.directions",
                                           "5",
                                           "--out",
                                           s / "va"};
    const CliResult r = run(args);
    REQUIRE(r.code == 0);
    for (const char* suite : {"clt", "rate", "local-identities", "local-expansion"}) {
        CHECK(r.out.find(std::string("suite ") + suite + ": PASS") != std::string::npos);
        CHECK(fs::exists((s / "va_") + suite + ".csv"));
    }
    // resolved config uses suite-scoped keys and reproduces every report
    const std::string config = slurp(s / "va_config.txt");
    CHECK(config.find("clt.n=2000\n") != std::string::npos);
    CHECK(config.find("rate.k_grid=40,80,160,400\n") != std::string::npos);
    CHECK(config.find("local-identities.trials=100\n") != std::string::npos);
    CHECK(config.find("clt.model.d=2\n") != std::string::npos);
    REQUIRE(run({"verify", "--config", s / "va_config.txt", "--out", s / "vb"}).code == 0);
    for (const char* suite : {"clt", "rate", "local-identities", "local-expansion"})
        CHECK(slurp((s / "va_") + suite + ".csv") == slurp((s / "vb_") + suite + ".csv"));
}
