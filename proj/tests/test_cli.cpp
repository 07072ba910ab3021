#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scalefit/cli.hpp"

using namespace scalefit;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("scalefit_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

int run(std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("scalefit");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string run_capture(std::vector<std::string> args, int* code = nullptr) {
    std::stringstream buf;
    std::streambuf* old = std::cout.rdbuf(buf.rdbuf());
    const int rc = run(std::move(args));
    std::cout.rdbuf(old);
    if (code) *code = rc;
    return buf.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synth, fit, eval pipeline reproduces its own surface") {
    TempDir tmp;
    const std::string grid = (tmp.path / "grid.csv").string();
    const std::string law = (tmp.path / "law.txt").string();
    REQUIRE(run({"synth", "--n-min", "2.01e8", "--n-max", "1.7e9", "--d-min", "1e9", "--d-max", "3.3e10",
                 "--out", grid}) == 0);
    REQUIRE(run({"fit", "--grid", grid, "--family", "farseer", "--method", "piecewise", "--out", law}) == 0);

    int code = -1;
    const std::string out = run_capture({"eval", "--law", law, "--grid", grid}, &code);
    REQUIRE(code == 0);
    const auto pos = out.find("mean rel err ");
    REQUIRE(pos != std::string::npos);
    const double mean = std::strtod(out.c_str() + pos + 13, nullptr);
    REQUIRE(mean <= 1e-3);

    REQUIRE(fs::exists(law + ".report.json"));
    REQUIRE(fs::exists(grid + ".eval.csv"));
}

TEST_CASE("predict on a saved law equals the in-memory evaluation to full precision") {
    TempDir tmp;
    LawFile f;
    f.law = LawParams::make(reference_farseer_params());
    const std::string law = (tmp.path / "law.txt").string();
    save_law(f, law);
    int code = -1;
    const std::string out = run_capture({"predict", "--law", law, "--n", "6.37e9", "--d", "9.05e10"}, &code);
    REQUIRE(code == 0);
    const double printed = std::strtod(out.c_str(), nullptr);
    REQUIRE(printed == eval_farseer(reference_farseer_params(), 6.37e9, 9.05e10));
}

TEST_CASE("optimal reports a unit ratio for a symmetric law") {
    TempDir tmp;
    LawFile f;
    f.law = LawParams::make(ChinchillaParams{100, 0.5, 100, 0.5, 1.0});
    const std::string law = (tmp.path / "law.txt").string();
    const std::string out = (tmp.path / "sweep.csv").string();
    save_law(f, law);
    REQUIRE(run({"optimal", "--law", law, "--c-min", "1e20", "--c-max", "1e23", "--out", out}) == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "c,n_star,d_star,ratio,loss_at_opt,boundary_warning");
    int rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        REQUIRE(cols.size() == 6);
        REQUIRE(std::strtod(cols[3].c_str(), nullptr) == Approx(1.0).margin(1e-4));
        ++rows;
    }
    REQUIRE(rows == 4);
}

TEST_CASE("synth is deterministic across invocations") {
    TempDir tmp;
    const std::string g1 = (tmp.path / "g1.csv").string();
    const std::string g2 = (tmp.path / "g2.csv").string();
    const std::vector<std::string> common = {"--n-min", "2.01e8", "--n-max", "8.1e8", "--d-min", "1e9",
                                             "--d-max", "1.7e10", "--noise-sigma", "1e-3", "--seed", "9"};
    auto args1 = common; args1.insert(args1.begin(), "synth"); args1.push_back("--out"); args1.push_back(g1);
    auto args2 = common; args2.insert(args2.begin(), "synth"); args2.push_back("--out"); args2.push_back(g2);
    REQUIRE(run(args1) == 0);
    REQUIRE(run(args2) == 0);
    REQUIRE(read_file(g1) == read_file(g2));
}

TEST_CASE("diagnose emits perspective and residual series") {
    TempDir tmp;
    const std::string grid = (tmp.path / "grid.csv").string();
    const std::string law = (tmp.path / "law.txt").string();
    const std::string prefix = (tmp.path / "diag").string();
    REQUIRE(run({"synth", "--n-min", "2.01e8", "--n-max", "1.7e9", "--d-min", "1e9", "--d-max", "3.3e10",
                 "--out", grid}) == 0);
    REQUIRE(run({"fit", "--grid", grid, "--out", law}) == 0);
    REQUIRE(run({"diagnose", "--grid", grid, "--law", law, "--out", prefix}) == 0);
    const std::string persp = read_file(prefix + ".perspectives.csv");
    REQUIRE(persp.find("diff_d_vs_d") != std::string::npos);
    REQUIRE(fs::exists(prefix + ".residuals.csv"));
    REQUIRE(fs::exists(prefix + ".gvalues.csv"));
}

TEST_CASE("compare emits a delta lattice") {
    TempDir tmp;
    LawFile a, b;
    a.law = LawParams::make(ChinchillaParams{100, 0.3, 120, 0.25, 1.0});
    b.law = LawParams::make(ChinchillaParams{102, 0.3, 122, 0.25, 1.02});
    const std::string pa = (tmp.path / "a.txt").string();
    const std::string pb = (tmp.path / "b.txt").string();
    const std::string prefix = (tmp.path / "cmp").string();
    save_law(a, pa);
    save_law(b, pb);
    REQUIRE(run({"compare", "--law-a", pa, "--law-b", pb, "--n-range", "1e8:1e11", "--d-range", "1e9:1e12",
                 "--resolution", "8", "--out", prefix}) == 0);
    std::ifstream in(prefix + ".delta.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    REQUIRE(rows == 1 + 8 * 8);
}

TEST_CASE("the optimal command accepts a training-config annotation overlay") {
    TempDir tmp;
    LawFile f;
    f.law = LawParams::make(ChinchillaParams{100, 0.5, 100, 0.5, 1.0});
    const std::string law = (tmp.path / "law.txt").string();
    save_law(f, law);
    const std::string ann = (tmp.path / "ann.csv").string();
    {
        std::ofstream out(ann);
        out << "n,d,label\n4.05e11,1.5e13,big-run\n2.35e11,3.6e13,bigger-run\n";
    }
    const std::string report = (tmp.path / "rep.json").string();
    REQUIRE(run({"optimal", "--law", law, "--c-min", "1e20", "--c-max", "1e21", "--annotations", ann,
                 "--out", (tmp.path / "sweep.csv").string(), "--report", report}) == 0);
    const std::string rep = read_file(report);
    REQUIRE(rep.find("big-run") != std::string::npos);
    REQUIRE(rep.find("annotations") != std::string::npos);
}

TEST_CASE("the thread-count variable does not change results") {
    TempDir tmp;
    const std::string grid = (tmp.path / "grid.csv").string();
    REQUIRE(run({"synth", "--n-min", "2.01e8", "--n-max", "8.1e8", "--d-min", "1e9", "--d-max", "1.7e10",
                 "--noise-sigma", "1e-3", "--seed", "4", "--out", grid}) == 0);
    const std::string law1 = (tmp.path / "law1.txt").string();
    const std::string law4 = (tmp.path / "law4.txt").string();
    setenv("SCALEFIT_THREADS", "1", 1);
    REQUIRE(run({"fit", "--grid", grid, "--family", "chinchilla", "--method", "nonlinear", "--starts", "8",
                 "--seed", "5", "--out", law1}) == 0);
    setenv("SCALEFIT_THREADS", "4", 1);
    REQUIRE(run({"fit", "--grid", grid, "--family", "chinchilla", "--method", "nonlinear", "--starts", "8",
                 "--seed", "5", "--out", law4}) == 0);
    unsetenv("SCALEFIT_THREADS");
    const LawFile a = load_law(law1);
    const LawFile b = load_law(law4);
    REQUIRE(a.law.chinchilla.A == b.law.chinchilla.A);
    REQUIRE(a.law.chinchilla.alpha == b.law.chinchilla.alpha);
    REQUIRE(a.law.chinchilla.B == b.law.chinchilla.B);
    REQUIRE(a.law.chinchilla.beta == b.law.chinchilla.beta);
    REQUIRE(a.law.chinchilla.E == b.law.chinchilla.E);
}

TEST_CASE("usage errors exit 1, data errors exit 2") {
    TempDir tmp;
    REQUIRE(run({"fit", "--grid"}) == 1);           // missing value
    REQUIRE(run({"nonsense"}) == 1);                // unknown subcommand
    REQUIRE(run({"fit", "--grid", (tmp.path / "absent.csv").string(), "--out",
                 (tmp.path / "law.txt").string()}) == 2);  // missing file
    const std::string bad = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(bad);
        out << "n,d,loss\n1e8,1e9,1.0\n1e8,1e9,1.0\n";
    }
    REQUIRE(run({"fit", "--grid", bad, "--out", (tmp.path / "law.txt").string()}) == 2);
    REQUIRE(run({"fit", "--grid", bad, "--family", "chinchilla", "--method", "piecewise", "--out",
                 (tmp.path / "law.txt").string()}) == 1);  // invalid combination
}
