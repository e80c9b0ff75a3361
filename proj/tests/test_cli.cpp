#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

std::string cli_binary() {
    const char* env = std::getenv("GLAVA_CLI");
    REQUIRE(env != nullptr);
    return env;
}

CliResult run_cli(const std::string& args) {
    const std::string cmd = cli_binary() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("glava_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("simulate writes deterministic files and validates flags", "[cli]") {
    TempDir tmp;
    const std::string flags = "simulate --n 50 --p 8 --q 2 --s 3 --nu 1 --design toeplitz "
                              "--seed 7 --out " +
                              tmp.file("d.csv") + " --truth " + tmp.file("t.csv");
    const CliResult first = run_cli(flags);
    REQUIRE(first.exit_code == 0);
    const std::string data_a = slurp(tmp.file("d.csv"));
    const std::string truth_a = slurp(tmp.file("t.csv"));

    // header + 50 rows
    CHECK(std::count(data_a.begin(), data_a.end(), '\n') == 51);

    const CliResult second = run_cli(flags);
    REQUIRE(second.exit_code == 0);
    CHECK(slurp(tmp.file("d.csv")) == data_a);
    CHECK(slurp(tmp.file("t.csv")) == truth_a);

    const CliResult bad = run_cli("simulate --n 50 --p 20 --s 30 --out " + tmp.file("x.csv") +
                                  " --truth " + tmp.file("y.csv"));
    CHECK(bad.exit_code == 2);
    CHECK(bad.output.find("s must not exceed p") != std::string::npos);
}

TEST_CASE("fit reproduces the one-dimensional toy and the lasso sentinel", "[cli]") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("toy.csv"));
        out << "y,x1\n1,1\n";
    }
    const CliResult lava = run_cli("fit --data " + tmp.file("toy.csv") +
                                   " --link identity --lambda1 2 --lambda2 1 --out " +
                                   tmp.file("fit.csv"));
    REQUIRE(lava.exit_code == 0);
    CHECK(lava.output.find("objective") != std::string::npos);
    CHECK(lava.output.find("kkt_residual") != std::string::npos);
    {
        std::ifstream in(tmp.file("fit.csv"));
        std::string header, row;
        REQUIRE(std::getline(in, header));
        REQUIRE(std::getline(in, row));
        CHECK(header == "feature,beta_hat,b_hat,theta_hat");
        // beta_hat = 0, b_hat = theta_hat = 1/3
        CHECK(row.rfind("x1,0,0.333333", 0) == 0);
    }

    const CliResult lasso = run_cli("fit --data " + tmp.file("toy.csv") +
                                    " --link identity --lambda1 0.5 --lambda2 inf --out " +
                                    tmp.file("lasso.csv"));
    REQUIRE(lasso.exit_code == 0);
    {
        std::ifstream in(tmp.file("lasso.csv"));
        std::string header, row;
        REQUIRE(std::getline(in, header));
        REQUIRE(std::getline(in, row));
        CHECK(row.rfind("x1,0.5", 0) == 0);
        // b column is exactly zero in lasso mode
        CHECK(row.find(",0,") != std::string::npos);
    }

    CHECK(run_cli("fit --data " + tmp.file("toy.csv") + " --lambda1 1 --out " +
                  tmp.file("z.csv"))
              .exit_code == 2);  // neither --gamma nor --lambda2

    {
        std::ofstream out(tmp.file("no_y.csv"));
        out << "a,b\n1,2\n";
    }
    CHECK(run_cli("fit --data " + tmp.file("no_y.csv") + " --lambda1 1 --lambda2 1 --out " +
                  tmp.file("z.csv"))
              .exit_code == 2);

    CHECK(run_cli("fit --data " + tmp.file("missing.csv") + " --lambda1 1 --lambda2 1 --out " +
                  tmp.file("z.csv"))
              .exit_code == 4);
}

TEST_CASE("cv subcommand writes the table", "[cli]") {
    TempDir tmp;
    REQUIRE(run_cli("simulate --n 40 --p 4 --q 0 --s 2 --nu 0 --response linear --seed 3 "
                    "--out " +
                    tmp.file("d.csv") + " --truth " + tmp.file("t.csv"))
                .exit_code == 0);
    const CliResult cv = run_cli("cv --data " + tmp.file("d.csv") +
                                 " --link identity --folds 4 --n-lambda1 5 "
                                 "--gamma-grid 1,2 --seed 9 --out " +
                                 tmp.file("cv.csv"));
    REQUIRE(cv.exit_code == 0);
    CHECK(cv.output.find("best_lambda1") != std::string::npos);
    const std::string table = slurp(tmp.file("cv.csv"));
    CHECK(std::count(table.begin(), table.end(), '\n') == 11);  // header + 5*2 rows
}

TEST_CASE("gcm-test decision matches its own statistic and maps degeneracy to exit 3",
          "[cli]") {
    TempDir tmp;
    REQUIRE(run_cli("simulate --n 80 --p 5 --q 2 --s 2 --nu 1 --with-w --b-effect 0 "
                    "--seed 21 --out " +
                    tmp.file("dw.csv") + " --truth " + tmp.file("tw.csv"))
                .exit_code == 0);
    const CliResult gcm = run_cli("gcm-test --data " + tmp.file("dw.csv") +
                                  " --alpha 0.05 --fixed --lambda1-y 0.1 --gamma-y 2 "
                                  "--lambda1-w 0.1 --gamma-w 2 --out " +
                                  tmp.file("gcm.csv"));
    REQUIRE(gcm.exit_code == 0);
    const std::string row = slurp(tmp.file("gcm.csv"));
    CHECK(row.rfind("t_stat,p_value,reject,alpha,n\n", 0) == 0);

    // p_value within [0,1]; decision consistent with the reported statistic
    std::istringstream parse(row.substr(row.find('\n') + 1));
    std::string t_str, p_str, rej_str;
    std::getline(parse, t_str, ',');
    std::getline(parse, p_str, ',');
    std::getline(parse, rej_str, ',');
    const double p_value = std::stod(p_str);
    CHECK(p_value >= 0.0);
    CHECK(p_value <= 1.0);
    CHECK(((rej_str == "1") == (p_value < 0.05)));

    // dataset without w -> usage error
    REQUIRE(run_cli("simulate --n 30 --p 4 --q 0 --s 2 --nu 0 --seed 4 --out " +
                    tmp.file("now.csv") + " --truth " + tmp.file("nt.csv"))
                .exit_code == 0);
    CHECK(run_cli("gcm-test --data " + tmp.file("now.csv") + " --out " + tmp.file("g.csv"))
              .exit_code == 2);

    // constant residual products -> degenerate, exit 3
    {
        std::ofstream out(tmp.file("const.csv"));
        out << "y,w,x1\n1,1,1\n1,1,1\n1,1,1\n1,1,1\n";
    }
    const CliResult degen = run_cli("gcm-test --data " + tmp.file("const.csv") +
                                    " --fixed --lambda1-y 0.5 --gamma-y 2 --lambda1-w 0.5 "
                                    "--gamma-w 2 --out " +
                                    tmp.file("gd.csv"));
    CHECK(degen.exit_code == 3);
}

TEST_CASE("bench commands run end to end at toy scale", "[cli]") {
    TempDir tmp;
    const CliResult est = run_cli(
        "bench-estimation --design toeplitz --q 2 --nu 1 --s 2 --n 30 --p 4 --reps 2 "
        "--folds 3 --n-lambda1 3 --seed 5 --threads 2 --records " +
        tmp.file("er.csv") + " --summary " + tmp.file("es.csv"));
    REQUIRE(est.exit_code == 0);
    CHECK(std::count(est.output.begin(), est.output.end(), '\n') == 2);  // 2 summary lines
    const std::string records = slurp(tmp.file("er.csv"));
    CHECK(std::count(records.begin(), records.end(), '\n') == 5);  // header + 2 reps x 2

    const CliResult inf = run_cli(
        "bench-inference --b-grid 0,0.4 --n 40 --p 4 --q 2 --s 2 --nu 1 --reps 2 "
        "--folds 3 --n-lambda1 3 --seed 6 --threads 2 --records " +
        tmp.file("ir.csv") + " --summary " + tmp.file("is.csv"));
    REQUIRE(inf.exit_code == 0);
    const std::string inf_records = slurp(tmp.file("ir.csv"));
    CHECK(std::count(inf_records.begin(), inf_records.end(), '\n') == 9);  // header + 2*2*2
}

TEST_CASE("unknown flags are rejected", "[cli]") {
    CHECK(run_cli("simulate --n 10 --p 2 --bogus 1 --out a --truth b").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
}
