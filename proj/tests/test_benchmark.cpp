#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numeric>

#include "glava/benchmark.hpp"
#include "test_util.hpp"

using namespace glava;
using Catch::Approx;

namespace {

EstimationBenchConfig tiny_estimation_config() {
    EstimationBenchConfig cfg;
    cfg.grid = {ScenarioCell{DesignKind::Toeplitz, 2, 1.0, 2}};
    cfg.n = 40;
    cfg.p = 6;
    cfg.reps = 3;
    cfg.seed = 99;
    cfg.cv.n_folds = 4;
    cfg.cv.n_lambda1 = 5;
    cfg.cv.gamma_grid = {1.0, 3.0};
    return cfg;
}

InferenceBenchConfig tiny_inference_config() {
    InferenceBenchConfig cfg;
    cfg.b_grid = {0.0, 0.5};
    cfg.n = 60;
    cfg.p = 5;
    cfg.q = 2;
    cfg.s = 2;
    cfg.nu = 1.0;
    cfg.reps = 3;
    cfg.seed = 7;
    cfg.cv.n_folds = 3;
    cfg.cv.n_lambda1 = 4;
    cfg.cv.gamma_grid = {1.0};
    return cfg;
}

}  // namespace

TEST_CASE("prediction error metric", "[benchmark]") {
    SECTION("zero at the truth") {
        const Vector beta = Vector::Ones(3);
        CHECK(prediction_error_metric(beta, beta, Matrix::Identity(3, 3), Matrix::Zero(1, 3)) ==
              0.0);
    }
    SECTION("identity quadratic form") {
        Vector diff = Vector::Zero(3);
        diff[0] = 1.0;
        CHECK(prediction_error_metric(diff, Vector::Zero(3), Matrix::Identity(3, 3),
                                      Matrix::Zero(0, 3)) == Approx(1.0));
    }
    SECTION("rank-one confounding term") {
        Vector hat(2), truth(2);
        hat << 1.0, 1.0;
        truth << 0.0, 0.0;
        Matrix gamma(1, 2);
        gamma << 1.0, 1.0;
        CHECK(prediction_error_metric(hat, truth, Matrix::Identity(2, 2), gamma) ==
              Approx(6.0));
    }
    SECTION("shape mismatch throws") {
        CHECK_THROWS_AS(prediction_error_metric(Vector::Zero(2), Vector::Zero(3),
                                                Matrix::Identity(3, 3), Matrix::Zero(1, 3)),
                        std::invalid_argument);
    }
    SECTION("invariant under a joint permutation of coordinates") {
        Rng rng(103);
        const Eigen::Index p = 5;
        const Vector hat = glava_tests::random_vector(p, rng);
        const Vector truth = glava_tests::random_vector(p, rng);
        const Matrix sigma = toeplitz_sigma(p);
        Matrix gamma(2, p);
        for (Eigen::Index i = 0; i < 2; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) gamma(i, j) = rng.normal();
        }
        const double base = prediction_error_metric(hat, truth, sigma, gamma);

        std::vector<Eigen::Index> perm(p);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Vector hat_p(p), truth_p(p);
        Matrix sigma_p(p, p), gamma_p(2, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            hat_p[j] = hat[perm[static_cast<std::size_t>(j)]];
            truth_p[j] = truth[perm[static_cast<std::size_t>(j)]];
            gamma_p.col(j) = gamma.col(perm[static_cast<std::size_t>(j)]);
            for (Eigen::Index i = 0; i < p; ++i) {
                sigma_p(i, j) = sigma(perm[static_cast<std::size_t>(i)],
                                      perm[static_cast<std::size_t>(j)]);
            }
        }
        CHECK(prediction_error_metric(hat_p, truth_p, sigma_p, gamma_p) ==
              Approx(base).margin(1e-10));
    }
}

TEST_CASE("estimation benchmark is deterministic and schedule-independent", "[benchmark]") {
    const EstimationBenchConfig cfg = tiny_estimation_config();
    const std::vector<EstimationRow> a = run_estimation_benchmark(cfg);
    REQUIRE(a.size() == 6);  // one cell, 3 reps, 2 methods

    const std::vector<EstimationRow> b = run_estimation_benchmark(cfg);
    EstimationBenchConfig threaded = cfg;
    threaded.threads = 2;
    const std::vector<EstimationRow> c = run_estimation_benchmark(threaded);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].record.error_metric == b[i].record.error_metric);
        CHECK(a[i].record.error_metric == c[i].record.error_metric);
        CHECK(a[i].record.cv_lambda1 == c[i].record.cv_lambda1);
        CHECK(a[i].record.cv_gamma == c[i].record.cv_gamma);
        CHECK(a[i].record.wall_seconds == 0.0);  // timing off by default
        CHECK(a[i].record.error_metric >= 0.0);
    }
}

TEST_CASE("estimation summary aggregates the records", "[benchmark]") {
    const std::vector<EstimationRow> rows =
        run_estimation_benchmark(tiny_estimation_config());
    const std::vector<EstimationSummary> summary = summarize_estimation(rows);
    REQUIRE(summary.size() == 2);
    for (const EstimationSummary& s : summary) {
        CHECK(s.n_total == 3);
        CHECK(s.n_failed == 0);
        std::vector<double> errors;
        for (const EstimationRow& row : rows) {
            if (row.record.method == s.method) errors.push_back(row.record.error_metric);
        }
        std::sort(errors.begin(), errors.end());
        CHECK(s.median_error == Approx(errors[1]).margin(1e-15));
        CHECK(s.mean_error ==
              Approx(std::accumulate(errors.begin(), errors.end(), 0.0) / 3.0).margin(1e-12));
    }
}

TEST_CASE("estimation CSV writers", "[benchmark]") {
    const std::vector<EstimationRow> rows =
        run_estimation_benchmark(tiny_estimation_config());
    const std::string rec_path = "test_bench_records.csv";
    const std::string sum_path = "test_bench_summary.csv";
    write_estimation_records_csv(rows, rec_path);
    write_estimation_summary_csv(summarize_estimation(rows), sum_path);

    std::ifstream rec(rec_path);
    std::string line;
    REQUIRE(std::getline(rec, line));
    CHECK(line == "design,q,nu,s,rep,method,error_metric,cv_lambda1,cv_gamma,wall_seconds");
    int n_rows = 0;
    while (std::getline(rec, line)) ++n_rows;
    CHECK(n_rows == 6);

    std::ifstream sum(sum_path);
    REQUIRE(std::getline(sum, line));
    CHECK(line == "design,q,nu,s,method,n_total,n_failed,median_error,mean_error");
    std::remove(rec_path.c_str());
    std::remove(sum_path.c_str());
}

TEST_CASE("inference benchmark determinism and summary consistency", "[benchmark]") {
    const InferenceBenchConfig cfg = tiny_inference_config();
    const InferenceBenchResult a = run_inference_benchmark(cfg);
    REQUIRE(a.records.size() == 12);  // 3 reps x 2 b x 2 methods
    REQUIRE(a.summaries.size() == 4);

    InferenceBenchConfig threaded = cfg;
    threaded.threads = 2;
    const InferenceBenchResult b = run_inference_benchmark(threaded);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].rep == b.records[i].rep);
        CHECK(a.records[i].b_effect == b.records[i].b_effect);
        if (std::isnan(a.records[i].t_stat)) {
            CHECK(std::isnan(b.records[i].t_stat));
        } else {
            CHECK(a.records[i].t_stat == b.records[i].t_stat);
        }
        CHECK(a.records[i].reject == b.records[i].reject);
    }

    // the summary rejection rate is exactly the mean of the reject flags
    for (const InferenceSummary& s : a.summaries) {
        int rejects = 0, ok = 0;
        for (const InferenceRecord& r : a.records) {
            if (r.method != s.method || r.b_effect != s.b_effect) continue;
            if (std::isnan(r.t_stat)) continue;
            ++ok;
            if (r.reject) ++rejects;
        }
        CHECK(s.n_total == 3);
        CHECK(s.n_total - s.n_failed == ok);
        if (ok > 0) {
            CHECK(s.rejection_rate == Approx(static_cast<double>(rejects) / ok).margin(1e-15));
        }
    }
}

TEST_CASE("inference CSV writers", "[benchmark]") {
    const InferenceBenchResult res = run_inference_benchmark(tiny_inference_config());
    const std::string rec_path = "test_inf_records.csv";
    const std::string sum_path = "test_inf_summary.csv";
    write_inference_records_csv(res.records, rec_path);
    write_inference_summary_csv(res.summaries, sum_path);

    std::ifstream rec(rec_path);
    std::string line;
    REQUIRE(std::getline(rec, line));
    CHECK(line == "rep,method,b_effect,t_stat,reject");
    std::ifstream sum(sum_path);
    REQUIRE(std::getline(sum, line));
    CHECK(line == "method,b_effect,n_total,n_failed,rejection_rate");
    std::remove(rec_path.c_str());
    std::remove(sum_path.c_str());
}
