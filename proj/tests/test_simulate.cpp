#include <Eigen/Eigenvalues>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "glava/simulate.hpp"

using namespace glava;
using Catch::Approx;

TEST_CASE("toeplitz covariance", "[simulate]") {
    const Matrix s3 = toeplitz_sigma(3);
    CHECK(s3(0, 0) == 1.0);
    CHECK(s3(1, 1) == 1.0);
    CHECK(s3(0, 1) == Approx(0.9));
    CHECK(s3(0, 2) == Approx(0.81));
    CHECK((s3 - s3.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("exponential-decay covariance", "[simulate]") {
    SECTION("p = 1") {
        const Matrix s = expdecay_sigma(1);
        CHECK(s(0, 0) == Approx(1.0).margin(1e-14));
    }
    SECTION("p = 2 closed form") {
        // K^{-1} = (1/0.19) [[1,-0.9],[-0.9,1]]; unit-diagonal scaling gives
        // off-diagonal -0.9.
        const Matrix s = expdecay_sigma(2);
        CHECK(s(0, 0) == Approx(1.0).margin(1e-14));
        CHECK(s(1, 1) == Approx(1.0).margin(1e-14));
        CHECK(s(0, 1) == Approx(-0.9).margin(1e-12));
    }
    SECTION("inverse of the AR(1) correlation, rescaled") {
        const Eigen::Index p = 6;
        Matrix K(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                K(i, j) = std::pow(0.9, static_cast<double>(std::abs(i - j)));
            }
        }
        const Matrix sigma0 = K.inverse();
        Matrix expected(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                expected(i, j) = sigma0(i, j) / std::sqrt(sigma0(i, i) * sigma0(j, j));
            }
        }
        CHECK((expdecay_sigma(p) - expected).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
}

TEST_CASE("both designs are symmetric positive-definite with unit diagonal", "[simulate]") {
    for (Eigen::Index p : {1, 2, 5, 50, 200}) {
        for (const DesignKind kind : {DesignKind::Toeplitz, DesignKind::ExpDecay}) {
            const Matrix sigma = design_sigma(kind, p);
            CHECK((sigma - sigma.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
            for (Eigen::Index i = 0; i < p; ++i) {
                CHECK(std::fabs(sigma(i, i) - 1.0) <= 1e-12);
            }
            const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("loading matrix variance decays over variables", "[simulate]") {
    SECTION("nu = 0 gives the zero matrix") {
        Rng rng(1);
        CHECK(sample_gamma(3, 4, 0.0, rng).isZero(0.0));
    }
    SECTION("column variances match nu^2 / k^2 within 5 percent") {
        Rng rng(2);
        const Eigen::Index q = 100000;
        const double nu = 1.5;
        const Matrix g = sample_gamma(q, 4, nu, rng);
        for (Eigen::Index k = 0; k < 4; ++k) {
            const double target = nu * nu / ((k + 1.0) * (k + 1.0));
            const double var = g.col(k).squaredNorm() / static_cast<double>(q) -
                               std::pow(g.col(k).mean(), 2);
            CHECK(std::fabs(var - target) <= 0.05 * target);
        }
    }
    SECTION("seed determinism") {
        Rng a(77), b(77);
        CHECK((sample_gamma(3, 5, 2.0, a) - sample_gamma(3, 5, 2.0, b))
                  .lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("sparse signs", "[simulate]") {
    SECTION("s = p leaves no zeros") {
        Rng rng(5);
        auto [beta, support] = sample_beta0(6, 6, rng);
        CHECK(support.size() == 6);
        for (Eigen::Index j = 0; j < 6; ++j) CHECK(std::fabs(beta[j]) == 1.0);
    }
    SECTION("support size is exact and entries are signs") {
        Rng rng(6);
        for (int rep = 0; rep < 50; ++rep) {
            auto [beta, support] = sample_beta0(20, 7, rng);
            CHECK(support.size() == 7);
            int nnz = 0;
            for (Eigen::Index j = 0; j < 20; ++j) {
                if (beta[j] != 0.0) {
                    ++nnz;
                    CHECK(std::fabs(beta[j]) == 1.0);
                }
            }
            CHECK(nnz == 7);
        }
    }
    SECTION("signs are balanced") {
        Rng rng(7);
        double total = 0.0;
        const int reps = 10000;
        const Eigen::Index s = 4;
        for (int rep = 0; rep < reps; ++rep) {
            auto [beta, support] = sample_beta0(10, s, rng);
            total += beta.sum();
        }
        const double mean = total / (reps * static_cast<double>(s));
        CHECK(std::fabs(mean) <= 3.0 / std::sqrt(reps * static_cast<double>(s)));
    }
    SECTION("s > p rejected") {
        Rng rng(8);
        CHECK_THROWS_AS(sample_beta0(3, 4, rng), std::invalid_argument);
    }
}

TEST_CASE("delta construction", "[simulate]") {
    Rng rng(9);
    const Vector unit = make_delta(7, DeltaMode::UnitOnes, rng);
    CHECK(std::fabs(unit.norm() - 1.0) <= 1e-15);
    CHECK(unit.maxCoeff() == unit.minCoeff());
    const Vector rad = make_delta(7, DeltaMode::Rademacher, rng);
    for (Eigen::Index j = 0; j < 7; ++j) CHECK(std::fabs(rad[j]) == 1.0);
}

TEST_CASE("design sampling", "[simulate]") {
    SECTION("q = 0 gives X = Z exactly") {
        ScenarioConfig cfg;
        cfg.n = 50;
        cfg.p = 4;
        cfg.q = 0;
        cfg.s = 1;
        Rng rng(10);
        const Matrix sigma = toeplitz_sigma(4);
        const Matrix gamma = sample_gamma(0, 4, 1.0, rng);
        const XyuzDraw d = sample_xyuz(cfg, sigma, gamma, Vector::Zero(4), Vector(0), rng);
        CHECK((d.X - d.Z).lpNorm<Eigen::Infinity>() == 0.0);
    }
    SECTION("sample covariance approaches Sigma + Gamma' Gamma") {
        ScenarioConfig cfg;
        cfg.n = 100000;
        cfg.p = 5;
        cfg.q = 2;
        cfg.s = 1;
        Rng rng(11);
        const Matrix sigma = toeplitz_sigma(5);
        const Matrix gamma = sample_gamma(2, 5, 1.0, rng);
        const Vector beta0 = Vector::Zero(5);
        const Vector delta0 = make_delta(2, DeltaMode::UnitOnes, rng);
        const XyuzDraw d = sample_xyuz(cfg, sigma, gamma, beta0, delta0, rng);
        const Matrix target = sigma + gamma.transpose() * gamma;
        Matrix centered = d.X.rowwise() - d.X.colwise().mean();
        const Matrix sample_cov =
            centered.transpose() * centered / static_cast<double>(cfg.n);
        for (Eigen::Index i = 0; i < 5; ++i) {
            for (Eigen::Index j = 0; j < 5; ++j) {
                CHECK(std::fabs(sample_cov(i, j) - target(i, j)) <=
                      0.05 * (1.0 + std::fabs(target(i, j))));
            }
        }
    }
    SECTION("null logistic model is class-balanced") {
        ScenarioConfig cfg;
        cfg.n = 100000;
        cfg.p = 3;
        cfg.q = 0;
        cfg.s = 1;
        cfg.nu = 0.0;
        Rng rng(12);
        const Matrix sigma = toeplitz_sigma(3);
        const XyuzDraw d = sample_xyuz(cfg, sigma, Matrix(0, 3), Vector::Zero(3), Vector(0), rng);
        const double rate = d.y.mean();
        CHECK(std::fabs(rate - 0.5) <= 3.0 * 0.5 / std::sqrt(static_cast<double>(cfg.n)));
    }
}

TEST_CASE("auxiliary response", "[simulate]") {
    SECTION("pure-noise W has unit variance") {
        ScenarioConfig cfg;
        cfg.n = 100000;
        cfg.p = 3;
        cfg.q = 0;
        cfg.s = 1;
        Rng rng(13);
        const Matrix X = Matrix::Zero(cfg.n, 3);
        const Matrix U(cfg.n, 0);
        auto [w, y] = sample_w_and_y(cfg, X, U, Vector::Zero(3), Vector(0), Vector::Zero(3),
                                     Vector(0), 0.0, rng);
        const double var = w.squaredNorm() / static_cast<double>(cfg.n) - std::pow(w.mean(), 2);
        CHECK(std::fabs(var - 1.0) <= 0.05);
        CHECK(y.size() == cfg.n);
    }
}

TEST_CASE("scenario draws are deterministic in the seed", "[simulate]") {
    ScenarioConfig cfg;
    cfg.n = 40;
    cfg.p = 6;
    cfg.q = 2;
    cfg.s = 2;
    cfg.nu = 1.0;
    cfg.with_w = true;
    cfg.b_effect = 0.1;
    cfg.seed = 31337;
    const Matrix sigma = design_sigma(cfg.design, cfg.p);
    const ScenarioDraw a = draw_scenario(cfg, sigma);
    const ScenarioDraw b = draw_scenario(cfg, sigma);
    CHECK((a.X - b.X).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.y - b.y).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((*a.w - *b.w).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.beta0 - b.beta0).lpNorm<Eigen::Infinity>() == 0.0);

    cfg.seed = 31338;
    const ScenarioDraw c = draw_scenario(cfg, sigma);
    CHECK((a.X - c.X).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("scenario validation", "[simulate]") {
    ScenarioConfig cfg;
    cfg.n = 10;
    cfg.p = 4;
    cfg.s = 5;
    CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("s must not exceed p"));
}

TEST_CASE("truth sidecar round trip", "[simulate]") {
    ScenarioConfig cfg;
    cfg.n = 20;
    cfg.p = 4;
    cfg.q = 2;
    cfg.s = 2;
    cfg.seed = 5;
    const Matrix sigma = design_sigma(cfg.design, cfg.p);
    const ScenarioDraw draw = draw_scenario(cfg, sigma);
    const std::string path = "test_truth.csv";
    write_truth_csv(cfg, draw, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "field,index,value");
    int beta_rows = 0, support_rows = 0, delta_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("beta0,", 0) == 0) ++beta_rows;
        if (line.rfind("support,", 0) == 0) ++support_rows;
        if (line.rfind("delta0,", 0) == 0) ++delta_rows;
    }
    CHECK(beta_rows == 4);
    CHECK(support_rows == 2);
    CHECK(delta_rows == 2);
    std::remove(path.c_str());
}
