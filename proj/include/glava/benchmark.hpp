#ifndef GLAVA_BENCHMARK_HPP
#define GLAVA_BENCHMARK_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glava/cross_validation.hpp"
#include "glava/dataset.hpp"
#include "glava/gcm.hpp"
#include "glava/parallel.hpp"
#include "glava/simulate.hpp"
#include "glava/solver.hpp"

namespace glava {

// Out-of-sample squared prediction error of beta_hat under the design
// covariance Sigma + Gamma' Gamma:
// (beta_hat - beta0)' (Sigma + Gamma' Gamma) (beta_hat - beta0).
inline double prediction_error_metric(const Vector& beta_hat, const Vector& beta0,
                                      const Matrix& sigma, const Matrix& gamma) {
    if (beta_hat.size() != beta0.size() || sigma.rows() != beta_hat.size() ||
        sigma.cols() != beta_hat.size() ||
        (gamma.size() > 0 && gamma.cols() != beta_hat.size())) {
        throw std::invalid_argument("prediction_error_metric: shape mismatch");
    }
    const Vector diff = beta_hat - beta0;
    double value = diff.dot(sigma * diff);
    if (gamma.rows() > 0) value += (gamma * diff).squaredNorm();
    return value;
}

// ---------------------------------------------------------------------------
// Estimation benchmark
// ---------------------------------------------------------------------------

struct ScenarioCell {
    DesignKind design = DesignKind::Toeplitz;
    Eigen::Index q = 5;
    double nu = 1.0;
    Eigen::Index s = 5;
};

struct EstimationRecord {
    int rep = 0;
    EstimatorMethod method = EstimatorMethod::GenLava;
    double error_metric = 0.0;
    double cv_lambda1 = 0.0;
    double cv_gamma = 0.0;
    double wall_seconds = 0.0;
};

struct EstimationRow {
    ScenarioCell cell;
    EstimationRecord record;
};

struct EstimationBenchConfig {
    std::vector<ScenarioCell> grid = {ScenarioCell{}};
    Eigen::Index n = 800;
    Eigen::Index p = 200;
    int reps = 50;
    ResponseKind response = ResponseKind::Logistic;
    std::uint64_t seed = 1;
    CvConfig cv;
    SolverOptions solver;
    int threads = 1;
    bool timing = false;  // off by default so outputs are byte-reproducible
};

namespace detail {

inline double steady_seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// Per replication: draw the scenario, tune each method by K-fold CV, refit on
// the full data and score the prediction-error metric against the truth.
// Rows come back in (cell, rep, method) order; replication r of cell c uses
// the derived seed splitmix_seed(seed, c*reps + r), so results do not depend
// on the parallel schedule. Failed replications keep their row with a NaN
// error_metric.
inline std::vector<EstimationRow> run_estimation_benchmark(const EstimationBenchConfig& cfg) {
    if (cfg.grid.empty()) throw std::invalid_argument("estimation benchmark: empty grid");
    if (cfg.reps < 1) throw std::invalid_argument("estimation benchmark: reps >= 1");

    std::map<DesignKind, Matrix> sigmas;
    for (const ScenarioCell& cell : cfg.grid) {
        if (!sigmas.count(cell.design)) sigmas[cell.design] = design_sigma(cell.design, cfg.p);
    }

    const std::size_t n_tasks = cfg.grid.size() * static_cast<std::size_t>(cfg.reps);
    std::vector<EstimationRow> rows(n_tasks * 2);

    parallel_for(n_tasks, cfg.threads, [&](std::size_t task) {
        const std::size_t cell_idx = task / static_cast<std::size_t>(cfg.reps);
        const int rep = static_cast<int>(task % static_cast<std::size_t>(cfg.reps));
        const ScenarioCell& cell = cfg.grid[cell_idx];
        const std::uint64_t rep_seed = splitmix_seed(cfg.seed, task);

        ScenarioConfig scenario;
        scenario.n = cfg.n;
        scenario.p = cfg.p;
        scenario.q = cell.q;
        scenario.s = cell.s;
        scenario.nu = cell.nu;
        scenario.design = cell.design;
        scenario.response = cfg.response;
        scenario.seed = rep_seed;

        const Matrix& sigma = sigmas.at(cell.design);
        const LinkSpec link =
            cfg.response == ResponseKind::Logistic ? LinkSpec::logistic() : LinkSpec::identity();

        const EstimatorMethod methods[2] = {EstimatorMethod::GenLava, EstimatorMethod::Lasso};
        for (int m = 0; m < 2; ++m) {
            EstimationRow& row = rows[task * 2 + static_cast<std::size_t>(m)];
            row.cell = cell;
            row.record.rep = rep;
            row.record.method = methods[m];
            row.record.error_metric = std::numeric_limits<double>::quiet_NaN();
            row.record.cv_lambda1 = std::numeric_limits<double>::quiet_NaN();
            row.record.cv_gamma = std::numeric_limits<double>::quiet_NaN();
        }

        std::optional<ScenarioDraw> draw;
        std::optional<Dataset> data;
        try {
            draw = draw_scenario(scenario, sigma);
            data = scenario_dataset(*draw);
        } catch (const std::exception&) {
            return;  // both rows stay NaN-flagged
        }

        for (int m = 0; m < 2; ++m) {
            EstimationRow& row = rows[task * 2 + static_cast<std::size_t>(m)];
            const auto start = std::chrono::steady_clock::now();
            try {
                CvConfig cv = cfg.cv;
                cv.seed = splitmix_seed(rep_seed, static_cast<std::uint64_t>(m + 1));
                const CvFitResult fit = cv_fit(*data, link, cv, methods[m], cfg.solver, 1);
                row.record.error_metric =
                    prediction_error_metric(fit.fit.beta_hat, draw->beta0, sigma, draw->gamma);
                row.record.cv_lambda1 = fit.table.best_lambda1;
                row.record.cv_gamma = fit.table.best_gamma;
            } catch (const std::exception&) {
            }
            row.record.wall_seconds = cfg.timing ? detail::steady_seconds_since(start) : 0.0;
        }
    });
    return rows;
}

struct EstimationSummary {
    ScenarioCell cell;
    EstimatorMethod method = EstimatorMethod::GenLava;
    int n_total = 0;
    int n_failed = 0;
    double median_error = 0.0;
    double mean_error = 0.0;
};

inline std::vector<EstimationSummary> summarize_estimation(const std::vector<EstimationRow>& rows) {
    // Keyed by (cell order of first appearance, method); rows are already in
    // deterministic order so the summary is too.
    std::vector<EstimationSummary> out;
    auto matches = [](const ScenarioCell& a, const ScenarioCell& b) {
        return a.design == b.design && a.q == b.q && a.nu == b.nu && a.s == b.s;
    };
    for (const EstimationRow& row : rows) {
        EstimationSummary* slot = nullptr;
        for (EstimationSummary& s : out) {
            if (matches(s.cell, row.cell) && s.method == row.record.method) {
                slot = &s;
                break;
            }
        }
        if (!slot) {
            out.push_back(EstimationSummary{row.cell, row.record.method, 0, 0, 0.0, 0.0});
            slot = &out.back();
        }
        slot->n_total += 1;
        if (std::isnan(row.record.error_metric)) slot->n_failed += 1;
    }
    for (EstimationSummary& s : out) {
        std::vector<double> errors;
        for (const EstimationRow& row : rows) {
            if (matches(s.cell, row.cell) && row.record.method == s.method &&
                !std::isnan(row.record.error_metric)) {
                errors.push_back(row.record.error_metric);
            }
        }
        if (errors.empty()) {
            s.median_error = std::numeric_limits<double>::quiet_NaN();
            s.mean_error = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        std::sort(errors.begin(), errors.end());
        const std::size_t mid = errors.size() / 2;
        s.median_error = errors.size() % 2 == 1
                             ? errors[mid]
                             : 0.5 * (errors[mid - 1] + errors[mid]);
        double total = 0.0;
        for (double e : errors) total += e;
        s.mean_error = total / static_cast<double>(errors.size());
    }
    return out;
}

inline void write_estimation_records_csv(const std::vector<EstimationRow>& rows,
                                         const std::string& path) {
    std::ofstream out = open_output(path);
    out << "design,q,nu,s,rep,method,error_metric,cv_lambda1,cv_gamma,wall_seconds\n";
    for (const EstimationRow& row : rows) {
        out << design_name(row.cell.design) << ',' << row.cell.q << ','
            << format_double(row.cell.nu) << ',' << row.cell.s << ',' << row.record.rep << ','
            << method_name(row.record.method) << ',' << format_double(row.record.error_metric)
            << ',' << format_double(row.record.cv_lambda1) << ','
            << format_double(row.record.cv_gamma) << ','
            << format_double(row.record.wall_seconds) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

inline void write_estimation_summary_csv(const std::vector<EstimationSummary>& summary,
                                         const std::string& path) {
    std::ofstream out = open_output(path);
    out << "design,q,nu,s,method,n_total,n_failed,median_error,mean_error\n";
    for (const EstimationSummary& s : summary) {
        out << design_name(s.cell.design) << ',' << s.cell.q << ',' << format_double(s.cell.nu)
            << ',' << s.cell.s << ',' << method_name(s.method) << ',' << s.n_total << ','
            << s.n_failed << ',' << format_double(s.median_error) << ','
            << format_double(s.mean_error) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Inference (size/power) benchmark
// ---------------------------------------------------------------------------

struct InferenceRecord {
    int rep = 0;
    EstimatorMethod method = EstimatorMethod::GenLava;
    double b_effect = 0.0;
    double t_stat = 0.0;
    bool reject = false;
};

struct InferenceSummary {
    EstimatorMethod method = EstimatorMethod::GenLava;
    double b_effect = 0.0;
    int n_total = 0;
    int n_failed = 0;
    double rejection_rate = 0.0;
};

struct InferenceBenchConfig {
    std::vector<double> b_grid = {0.0, 0.03, 0.06, 0.1, 0.13, 0.16, 0.2};
    Eigen::Index n = 1000;
    Eigen::Index p = 100;
    Eigen::Index q = 5;
    Eigen::Index s = 5;
    double nu = 1.0;
    DesignKind design = DesignKind::ExpDecay;
    double alpha = 0.05;
    int reps = 200;
    std::uint64_t seed = 1;
    CvConfig cv;
    SolverOptions solver;
    int threads = 1;
};

struct InferenceBenchResult {
    std::vector<InferenceRecord> records;
    std::vector<InferenceSummary> summaries;
};

// Size/power study. Each replication draws one confounded design (X, U) and
// one auxiliary response W; the Y response is redrawn for every b on the
// grid from the shared linear predictor, so methods and b values are
// compared on paired data. The W regressions do not depend on b and are
// fitted once per replication and method. Both methods run the same GCM
// statistic, differing only in the regression estimator (lambda2 = inf for
// the Lasso variant). Failed fits yield NaN t_stat rows that the summary
// counts as failures.
inline InferenceBenchResult run_inference_benchmark(const InferenceBenchConfig& cfg) {
    if (cfg.b_grid.empty()) throw std::invalid_argument("inference benchmark: empty b grid");
    if (cfg.reps < 1) throw std::invalid_argument("inference benchmark: reps >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw std::invalid_argument("inference benchmark: alpha in (0,1)");
    }

    const Matrix sigma = design_sigma(cfg.design, cfg.p);
    const double z_crit = normal_quantile(1.0 - cfg.alpha / 2.0);
    const std::size_t n_b = cfg.b_grid.size();
    const std::size_t rows_per_rep = n_b * 2;
    std::vector<InferenceRecord> records(static_cast<std::size_t>(cfg.reps) * rows_per_rep);

    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t task) {
        const int rep = static_cast<int>(task);
        const std::uint64_t rep_seed = splitmix_seed(cfg.seed, task);
        const EstimatorMethod methods[2] = {EstimatorMethod::GenLava, EstimatorMethod::Lasso};

        auto record_at = [&](std::size_t bi, int m) -> InferenceRecord& {
            return records[task * rows_per_rep + bi * 2 + static_cast<std::size_t>(m)];
        };
        for (std::size_t bi = 0; bi < n_b; ++bi) {
            for (int m = 0; m < 2; ++m) {
                InferenceRecord& r = record_at(bi, m);
                r.rep = rep;
                r.method = methods[m];
                r.b_effect = cfg.b_grid[bi];
                r.t_stat = std::numeric_limits<double>::quiet_NaN();
                r.reject = false;
            }
        }

        ScenarioConfig scenario;
        scenario.n = cfg.n;
        scenario.p = cfg.p;
        scenario.q = cfg.q;
        scenario.s = cfg.s;
        scenario.nu = cfg.nu;
        scenario.design = cfg.design;
        scenario.with_w = true;
        scenario.seed = rep_seed;

        Matrix X, U;
        Vector w, eta_base;
        std::vector<std::string> names;
        try {
            Rng rng(rep_seed);
            const Matrix gamma = sample_gamma(cfg.q, cfg.p, cfg.nu, rng);
            auto [beta0, support] = sample_beta0(cfg.p, cfg.s, rng);
            (void)support;
            const Vector delta0 = make_delta(cfg.q, DeltaMode::UnitOnes, rng);
            auto [beta_w, support_w] = sample_beta0(cfg.p, cfg.s, rng);
            (void)support_w;
            const Vector delta_w = make_delta(cfg.q, DeltaMode::UnitOnes, rng);
            detail::DesignDraw d = detail::sample_design(cfg.n, sigma, gamma, rng);
            X = std::move(d.X);
            U = std::move(d.U);
            w = X * beta_w;
            if (cfg.q > 0) w.noalias() += U * delta_w;
            for (Eigen::Index i = 0; i < cfg.n; ++i) w[i] += rng.normal();
            eta_base = X * beta0;
            if (cfg.q > 0) eta_base.noalias() += U * delta0;
        } catch (const std::exception&) {
            return;  // whole replication marked failed
        }

        const LinkSpec logistic = LinkSpec::logistic();
        const LinkSpec identity = LinkSpec::identity();

        // W regressions are b-independent: one fit per method.
        Dataset data_w;
        data_w.X = X;
        data_w.y = w;
        Vector eps_w[2];
        bool w_ok[2] = {false, false};
        for (int m = 0; m < 2; ++m) {
            try {
                CvConfig cv = cfg.cv;
                cv.seed = splitmix_seed(rep_seed, 10 + static_cast<std::uint64_t>(m));
                const CvFitResult fw =
                    cv_fit(data_w, identity, cv, m == 0 ? EstimatorMethod::GenLava
                                                        : EstimatorMethod::Lasso,
                           cfg.solver, 1);
                eps_w[m] = residuals(data_w, identity, fw.fit);
                w_ok[m] = true;
            } catch (const std::exception&) {
            }
        }

        for (std::size_t bi = 0; bi < n_b; ++bi) {
            const double b = cfg.b_grid[bi];
            Vector y(cfg.n);
            Rng yrng(splitmix_seed(rep_seed, 100 + bi));
            for (Eigen::Index i = 0; i < cfg.n; ++i) {
                y[i] = yrng.bernoulli(logistic.f(eta_base[i] + b * w[i])) ? 1.0 : 0.0;
            }
            Dataset data_y;
            data_y.X = X;
            data_y.y = y;

            for (int m = 0; m < 2; ++m) {
                if (!w_ok[m]) continue;
                InferenceRecord& r = record_at(bi, m);
                try {
                    CvConfig cv = cfg.cv;
                    cv.seed = splitmix_seed(rep_seed, 200 + bi * 2 + static_cast<std::uint64_t>(m));
                    const CvFitResult fy =
                        cv_fit(data_y, logistic, cv,
                               m == 0 ? EstimatorMethod::GenLava : EstimatorMethod::Lasso,
                               cfg.solver, 1);
                    const Vector eps_y = residuals(data_y, logistic, fy.fit);
                    r.t_stat = gcm_statistic(eps_y, eps_w[m]);
                    r.reject = std::fabs(r.t_stat) > z_crit;
                } catch (const std::exception&) {
                }
            }
        }
    });

    InferenceBenchResult result;
    result.records = std::move(records);
    for (int m = 0; m < 2; ++m) {
        for (std::size_t bi = 0; bi < n_b; ++bi) {
            InferenceSummary s;
            s.method = m == 0 ? EstimatorMethod::GenLava : EstimatorMethod::Lasso;
            s.b_effect = cfg.b_grid[bi];
            int rejected = 0;
            for (const InferenceRecord& r : result.records) {
                if (r.method != s.method || r.b_effect != s.b_effect) continue;
                s.n_total += 1;
                if (std::isnan(r.t_stat)) {
                    s.n_failed += 1;
                } else if (r.reject) {
                    rejected += 1;
                }
            }
            const int ok = s.n_total - s.n_failed;
            s.rejection_rate = ok > 0 ? static_cast<double>(rejected) / ok
                                      : std::numeric_limits<double>::quiet_NaN();
            result.summaries.push_back(s);
        }
    }
    return result;
}

inline void write_inference_records_csv(const std::vector<InferenceRecord>& records,
                                        const std::string& path) {
    std::ofstream out = open_output(path);
    out << "rep,method,b_effect,t_stat,reject\n";
    for (const InferenceRecord& r : records) {
        out << r.rep << ',' << method_name(r.method) << ',' << format_double(r.b_effect) << ','
            << format_double(r.t_stat) << ',' << (r.reject ? 1 : 0) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

inline void write_inference_summary_csv(const std::vector<InferenceSummary>& summaries,
                                        const std::string& path) {
    std::ofstream out = open_output(path);
    out << "method,b_effect,n_total,n_failed,rejection_rate\n";
    for (const InferenceSummary& s : summaries) {
        out << method_name(s.method) << ',' << format_double(s.b_effect) << ',' << s.n_total
            << ',' << s.n_failed << ',' << format_double(s.rejection_rate) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

}  // namespace glava

#endif  // GLAVA_BENCHMARK_HPP
