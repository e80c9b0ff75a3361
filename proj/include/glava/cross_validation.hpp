#ifndef GLAVA_CROSS_VALIDATION_HPP
#define GLAVA_CROSS_VALIDATION_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "glava/csv.hpp"
#include "glava/dataset.hpp"
#include "glava/parallel.hpp"
#include "glava/rng.hpp"
#include "glava/solver.hpp"

namespace glava {

enum class EstimatorMethod { GenLava, Lasso };

inline const char* method_name(EstimatorMethod m) {
    return m == EstimatorMethod::GenLava ? "genlava" : "lasso";
}

struct CvConfig {
    int n_folds = 10;
    int n_lambda1 = 100;
    double lambda_min_ratio = 0.01;
    std::vector<double> gamma_grid;  // empty -> gamma_grid_default(p)
    std::uint64_t seed = 1;

    void validate(Eigen::Index n) const {
        if (n_folds < 2 || n_folds > n) {
            throw std::invalid_argument("CvConfig: need 2 <= n_folds <= n");
        }
        if (n_lambda1 < 1) throw std::invalid_argument("CvConfig: n_lambda1 >= 1");
        if (!(lambda_min_ratio > 0.0 && lambda_min_ratio <= 1.0)) {
            throw std::invalid_argument("CvConfig: lambda_min_ratio in (0,1]");
        }
        for (double g : gamma_grid) {
            if (!(g > 0.0) || !std::isfinite(g)) {
                throw std::invalid_argument("CvConfig: gamma grid must be strictly positive");
            }
        }
    }
};

struct CvCell {
    double lambda1 = 0.0;
    double gamma = 0.0;  // +inf in lasso mode
    double mean_cv_loss = 0.0;
    double sd_cv_loss = 0.0;
};

struct CvTable {
    std::vector<CvCell> rows;
    double best_lambda1 = 0.0;
    double best_gamma = 0.0;

    // Minimal mean loss; ties resolved toward larger lambda1, then larger gamma.
    void select_best() {
        if (rows.empty()) throw std::invalid_argument("CvTable: empty grid");
        const CvCell* best = &rows.front();
        for (const CvCell& cell : rows) {
            if (cell.mean_cv_loss < best->mean_cv_loss ||
                (cell.mean_cv_loss == best->mean_cv_loss &&
                 (cell.lambda1 > best->lambda1 ||
                  (cell.lambda1 == best->lambda1 && cell.gamma > best->gamma)))) {
                best = &cell;
            }
        }
        best_lambda1 = best->lambda1;
        best_gamma = best->gamma;
    }
};

// Exponentially spaced path from lambda_max = ||grad L(0)||_inf down to
// lambda_min_ratio * lambda_max, descending.
inline std::vector<double> lambda1_grid(const Dataset& data, const LinkSpec& link,
                                        const CvConfig& cfg) {
    const Vector g0 = loss_gradient(data, link, Vector::Zero(data.p()));
    const double lambda_max = g0.lpNorm<Eigen::Infinity>();
    if (lambda_max <= 0.0) {
        throw degenerate_error("lambda1_grid: null gradient at theta = 0");
    }
    std::vector<double> grid(static_cast<std::size_t>(cfg.n_lambda1));
    if (cfg.n_lambda1 == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double log_max = std::log(lambda_max);
    const double log_min = std::log(lambda_max * cfg.lambda_min_ratio);
    for (int k = 0; k < cfg.n_lambda1; ++k) {
        grid[static_cast<std::size_t>(k)] =
            std::exp(log_max + (log_min - log_max) * k / (cfg.n_lambda1 - 1));
    }
    return grid;
}

// {p/50, p/40, p/30, p/20, p/10}.
inline std::vector<double> gamma_grid_default(Eigen::Index p_features) {
    if (p_features < 1) throw std::invalid_argument("gamma_grid_default: p >= 1");
    const double p = static_cast<double>(p_features);
    return {p / 50.0, p / 40.0, p / 30.0, p / 20.0, p / 10.0};
}

namespace detail {

// Validation fold of each row: seeded shuffle, then split into n_folds
// near-equal contiguous blocks of the shuffled order.
inline std::vector<int> fold_assignment(Eigen::Index n, int n_folds, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold(static_cast<std::size_t>(n));
    const Eigen::Index base = n / n_folds;
    const Eigen::Index extra = n % n_folds;
    Eigen::Index pos = 0;
    for (int k = 0; k < n_folds; ++k) {
        const Eigen::Index size = base + (k < extra ? 1 : 0);
        for (Eigen::Index i = 0; i < size; ++i) {
            fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = k;
        }
    }
    return fold;
}

inline Dataset subset_rows(const Dataset& data, const std::vector<Eigen::Index>& rows) {
    Matrix X(static_cast<Eigen::Index>(rows.size()), data.p());
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = data.X.row(rows[i]);
        y[static_cast<Eigen::Index>(i)] = data.y[rows[i]];
    }
    Dataset out;
    out.X = std::move(X);
    out.y = std::move(y);
    return out;
}

// Looser stationarity tolerance for fits inside a lambda path: a
// 1e-4-stationary iterate moves the held-out loss by O(kkt^2), orders of
// magnitude below the differences between grid cells. Final refits use the
// caller's (tight) settings.
inline SolverOptions path_options(const SolverOptions& base) {
    SolverOptions opts = base;
    if (!opts.kkt_tol) opts.kkt_tol = 1e-4;
    return opts;
}

// One fold x gamma stream: fit the descending lambda path with warm starts
// and record the mean held-out loss at every lambda.
inline std::vector<double> path_holdout_losses(const Dataset& train, const Dataset& valid,
                                               const LinkSpec& link,
                                               const std::vector<double>& lambdas, double gamma,
                                               EstimatorMethod method,
                                               const SolverOptions& base_opts) {
    SolverOptions opts = path_options(base_opts);
    const ProxSolver solver(train, link);
    std::vector<double> losses;
    losses.reserve(lambdas.size());
    for (double lambda1 : lambdas) {
        const LavaFit fit =
            (method == EstimatorMethod::GenLava)
                ? solver.fit_lava(PenaltyParams::from_gamma(lambda1, gamma), opts)
                : solver.fit_lasso(lambda1, opts);
        losses.push_back(empirical_loss(valid, link, fit.theta_hat));
        opts.initial_theta = fit.theta_hat;
        opts.init_step = fit.step_final;
    }
    return losses;
}

// Full-data fit at (lambda1*, gamma*) reached by walking the lambda path down
// from lambda_max with warm starts; a cold start at a small lambda1 can need
// tens of thousands of iterations on correlated designs, the warm path only a
// handful per step.
inline LavaFit path_refit(const Dataset& data, const LinkSpec& link,
                          const std::vector<double>& lambdas, double best_lambda1, double gamma,
                          EstimatorMethod method, const SolverOptions& base_opts) {
    const ProxSolver solver(data, link);
    SolverOptions opts = path_options(base_opts);
    for (double lambda1 : lambdas) {
        if (lambda1 <= best_lambda1) break;
        const LavaFit fit =
            (method == EstimatorMethod::GenLava)
                ? solver.fit_lava(PenaltyParams::from_gamma(lambda1, gamma), opts)
                : solver.fit_lasso(lambda1, opts);
        opts.initial_theta = fit.theta_hat;
        opts.init_step = fit.step_final;
    }
    SolverOptions final_opts = base_opts;
    final_opts.initial_theta = opts.initial_theta;
    final_opts.init_step = opts.init_step;
    return (method == EstimatorMethod::GenLava)
               ? solver.fit_lava(PenaltyParams::from_gamma(best_lambda1, gamma), final_opts)
               : solver.fit_lasso(best_lambda1, final_opts);
}

}  // namespace detail

// K-fold cross-validation over (lambda1, gamma) for the generalised
// estimator, or over lambda1 alone in lasso mode (gamma column = +inf).
// The held-out criterion is the mean M-loss on the validation fold, averaged
// over folds. Deterministic given (data, cfg); fold x gamma streams are
// independent and may run in parallel without changing any output.
inline CvTable cross_validate(const Dataset& data, const LinkSpec& link, const CvConfig& cfg,
                              EstimatorMethod method = EstimatorMethod::GenLava,
                              const SolverOptions& solver_opts = {}, int threads = 1) {
    cfg.validate(data.n());
    data.validate_for(link);

    const std::vector<double> lambdas = lambda1_grid(data, link, cfg);
    std::vector<double> gammas;
    if (method == EstimatorMethod::GenLava) {
        gammas = cfg.gamma_grid.empty() ? gamma_grid_default(data.p()) : cfg.gamma_grid;
    } else {
        gammas = {std::numeric_limits<double>::infinity()};
    }
    if (gammas.empty()) throw std::invalid_argument("cross_validate: empty gamma grid");

    const std::vector<int> fold_of = detail::fold_assignment(data.n(), cfg.n_folds, cfg.seed);
    std::vector<Dataset> train_sets, valid_sets;
    train_sets.reserve(static_cast<std::size_t>(cfg.n_folds));
    valid_sets.reserve(static_cast<std::size_t>(cfg.n_folds));
    for (int k = 0; k < cfg.n_folds; ++k) {
        std::vector<Eigen::Index> train_rows, valid_rows;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (fold_of[static_cast<std::size_t>(i)] == k) {
                valid_rows.push_back(i);
            } else {
                train_rows.push_back(i);
            }
        }
        train_sets.push_back(detail::subset_rows(data, train_rows));
        valid_sets.push_back(detail::subset_rows(data, valid_rows));
    }

    // losses[gamma][fold][lambda]
    const std::size_t n_streams = gammas.size() * static_cast<std::size_t>(cfg.n_folds);
    std::vector<std::vector<double>> stream_losses(n_streams);
    parallel_for(n_streams, threads, [&](std::size_t task) {
        const std::size_t gi = task / static_cast<std::size_t>(cfg.n_folds);
        const std::size_t fold = task % static_cast<std::size_t>(cfg.n_folds);
        stream_losses[task] =
            detail::path_holdout_losses(train_sets[fold], valid_sets[fold], link, lambdas,
                                        gammas[gi], method, solver_opts);
    });

    CvTable table;
    table.rows.reserve(gammas.size() * lambdas.size());
    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            double mean = 0.0;
            for (int k = 0; k < cfg.n_folds; ++k) {
                mean += stream_losses[gi * static_cast<std::size_t>(cfg.n_folds) +
                                      static_cast<std::size_t>(k)][li];
            }
            mean /= cfg.n_folds;
            double ss = 0.0;
            for (int k = 0; k < cfg.n_folds; ++k) {
                const double d = stream_losses[gi * static_cast<std::size_t>(cfg.n_folds) +
                                               static_cast<std::size_t>(k)][li] -
                                 mean;
                ss += d * d;
            }
            CvCell cell;
            cell.lambda1 = lambdas[li];
            cell.gamma = gammas[gi];
            cell.mean_cv_loss = mean;
            cell.sd_cv_loss = std::sqrt(ss / (cfg.n_folds - 1));
            table.rows.push_back(cell);
        }
    }
    table.select_best();
    return table;
}

struct CvFitResult {
    CvTable table;
    LavaFit fit;
};

// Cross-validate, then refit on the full data at the selected pair (warm
// path down to the winner, tight final fit).
inline CvFitResult cv_fit(const Dataset& data, const LinkSpec& link, const CvConfig& cfg,
                          EstimatorMethod method = EstimatorMethod::GenLava,
                          const SolverOptions& solver_opts = {}, int threads = 1) {
    CvFitResult result;
    result.table = cross_validate(data, link, cfg, method, solver_opts, threads);
    const std::vector<double> lambdas = lambda1_grid(data, link, cfg);
    result.fit = detail::path_refit(data, link, lambdas, result.table.best_lambda1,
                                    result.table.best_gamma, method, solver_opts);
    return result;
}

inline void write_cv_table_csv(const CvTable& table, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "lambda1,gamma,mean_cv_loss,sd_cv_loss,is_best\n";
    for (const CvCell& cell : table.rows) {
        const bool best = cell.lambda1 == table.best_lambda1 && cell.gamma == table.best_gamma;
        out << format_double(cell.lambda1) << ',' << format_double(cell.gamma) << ','
            << format_double(cell.mean_cv_loss) << ',' << format_double(cell.sd_cv_loss) << ','
            << (best ? 1 : 0) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

}  // namespace glava

#endif  // GLAVA_CROSS_VALIDATION_HPP
