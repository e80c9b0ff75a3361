// Command-line front end: simulate data, fit the penalised M-estimator,
// cross-validate, run the residual-covariance edge test, and drive the two
// Monte Carlo benchmarks. All randomness flows from --seed; --threads only
// changes wall time, never output bytes.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "glava/glava.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitIo = 4;

struct SimulateArgs {
    glava::ScenarioConfig scenario;
    std::string design = "toeplitz";
    std::string response = "logistic";
    std::string delta_mode = "unit";
    std::string out_path;
    std::string truth_path;
};

struct FitArgs {
    std::string data_path;
    std::string link = "identity";
    double lambda1 = 0.0;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double lambda2 = std::numeric_limits<double>::quiet_NaN();
    std::string out_path;
    glava::SolverOptions solver;
};

struct CvArgs {
    std::string data_path;
    std::string link = "identity";
    std::string method = "lava";
    glava::CvConfig cv;
    std::vector<double> gamma_grid;
    int threads = 0;
    std::string out_path;
};

struct GcmArgs {
    std::string data_path;
    std::string link_y = "logistic";
    std::string link_w = "identity";
    std::string method = "lava";
    double alpha = 0.05;
    bool fixed = false;
    double lambda1_y = 0.1, gamma_y = 1.0;
    double lambda1_w = 0.1, gamma_w = 1.0;
    glava::CvConfig cv;
    int threads = 0;
    std::string out_path;
};

struct BenchEstArgs {
    std::vector<std::string> designs = {"toeplitz"};
    std::vector<Eigen::Index> qs = {5};
    std::vector<double> nus = {1.0};
    std::vector<Eigen::Index> ss = {5};
    Eigen::Index n = 800, p = 200;
    int reps = 50;
    std::string response = "logistic";
    std::uint64_t seed = 1;
    glava::CvConfig cv;
    int threads = 0;
    bool timing = false;
    std::string records_path, summary_path;
};

struct BenchInfArgs {
    std::vector<double> b_grid = {0.0, 0.03, 0.06, 0.1, 0.13, 0.16, 0.2};
    Eigen::Index n = 1000, p = 100, q = 5, s = 5;
    double nu = 1.0;
    std::string design = "expdecay";
    double alpha = 0.05;
    int reps = 200;
    std::uint64_t seed = 1;
    glava::CvConfig cv;
    int threads = 0;
    std::string records_path, summary_path;
};

void add_cv_flags(CLI::App* cmd, glava::CvConfig& cv) {
    cmd->add_option("--folds", cv.n_folds, "Number of CV folds")->capture_default_str();
    cmd->add_option("--n-lambda1", cv.n_lambda1, "Length of the lambda1 path")
        ->capture_default_str();
    cmd->add_option("--lambda-min-ratio", cv.lambda_min_ratio,
                    "Smallest lambda1 as a fraction of lambda_max")
        ->capture_default_str();
}

glava::EstimatorMethod method_from_name(const std::string& name) {
    if (name == "lava") return glava::EstimatorMethod::GenLava;
    if (name == "lasso") return glava::EstimatorMethod::Lasso;
    throw std::invalid_argument("unknown method '" + name + "' (expected lava or lasso)");
}

int run_simulate(const SimulateArgs& args) {
    glava::ScenarioConfig cfg = args.scenario;
    cfg.design = glava::design_from_name(args.design);
    if (args.response == "logistic") {
        cfg.response = glava::ResponseKind::Logistic;
    } else if (args.response == "linear") {
        cfg.response = glava::ResponseKind::Linear;
    } else {
        throw std::invalid_argument("unknown response '" + args.response + "'");
    }
    if (args.delta_mode == "unit") {
        cfg.delta_mode = glava::DeltaMode::UnitOnes;
    } else if (args.delta_mode == "rademacher") {
        cfg.delta_mode = glava::DeltaMode::Rademacher;
    } else {
        throw std::invalid_argument("unknown delta mode '" + args.delta_mode + "'");
    }
    cfg.validate();

    const glava::Matrix sigma = glava::design_sigma(cfg.design, cfg.p);
    const glava::ScenarioDraw draw = glava::draw_scenario(cfg, sigma);
    glava::write_dataset_csv(glava::scenario_dataset(draw), args.out_path);
    glava::write_truth_csv(cfg, draw, args.truth_path);
    std::cout << "dataset " << args.out_path << "\n";
    std::cout << "truth " << args.truth_path << "\n";
    return 0;
}

int run_fit(const FitArgs& args) {
    const glava::Dataset data = glava::read_dataset_csv(args.data_path);
    const glava::LinkSpec link = glava::link_from_name(args.link);

    const bool have_gamma = !std::isnan(args.gamma);
    const bool have_lambda2 = !std::isnan(args.lambda2);
    if (have_gamma == have_lambda2) {
        throw std::invalid_argument("fit: give exactly one of --gamma or --lambda2");
    }

    glava::LavaFit fit;
    if (have_lambda2 && std::isinf(args.lambda2)) {
        fit = glava::fit_lasso(data, link, args.lambda1, args.solver);
    } else {
        const glava::PenaltyParams params =
            have_gamma ? glava::PenaltyParams::from_gamma(args.lambda1, args.gamma)
                       : glava::PenaltyParams(args.lambda1, args.lambda2);
        fit = glava::fit_lava(data, link, params, args.solver);
    }

    std::ofstream out = glava::open_output(args.out_path);
    out << "feature,beta_hat,b_hat,theta_hat\n";
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        const std::string name = data.feature_names.empty()
                                     ? "x" + std::to_string(j + 1)
                                     : data.feature_names[static_cast<std::size_t>(j)];
        out << name << ',' << glava::format_double(fit.beta_hat[j]) << ','
            << glava::format_double(fit.b_hat[j]) << ','
            << glava::format_double(fit.theta_hat[j]) << '\n';
    }
    if (!out) throw glava::io_error("failed writing '" + args.out_path + "'");

    std::cout << "objective " << glava::format_double(fit.objective) << "\n";
    std::cout << "kkt_residual " << glava::format_double(fit.kkt_residual) << "\n";
    std::cout << "iterations " << fit.iterations << "\n";
    std::cout << "converged " << (fit.converged ? 1 : 0) << "\n";
    return 0;
}

int run_cv(const CvArgs& args) {
    const glava::Dataset data = glava::read_dataset_csv(args.data_path);
    const glava::LinkSpec link = glava::link_from_name(args.link);
    glava::CvConfig cfg = args.cv;
    cfg.gamma_grid = args.gamma_grid;
    const glava::CvTable table =
        glava::cross_validate(data, link, cfg, method_from_name(args.method), {}, args.threads);
    glava::write_cv_table_csv(table, args.out_path);
    std::cout << "best_lambda1 " << glava::format_double(table.best_lambda1) << "\n";
    std::cout << "best_gamma " << glava::format_double(table.best_gamma) << "\n";
    return 0;
}

int run_gcm(const GcmArgs& args) {
    const glava::Dataset data = glava::read_dataset_csv(args.data_path);
    if (!data.w) {
        throw std::invalid_argument("gcm-test: dataset has no w column");
    }
    glava::GcmOptions opts;
    opts.method = method_from_name(args.method);
    opts.threads = glava::resolve_threads(args.threads);

    glava::GcmTuning tuning = args.cv;
    if (args.fixed) {
        tuning = glava::GcmFixedTuning{
            glava::PenaltyParams::from_gamma(args.lambda1_y, args.gamma_y),
            glava::PenaltyParams::from_gamma(args.lambda1_w, args.gamma_w)};
    }
    const glava::GcmResult result =
        glava::gcm_edge_test(data, glava::link_from_name(args.link_y),
                             glava::link_from_name(args.link_w), tuning, args.alpha, opts);
    glava::write_gcm_result_csv(result, args.out_path);
    std::cout << "t_stat " << glava::format_double(result.t_stat) << "\n";
    std::cout << "p_value " << glava::format_double(result.p_value) << "\n";
    std::cout << "reject " << (result.reject ? 1 : 0) << "\n";
    return 0;
}

int run_bench_estimation(const BenchEstArgs& args) {
    glava::EstimationBenchConfig cfg;
    cfg.grid.clear();
    for (const std::string& d : args.designs) {
        for (Eigen::Index q : args.qs) {
            for (double nu : args.nus) {
                for (Eigen::Index s : args.ss) {
                    cfg.grid.push_back({glava::design_from_name(d), q, nu, s});
                }
            }
        }
    }
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.reps = args.reps;
    if (args.response == "logistic") {
        cfg.response = glava::ResponseKind::Logistic;
    } else if (args.response == "linear") {
        cfg.response = glava::ResponseKind::Linear;
    } else {
        throw std::invalid_argument("unknown response '" + args.response + "'");
    }
    cfg.seed = args.seed;
    cfg.cv = args.cv;
    cfg.threads = glava::resolve_threads(args.threads);
    cfg.timing = args.timing;

    const std::vector<glava::EstimationRow> rows = glava::run_estimation_benchmark(cfg);
    glava::write_estimation_records_csv(rows, args.records_path);
    const auto summary = glava::summarize_estimation(rows);
    glava::write_estimation_summary_csv(summary, args.summary_path);
    for (const glava::EstimationSummary& s : summary) {
        std::cout << glava::design_name(s.cell.design) << " q=" << s.cell.q
                  << " nu=" << glava::format_double(s.cell.nu) << " s=" << s.cell.s << " "
                  << glava::method_name(s.method)
                  << " median_error=" << glava::format_double(s.median_error)
                  << " failed=" << s.n_failed << "\n";
    }
    return 0;
}

int run_bench_inference(const BenchInfArgs& args) {
    glava::InferenceBenchConfig cfg;
    cfg.b_grid = args.b_grid;
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.q = args.q;
    cfg.s = args.s;
    cfg.nu = args.nu;
    cfg.design = glava::design_from_name(args.design);
    cfg.alpha = args.alpha;
    cfg.reps = args.reps;
    cfg.seed = args.seed;
    cfg.cv = args.cv;
    cfg.threads = glava::resolve_threads(args.threads);

    const glava::InferenceBenchResult result = glava::run_inference_benchmark(cfg);
    glava::write_inference_records_csv(result.records, args.records_path);
    glava::write_inference_summary_csv(result.summaries, args.summary_path);
    for (const glava::InferenceSummary& s : result.summaries) {
        std::cout << glava::method_name(s.method) << " b=" << glava::format_double(s.b_effect)
                  << " rejection_rate=" << glava::format_double(s.rejection_rate)
                  << " failed=" << s.n_failed << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-plus-dense penalised GLMs under latent confounding"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
    simulate->add_option("--n", sim.scenario.n, "Sample size")->required();
    simulate->add_option("--p", sim.scenario.p, "Number of features")->required();
    simulate->add_option("--q", sim.scenario.q, "Latent confounder dimension")
        ->capture_default_str();
    simulate->add_option("--s", sim.scenario.s, "Support size of beta0")->capture_default_str();
    simulate->add_option("--nu", sim.scenario.nu, "Confounding strength")->capture_default_str();
    simulate->add_option("--design", sim.design, "toeplitz or expdecay")->capture_default_str();
    simulate->add_option("--response", sim.response, "logistic or linear")
        ->capture_default_str();
    simulate->add_flag("--with-w", sim.scenario.with_w, "Add the auxiliary response column w");
    simulate->add_option("--b-effect", sim.scenario.b_effect, "W->Y coefficient (with --with-w)")
        ->capture_default_str();
    simulate->add_option("--delta-mode", sim.delta_mode, "unit or rademacher")
        ->capture_default_str();
    simulate->add_option("--seed", sim.scenario.seed, "RNG seed")->capture_default_str();
    simulate->add_option("--out", sim.out_path, "Dataset CSV path")->required();
    simulate->add_option("--truth", sim.truth_path, "Truth sidecar CSV path")->required();
    simulate->set_config("--config");

    FitArgs fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the penalised M-estimator");
    fit_cmd->add_option("--data", fit.data_path, "Dataset CSV")->required();
    fit_cmd->add_option("--link", fit.link, "identity or logistic")->capture_default_str();
    fit_cmd->add_option("--lambda1", fit.lambda1, "l1 penalty weight")->required();
    fit_cmd->add_option("--gamma", fit.gamma, "Sets lambda2 = gamma*lambda1/2");
    fit_cmd->add_option("--lambda2", fit.lambda2, "Ridge weight; 'inf' selects the lasso mode");
    fit_cmd->add_option("--max-iter", fit.solver.max_iter, "Iteration cap")
        ->capture_default_str();
    fit_cmd->add_option("--tol", fit.solver.tol, "Relative objective tolerance")
        ->capture_default_str();
    fit_cmd->add_option("--out", fit.out_path, "Fit CSV path")->required();
    fit_cmd->set_config("--config");

    CvArgs cv;
    CLI::App* cv_cmd = app.add_subcommand("cv", "Cross-validate the tuning parameters");
    cv_cmd->add_option("--data", cv.data_path, "Dataset CSV")->required();
    cv_cmd->add_option("--link", cv.link, "identity or logistic")->capture_default_str();
    cv_cmd->add_option("--method", cv.method, "lava or lasso")->capture_default_str();
    add_cv_flags(cv_cmd, cv.cv);
    cv_cmd->add_option("--gamma-grid", cv.gamma_grid, "Comma-separated gamma grid")
        ->delimiter(',');
    cv_cmd->add_option("--seed", cv.cv.seed, "Fold shuffle seed")->capture_default_str();
    cv_cmd->add_option("--threads", cv.threads, "Worker threads (0 = auto)")
        ->capture_default_str();
    cv_cmd->add_option("--out", cv.out_path, "CV table CSV path")->required();
    cv_cmd->set_config("--config");

    GcmArgs gcm;
    CLI::App* gcm_cmd = app.add_subcommand("gcm-test", "Residual-covariance edge test");
    gcm_cmd->add_option("--data", gcm.data_path, "Dataset CSV with a w column")->required();
    gcm_cmd->add_option("--link-y", gcm.link_y, "Link for Y ~ X")->capture_default_str();
    gcm_cmd->add_option("--link-w", gcm.link_w, "Link for W ~ X")->capture_default_str();
    gcm_cmd->add_option("--method", gcm.method, "lava or lasso")->capture_default_str();
    gcm_cmd->add_option("--alpha", gcm.alpha, "Test level")->capture_default_str();
    gcm_cmd->add_flag("--fixed", gcm.fixed, "Use fixed penalties instead of CV");
    gcm_cmd->add_option("--lambda1-y", gcm.lambda1_y, "Fixed lambda1 for Y ~ X");
    gcm_cmd->add_option("--gamma-y", gcm.gamma_y, "Fixed gamma for Y ~ X");
    gcm_cmd->add_option("--lambda1-w", gcm.lambda1_w, "Fixed lambda1 for W ~ X");
    gcm_cmd->add_option("--gamma-w", gcm.gamma_w, "Fixed gamma for W ~ X");
    add_cv_flags(gcm_cmd, gcm.cv);
    gcm_cmd->add_option("--seed", gcm.cv.seed, "Master seed for the two CV runs")
        ->capture_default_str();
    gcm_cmd->add_option("--threads", gcm.threads, "Worker threads (0 = auto)")
        ->capture_default_str();
    gcm_cmd->add_option("--out", gcm.out_path, "Result CSV path")->required();
    gcm_cmd->set_config("--config");

    BenchEstArgs be;
    CLI::App* bench_est = app.add_subcommand("bench-estimation", "Estimation error benchmark");
    bench_est->add_option("--design", be.designs, "Design kinds")->delimiter(',')
        ->capture_default_str();
    bench_est->add_option("--q", be.qs, "Latent dimensions")->delimiter(',')
        ->capture_default_str();
    bench_est->add_option("--nu", be.nus, "Confounding strengths")->delimiter(',')
        ->capture_default_str();
    bench_est->add_option("--s", be.ss, "Support sizes")->delimiter(',')->capture_default_str();
    bench_est->add_option("--n", be.n, "Sample size")->capture_default_str();
    bench_est->add_option("--p", be.p, "Number of features")->capture_default_str();
    bench_est->add_option("--reps", be.reps, "Replications per cell")->capture_default_str();
    bench_est->add_option("--response", be.response, "logistic or linear")
        ->capture_default_str();
    add_cv_flags(bench_est, be.cv);
    bench_est->add_option("--seed", be.seed, "Base seed")->capture_default_str();
    bench_est->add_option("--threads", be.threads, "Worker threads (0 = auto)")
        ->capture_default_str();
    bench_est->add_flag("--timing", be.timing,
                        "Record wall times in the CSV (breaks byte-reproducibility)");
    bench_est->add_option("--records", be.records_path, "Per-replication CSV path")->required();
    bench_est->add_option("--summary", be.summary_path, "Summary CSV path")->required();
    bench_est->set_config("--config");

    BenchInfArgs bi;
    CLI::App* bench_inf = app.add_subcommand("bench-inference", "Size/power benchmark");
    bench_inf->add_option("--b-grid", bi.b_grid, "W->Y effect sizes")->delimiter(',')
        ->capture_default_str();
    bench_inf->add_option("--n", bi.n, "Sample size")->capture_default_str();
    bench_inf->add_option("--p", bi.p, "Number of features")->capture_default_str();
    bench_inf->add_option("--q", bi.q, "Latent dimension")->capture_default_str();
    bench_inf->add_option("--s", bi.s, "Support size")->capture_default_str();
    bench_inf->add_option("--nu", bi.nu, "Confounding strength")->capture_default_str();
    bench_inf->add_option("--design", bi.design, "toeplitz or expdecay")->capture_default_str();
    bench_inf->add_option("--alpha", bi.alpha, "Test level")->capture_default_str();
    bench_inf->add_option("--reps", bi.reps, "Replications")->capture_default_str();
    add_cv_flags(bench_inf, bi.cv);
    bench_inf->add_option("--seed", bi.seed, "Base seed")->capture_default_str();
    bench_inf->add_option("--threads", bi.threads, "Worker threads (0 = auto)")
        ->capture_default_str();
    bench_inf->add_option("--records", bi.records_path, "Per-replication CSV path")->required();
    bench_inf->add_option("--summary", bi.summary_path, "Summary CSV path")->required();
    bench_inf->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim);
        if (fit_cmd->parsed()) return run_fit(fit);
        if (cv_cmd->parsed()) return run_cv(cv);
        if (gcm_cmd->parsed()) return run_gcm(gcm);
        if (bench_est->parsed()) return run_bench_estimation(be);
        if (bench_inf->parsed()) return run_bench_inference(bi);
    } catch (const glava::degenerate_error& e) {
        std::cerr << "error (degenerate): " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const glava::io_error& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error (usage): " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error (usage): " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
