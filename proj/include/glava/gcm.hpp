#ifndef GLAVA_GCM_HPP
#define GLAVA_GCM_HPP

#include <cmath>
#include <string>
#include <variant>

#include "glava/cross_validation.hpp"
#include "glava/csv.hpp"
#include "glava/dataset.hpp"
#include "glava/normal.hpp"
#include "glava/rng.hpp"
#include "glava/solver.hpp"

namespace glava {

struct FitSummary {
    double kkt_residual = 0.0;
    bool converged = false;
};

struct GcmResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double alpha = 0.05;
    Eigen::Index n_used = 0;
    FitSummary fit_y;
    FitSummary fit_w;
};

// Residuals on the mean scale: y_i - f(x_i' theta_hat).
inline Vector residuals(const Dataset& data, const LinkSpec& link, const LavaFit& fit) {
    Vector eta = data.X * fit.theta_hat;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        eta[i] = data.y[i] - link.f(eta[i]);
    }
    return eta;
}

// Normalised covariance of residual products:
// T = sqrt(n) * mean(R) / sqrt(mean(R^2) - mean(R)^2) with R_i = eps_i * eps^w_i.
// The denominator uses the biased 1/n variance, matching the statistic as
// defined, not the n-1 form.
inline double gcm_statistic(const Vector& eps_y, const Vector& eps_w) {
    if (eps_y.size() != eps_w.size()) {
        throw std::invalid_argument("gcm_statistic: residual length mismatch");
    }
    const Eigen::Index n = eps_y.size();
    if (n < 2) throw std::invalid_argument("gcm_statistic: need n >= 2");
    double mean_r = 0.0;
    double mean_r2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = eps_y[i] * eps_w[i];
        mean_r += r;
        mean_r2 += r * r;
    }
    mean_r /= static_cast<double>(n);
    mean_r2 /= static_cast<double>(n);
    const double variance = mean_r2 - mean_r * mean_r;
    if (variance <= 1e-14) {
        throw degenerate_error(
            "gcm_statistic: residual products have (near-)zero variance; the "
            "normalisation is undefined");
    }
    return std::sqrt(static_cast<double>(n)) * mean_r / std::sqrt(variance);
}

// Tuning for the two regressions: either fixed penalties or per-regression
// cross-validation with fold seeds derived from cv.seed.
struct GcmFixedTuning {
    PenaltyParams params_y;
    PenaltyParams params_w;
};
using GcmTuning = std::variant<GcmFixedTuning, CvConfig>;

struct GcmOptions {
    EstimatorMethod method = EstimatorMethod::GenLava;  // Lasso = lambda2-infinite variant
    SolverOptions solver;
    int threads = 1;
};

namespace detail {

inline LavaFit gcm_single_fit(const Dataset& data, const LinkSpec& link, const GcmTuning& tuning,
                              std::uint64_t cv_stream, const GcmOptions& opts) {
    if (const auto* fixed = std::get_if<GcmFixedTuning>(&tuning)) {
        const PenaltyParams& p = cv_stream == 0 ? fixed->params_y : fixed->params_w;
        if (opts.method == EstimatorMethod::Lasso) {
            return fit_lasso(data, link, p.lambda1, opts.solver);
        }
        return fit_lava(data, link, p, opts.solver);
    }
    CvConfig cfg = std::get<CvConfig>(tuning);
    cfg.seed = splitmix_seed(cfg.seed, cv_stream);  // independent folds per regression
    return cv_fit(data, link, cfg, opts.method, opts.solver, opts.threads).fit;
}

}  // namespace detail

// Edge test: regress Y on X and W on X with the penalised M-estimator,
// normalise the covariance of the residuals, compare |T| against the
// standard normal quantile.
inline GcmResult gcm_edge_test(const Dataset& data, const LinkSpec& link_y,
                               const LinkSpec& link_w, const GcmTuning& tuning, double alpha,
                               const GcmOptions& opts = {}) {
    if (!data.w) throw std::invalid_argument("gcm_edge_test: dataset has no w column");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("gcm_edge_test: alpha must lie in (0,1)");
    }

    Dataset data_w;
    data_w.X = data.X;
    data_w.y = *data.w;
    data_w.feature_names = data.feature_names;

    const LavaFit fit_y = detail::gcm_single_fit(data, link_y, tuning, 0, opts);
    const LavaFit fit_w = detail::gcm_single_fit(data_w, link_w, tuning, 1, opts);

    const Vector eps_y = residuals(data, link_y, fit_y);
    const Vector eps_w = residuals(data_w, link_w, fit_w);

    GcmResult result;
    result.t_stat = gcm_statistic(eps_y, eps_w);
    result.p_value = std::erfc(std::fabs(result.t_stat) / std::sqrt(2.0));
    result.alpha = alpha;
    result.reject = std::fabs(result.t_stat) > normal_quantile(1.0 - alpha / 2.0);
    result.n_used = data.n();
    result.fit_y = {fit_y.kkt_residual, fit_y.converged};
    result.fit_w = {fit_w.kkt_residual, fit_w.converged};
    return result;
}

inline void write_gcm_result_csv(const GcmResult& r, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "t_stat,p_value,reject,alpha,n\n";
    out << format_double(r.t_stat) << ',' << format_double(r.p_value) << ','
        << (r.reject ? 1 : 0) << ',' << format_double(r.alpha) << ',' << r.n_used << '\n';
    if (!out) throw io_error("failed writing '" + path + "'");
}

}  // namespace glava

#endif  // GLAVA_GCM_HPP
