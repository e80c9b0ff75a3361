#ifndef GLAVA_SOLVER_HPP
#define GLAVA_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "glava/dataset.hpp"
#include "glava/link.hpp"
#include "glava/penalty.hpp"

namespace glava {

struct SolverOptions {
    int max_iter = 5000;
    double tol = 1e-8;              // relative objective change
    double init_step = 1.0;
    double backtrack_factor = 0.5;
    bool restart = true;
    std::optional<Vector> initial_theta;  // previous-solution reuse; zeros otherwise
    std::optional<double> kkt_tol;        // override of the lambda1-scaled default

    void validate() const {
        if (max_iter < 1) throw std::invalid_argument("SolverOptions: max_iter >= 1");
        if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("SolverOptions: 0 < tol < 1");
        if (!(init_step > 0.0)) throw std::invalid_argument("SolverOptions: init_step > 0");
        if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
            throw std::invalid_argument("SolverOptions: backtrack_factor in (0,1)");
        }
        if (kkt_tol && !(*kkt_tol > 0.0)) {
            throw std::invalid_argument("SolverOptions: kkt_tol > 0");
        }
    }
};

struct LavaFit {
    Vector theta_hat;
    Vector beta_hat;
    Vector b_hat;
    double objective = 0.0;
    std::vector<double> objective_trace;
    double kkt_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    double step_final = 1.0;  // accepted step size, reusable for warm starts
};

namespace detail {

// Smooth part of the objective with preallocated workspace. For the identity
// link with n >= p the quadratic is evaluated through the cached Gram matrix
// (p^2 per evaluation instead of 2np), which pays for itself after ~p/2
// iterations and makes warm-started lambda paths cheap.
class SmoothModel {
public:
    SmoothModel(const Dataset& data, const LinkSpec& link)
        : data_(data), link_(link), eta_(data.n()) {
        if (link.family == LinkFamily::Identity && data.n() >= data.p()) {
            gram_ = (data.X.transpose() * data.X).eval();
            xty_ = (data.X.transpose() * data.y).eval();
            gram_theta_.resize(data.p());
        }
    }

    const Dataset& data() const { return data_; }
    const LinkSpec& link() const { return link_; }

    double loss(const Vector& theta) const {
        if (gram_) {
            gram_theta_.noalias() = *gram_ * theta;
            return (0.5 * theta.dot(gram_theta_) - theta.dot(*xty_)) /
                   static_cast<double>(data_.n());
        }
        eta_.noalias() = data_.X * theta;
        double total = 0.0;
        for (Eigen::Index i = 0; i < eta_.size(); ++i) {
            total += -data_.y[i] * eta_[i] + link_.F(eta_[i]);
        }
        return total / static_cast<double>(data_.n());
    }

    double loss_and_grad(const Vector& theta, Vector& grad) const {
        const double inv_n = 1.0 / static_cast<double>(data_.n());
        if (gram_) {
            gram_theta_.noalias() = *gram_ * theta;
            grad = (gram_theta_ - *xty_) * inv_n;
            return (0.5 * theta.dot(gram_theta_) - theta.dot(*xty_)) * inv_n;
        }
        eta_.noalias() = data_.X * theta;
        double total = 0.0;
        for (Eigen::Index i = 0; i < eta_.size(); ++i) {
            total += -data_.y[i] * eta_[i] + link_.F(eta_[i]);
            eta_[i] = link_.f(eta_[i]) - data_.y[i];
        }
        grad.noalias() = data_.X.transpose() * eta_;
        grad *= inv_n;
        return total * inv_n;
    }

private:
    const Dataset& data_;
    LinkSpec link_;
    mutable Vector eta_;
    std::optional<Matrix> gram_;
    std::optional<Vector> xty_;
    mutable Vector gram_theta_;
};

inline double kkt_from_gradient(const PenaltyParams& p, const Vector& grad, const Vector& beta,
                                const Vector& b) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        worst = std::max(worst, std::fabs(grad[j] + 2.0 * p.lambda2 * b[j]));
        if (beta[j] != 0.0) {
            worst = std::max(worst, std::fabs(grad[j] + p.lambda1 * sign(beta[j])));
        } else {
            worst = std::max(worst, std::max(0.0, std::fabs(grad[j]) - p.lambda1));
        }
    }
    return worst;
}

inline double lasso_kkt_from_gradient(double lambda1, const Vector& grad, const Vector& beta) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < grad.size(); ++j) {
        if (beta[j] != 0.0) {
            worst = std::max(worst, std::fabs(grad[j] + lambda1 * sign(beta[j])));
        } else {
            worst = std::max(worst, std::max(0.0, std::fabs(grad[j]) - lambda1));
        }
    }
    return worst;
}

struct LavaPenaltyPolicy {
    PenaltyParams params;

    double value(const Vector& theta) const { return rho_sum(params, theta); }

    void prox(double step, const Vector& z, Vector& out) const {
        const double reach = params.knot() + step * params.lambda1;
        const double shrink = 1.0 / (1.0 + 2.0 * step * params.lambda2);
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            const double v = z[j];
            out[j] = (std::fabs(v) <= reach) ? v * shrink : v - step * params.lambda1 * sign(v);
        }
    }

    double kkt(const Vector& grad, const Vector& theta) const {
        auto [beta, b] = split_theta(params, theta);
        return kkt_from_gradient(params, grad, beta, b);
    }

    void finalize(const Vector& theta, LavaFit& fit) const {
        auto [beta, b] = split_theta(params, theta);
        fit.beta_hat = std::move(beta);
        fit.b_hat = std::move(b);
    }
};

struct LassoPenaltyPolicy {
    double lambda1;

    double value(const Vector& theta) const { return lambda1 * theta.lpNorm<1>(); }

    void prox(double step, const Vector& z, Vector& out) const {
        const double t = step * lambda1;
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            out[j] = sign(z[j]) * std::max(std::fabs(z[j]) - t, 0.0);
        }
    }

    double kkt(const Vector& grad, const Vector& theta) const {
        return lasso_kkt_from_gradient(lambda1, grad, theta);
    }

    void finalize(const Vector& theta, LavaFit& fit) const {
        fit.beta_hat = theta;
        fit.b_hat = Vector::Zero(theta.size());
    }
};

// Monotone FISTA with backtracking line search and gradient-based adaptive
// restart. The step grows after clean iterations and backtracks otherwise,
// which keeps warm-started path fits near the local curvature. The accepted
// iterate never worsens the objective, so the trace is non-increasing by
// construction.
template <typename Penalty>
LavaFit solve_proximal(const SmoothModel& model, const Penalty& penalty,
                       const SolverOptions& opts, double kkt_tol) {
    opts.validate();
    const Eigen::Index p = model.data().p();
    if (opts.initial_theta && opts.initial_theta->size() != p) {
        throw std::invalid_argument("SolverOptions: initial_theta dimension mismatch");
    }

    Vector theta = opts.initial_theta ? *opts.initial_theta : Vector::Zero(p);
    Vector theta_prev = theta;
    Vector extrap = theta;          // the extrapolated point
    Vector grad(p), cand(p), prox_arg(p), cand_prev(p), diff(p);
    bool have_cand_prev = false;

    double objective = model.loss(theta) + penalty.value(theta);
    LavaFit fit;
    fit.objective_trace.reserve(static_cast<std::size_t>(std::min(opts.max_iter, 4096)) + 1);
    fit.objective_trace.push_back(objective);

    double step = opts.init_step;
    double t_momentum = 1.0;
    int flat_count = 0;
    int iter = 0;
    int last_kkt_iter = -1000;
    bool clean_step = false;
    double kkt = std::numeric_limits<double>::infinity();
    bool converged = false;

    for (iter = 1; iter <= opts.max_iter; ++iter) {
        const double loss_extrap = model.loss_and_grad(extrap, grad);
        if (!grad.allFinite()) {
            throw degenerate_error("solver: non-finite gradient encountered");
        }

        // Probe a larger step after an iteration that needed no backtracking.
        if (clean_step) step /= opts.backtrack_factor;
        clean_step = true;
        double loss_cand = 0.0;
        for (;;) {
            prox_arg = extrap - step * grad;
            penalty.prox(step, prox_arg, cand);
            loss_cand = model.loss(cand);
            diff = cand - extrap;
            const double bound = loss_extrap + grad.dot(diff) +
                                 diff.squaredNorm() / (2.0 * step) +
                                 1e-12 * (1.0 + std::fabs(loss_extrap));
            if (loss_cand <= bound) break;
            step *= opts.backtrack_factor;
            clean_step = false;
            if (step < 1e-18) break;  // stalled; the monotone guard decides
        }

        const double objective_cand = loss_cand + penalty.value(cand);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));

        // Monotone safeguard: keep the previous iterate when the accelerated
        // candidate overshoots.
        theta_prev.swap(theta);
        double objective_new;
        if (objective_cand <= objective) {
            theta = cand;
            objective_new = objective_cand;
        } else {
            theta = theta_prev;
            objective_new = objective;
        }

        bool do_restart = false;
        if (opts.restart && have_cand_prev) {
            // O'Donoghue-Candes gradient test on successive proximal points.
            double dot = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                dot += (extrap[j] - cand[j]) * (cand[j] - cand_prev[j]);
            }
            do_restart = dot > 0.0;
        }

        if (do_restart) {
            t_momentum = 1.0;
            extrap = theta;
        } else {
            extrap = theta + (t_momentum / t_next) * (cand - theta) +
                     ((t_momentum - 1.0) / t_next) * (theta - theta_prev);
            t_momentum = t_next;
        }
        cand_prev = cand;
        have_cand_prev = true;

        const double rel_change =
            (objective - objective_new) / std::max(1.0, std::fabs(objective_new));
        objective = objective_new;
        fit.objective_trace.push_back(objective);

        flat_count = (rel_change < opts.tol) ? flat_count + 1 : 0;
        if ((flat_count >= 3 && iter - last_kkt_iter >= 10) || iter % 250 == 0) {
            last_kkt_iter = iter;
            model.loss_and_grad(theta, grad);
            kkt = penalty.kkt(grad, theta);
            if (kkt <= kkt_tol) {
                converged = true;
                break;
            }
            flat_count = 0;
        }
    }

    if (!converged) {
        model.loss_and_grad(theta, grad);
        kkt = penalty.kkt(grad, theta);
        converged = kkt <= kkt_tol;
    }

    fit.theta_hat = theta;
    fit.objective = objective;
    fit.kkt_residual = kkt;
    fit.iterations = std::min(iter, opts.max_iter);
    fit.converged = converged;
    fit.step_final = step;
    penalty.finalize(theta, fit);
    return fit;
}

}  // namespace detail

// Maximal first-order stationarity violation of the split form at (beta, b):
// the b-direction requires grad + 2*lambda2*b = 0 coordinatewise; the beta
// direction requires grad_j = -lambda1*sgn(beta_j) on the active set and
// |grad_j| <= lambda1 off it.
inline double kkt_residual(const Dataset& data, const LinkSpec& link, const PenaltyParams& p,
                           const Vector& beta, const Vector& b) {
    if (beta.size() != data.p() || b.size() != data.p()) {
        throw std::invalid_argument("kkt_residual: dimension mismatch");
    }
    const Vector grad = loss_gradient(data, link, beta + b);
    return detail::kkt_from_gradient(p, grad, beta, b);
}

inline double solver_kkt_tolerance(double lambda1) { return 1e-6 * std::max(1.0, lambda1); }

// Reusable solver bound to one dataset/link pair. Construct once per lambda
// path so the identity-link Gram cache is shared across the fits.
class ProxSolver {
public:
    ProxSolver(const Dataset& data, const LinkSpec& link) : model_(data, link) {
        data.validate_for(link);
    }

    LavaFit fit_lava(const PenaltyParams& p, const SolverOptions& opts = {}) const {
        return detail::solve_proximal(model_, detail::LavaPenaltyPolicy{p}, opts,
                                      opts.kkt_tol.value_or(solver_kkt_tolerance(p.lambda1)));
    }

    LavaFit fit_lasso(double lambda1, const SolverOptions& opts = {}) const {
        if (!(std::isfinite(lambda1) && lambda1 >= 0.0)) {
            throw std::invalid_argument("fit_lasso: lambda1 must be finite and >= 0");
        }
        return detail::solve_proximal(model_, detail::LassoPenaltyPolicy{lambda1}, opts,
                                      opts.kkt_tol.value_or(solver_kkt_tolerance(lambda1)));
    }

private:
    detail::SmoothModel model_;
};

// Minimise L(theta) + sum_j rho(theta_j) and recover (beta, b) from the
// optimal split. Convergence requires both a flat objective (three
// consecutive relative changes below tol) and a certified KKT residual.
inline LavaFit fit_lava(const Dataset& data, const LinkSpec& link, const PenaltyParams& p,
                        const SolverOptions& opts = {}) {
    return ProxSolver(data, link).fit_lava(p, opts);
}

// lambda2 = inf limit: the dense part is pinned at zero and the problem is a
// plain l1-penalised M-estimation solved with the same engine.
inline LavaFit fit_lasso(const Dataset& data, const LinkSpec& link, double lambda1,
                         const SolverOptions& opts = {}) {
    return ProxSolver(data, link).fit_lasso(lambda1, opts);
}

}  // namespace glava

#endif  // GLAVA_SOLVER_HPP
