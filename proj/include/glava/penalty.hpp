#ifndef GLAVA_PENALTY_HPP
#define GLAVA_PENALTY_HPP

#include <cmath>
#include <stdexcept>
#include <utility>

#include "glava/link.hpp"

namespace glava {

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Tuning parameters of the sparse-plus-dense penalty
// lambda1*||beta||_1 + lambda2*||b||_2^2. The knot lambda1/(2*lambda2) is
// where the induced scalar penalty rho switches from quadratic to linear.
struct PenaltyParams {
    double lambda1;
    double lambda2;

    PenaltyParams(double l1, double l2) : lambda1(l1), lambda2(l2) {
        if (!(std::isfinite(lambda1) && lambda1 >= 0.0)) {
            throw std::invalid_argument("PenaltyParams: lambda1 must be finite and >= 0");
        }
        if (!(std::isfinite(lambda2) && lambda2 > 0.0)) {
            throw std::invalid_argument(
                "PenaltyParams: lambda2 must be finite and > 0 (use the dedicated "
                "lasso mode for lambda2 = inf)");
        }
    }

    // Reparametrisation lambda2 = gamma * lambda1 / 2.
    static PenaltyParams from_gamma(double lambda1, double gamma) {
        return PenaltyParams(lambda1, gamma * lambda1 / 2.0);
    }

    double knot() const { return lambda1 / (2.0 * lambda2); }
};

// Scalar penalty rho induced on theta = beta + b: quadratic inside the knot,
// linear with offset outside. Continuous and C^1.
inline double rho_eval(const PenaltyParams& p, double t) {
    if (!std::isfinite(t)) throw std::domain_error("rho_eval: t must be finite");
    const double at = std::fabs(t);
    if (at <= p.knot()) return p.lambda2 * t * t;
    return p.lambda1 * at - p.lambda1 * p.lambda1 / (4.0 * p.lambda2);
}

inline double rho_sum(const PenaltyParams& p, const Vector& theta) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) total += rho_eval(p, theta[j]);
    return total;
}

// prox_{step*rho}(z) = argmin_x (x-z)^2/2 + step*rho(x). Shrinks
// multiplicatively near the origin, soft-thresholds in the tails; the two
// regions meet at |z| = knot + step*lambda1.
inline double rho_prox(const PenaltyParams& p, double step, double z) {
    if (!(step > 0.0)) throw std::invalid_argument("rho_prox: step must be > 0");
    if (!std::isfinite(z)) throw std::domain_error("rho_prox: z must be finite");
    if (std::fabs(z) <= p.knot() + step * p.lambda1) {
        return z / (1.0 + 2.0 * step * p.lambda2);
    }
    return z - step * p.lambda1 * sign(z);
}

// Optimal split of theta into (beta, b): beta soft-thresholds theta at the
// knot, b keeps the remainder, so |b_j| <= knot always, with equality
// wherever beta_j != 0. sgn(0) := 0, so |theta_j| = knot goes to b entirely.
inline std::pair<Vector, Vector> split_theta(const PenaltyParams& p, const Vector& theta) {
    const double knot = p.knot();
    Vector beta(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double t = theta[j];
        beta[j] = (std::fabs(t) > knot) ? t - sign(t) * knot : 0.0;
    }
    Vector b = theta - beta;
    return {std::move(beta), std::move(b)};
}

inline double penalty_of_split(const PenaltyParams& p, const Vector& beta, const Vector& b) {
    if (beta.size() != b.size()) {
        throw std::invalid_argument("penalty_of_split: dimension mismatch");
    }
    return p.lambda1 * beta.lpNorm<1>() + p.lambda2 * b.squaredNorm();
}

}  // namespace glava

#endif  // GLAVA_PENALTY_HPP
