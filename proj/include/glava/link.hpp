#ifndef GLAVA_LINK_HPP
#define GLAVA_LINK_HPP

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace glava {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LinkFamily { Identity, Logistic };

// Link function f together with its antiderivative F and derivative f'.
// F defines the M-estimation loss l(y, eta) = -y*eta + F(eta), whose
// population minimiser is the true coefficient vector when the model holds.
struct LinkSpec {
    LinkFamily family = LinkFamily::Identity;

    static LinkSpec identity() { return LinkSpec{LinkFamily::Identity}; }
    static LinkSpec logistic() { return LinkSpec{LinkFamily::Logistic}; }

    // Mean function f(eta). Logistic avoids exp overflow by branching on
    // the sign of eta.
    double f(double eta) const {
        if (family == LinkFamily::Identity) return eta;
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        const double e = std::exp(eta);
        return e / (1.0 + e);
    }

    // Antiderivative F of f. Logistic uses the log-sum-exp form
    // max(eta,0) + log1p(exp(-|eta|)).
    double F(double eta) const {
        if (family == LinkFamily::Identity) return 0.5 * eta * eta;
        return std::max(eta, 0.0) + std::log1p(std::exp(-std::fabs(eta)));
    }

    double fprime(double eta) const {
        if (family == LinkFamily::Identity) return 1.0;
        const double e = std::exp(-std::fabs(eta));
        const double d = 1.0 + e;
        return e / (d * d);
    }

    bool valid_response(double y) const {
        if (family == LinkFamily::Logistic) return y == 0.0 || y == 1.0;
        return std::isfinite(y);
    }

    const char* name() const {
        return family == LinkFamily::Identity ? "identity" : "logistic";
    }
};

inline LinkSpec link_from_name(const std::string& name) {
    if (name == "identity") return LinkSpec::identity();
    if (name == "logistic") return LinkSpec::logistic();
    throw std::invalid_argument("unknown link family: " + name);
}

inline double link_eval(const LinkSpec& link, double eta) {
    if (!std::isfinite(eta)) throw std::domain_error("link_eval: eta must be finite");
    return link.f(eta);
}

inline double loss_eval(const LinkSpec& link, double y, double eta) {
    if (!std::isfinite(eta)) throw std::domain_error("loss_eval: eta must be finite");
    if (!link.valid_response(y)) {
        throw std::domain_error("loss_eval: response invalid for link family");
    }
    return -y * eta + link.F(eta);
}

}  // namespace glava

#endif  // GLAVA_LINK_HPP
