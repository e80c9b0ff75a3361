#ifndef GLAVA_SIMULATE_HPP
#define GLAVA_SIMULATE_HPP

#include <Eigen/Cholesky>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "glava/csv.hpp"
#include "glava/dataset.hpp"
#include "glava/link.hpp"
#include "glava/rng.hpp"

namespace glava {

enum class DesignKind { Toeplitz, ExpDecay };
enum class ResponseKind { Logistic, Linear };
enum class DeltaMode { UnitOnes, Rademacher };

inline const char* design_name(DesignKind k) {
    return k == DesignKind::Toeplitz ? "toeplitz" : "expdecay";
}
inline DesignKind design_from_name(const std::string& name) {
    if (name == "toeplitz") return DesignKind::Toeplitz;
    if (name == "expdecay") return DesignKind::ExpDecay;
    throw std::invalid_argument("unknown design kind: " + name);
}

// Sigma_ij = 0.9^|i-j|.
inline Matrix toeplitz_sigma(Eigen::Index p) {
    if (p < 1) throw std::invalid_argument("toeplitz_sigma: p >= 1");
    std::vector<double> pow_rho(static_cast<std::size_t>(p));
    for (Eigen::Index d = 0; d < p; ++d) {
        pow_rho[static_cast<std::size_t>(d)] = std::pow(0.9, static_cast<double>(d));
    }
    Matrix sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            sigma(i, j) = pow_rho[static_cast<std::size_t>(std::abs(i - j))];
        }
    }
    return sigma;
}

// Inverse of the 0.9-AR(1) correlation matrix, rescaled to unit diagonal.
// The inverse is tridiagonal with the known closed form, so no numerical
// inversion is needed.
inline Matrix expdecay_sigma(Eigen::Index p) {
    if (p < 1) throw std::invalid_argument("expdecay_sigma: p >= 1");
    const double rho = 0.9;
    const double scale = 1.0 / (1.0 - rho * rho);
    Matrix inv = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const bool interior = i > 0 && i < p - 1;
        inv(i, i) = scale * (interior ? 1.0 + rho * rho : 1.0);
        if (i + 1 < p) {
            inv(i, i + 1) = -scale * rho;
            inv(i + 1, i) = -scale * rho;
        }
    }
    if (p == 1) inv(0, 0) = 1.0;
    Vector d_inv_sqrt(p);
    for (Eigen::Index i = 0; i < p; ++i) d_inv_sqrt[i] = 1.0 / std::sqrt(inv(i, i));
    Matrix sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = inv(i, j) * d_inv_sqrt[i] * d_inv_sqrt[j];
            sigma(i, j) = v;
            sigma(j, i) = v;
        }
    }
    return sigma;
}

inline Matrix design_sigma(DesignKind kind, Eigen::Index p) {
    return kind == DesignKind::Toeplitz ? toeplitz_sigma(p) : expdecay_sigma(p);
}

// Loading matrix: Gamma_{jk} ~ N(0, nu^2 / k^2), k the 1-based variable
// (column) index. Entries are drawn row-major (factor by factor).
inline Matrix sample_gamma(Eigen::Index q, Eigen::Index p, double nu, Rng& rng) {
    if (q < 0) throw std::invalid_argument("sample_gamma: q >= 0");
    Matrix gamma(q, p);
    for (Eigen::Index j = 0; j < q; ++j) {
        for (Eigen::Index k = 0; k < p; ++k) {
            gamma(j, k) = (nu / static_cast<double>(k + 1)) * rng.normal();
        }
    }
    return gamma;
}

// Sparse coefficient vector: s support indices chosen uniformly without
// replacement, entries independent Rademacher signs. Support is returned
// sorted (0-based).
inline std::pair<Vector, std::vector<Eigen::Index>> sample_beta0(Eigen::Index p, Eigen::Index s,
                                                                 Rng& rng) {
    if (s < 1 || s > p) throw std::invalid_argument("sample_beta0: need 1 <= s <= p");
    std::vector<Eigen::Index> indices(static_cast<std::size_t>(p));
    std::iota(indices.begin(), indices.end(), 0);
    rng.shuffle(indices);
    std::vector<Eigen::Index> support(indices.begin(), indices.begin() + s);
    std::sort(support.begin(), support.end());
    Vector beta0 = Vector::Zero(p);
    for (Eigen::Index j : support) beta0[j] = rng.rademacher();
    return {std::move(beta0), std::move(support)};
}

// UnitOnes: delta = (1,...,1)/sqrt(q); Rademacher: i.i.d. signs (no scaling).
inline Vector make_delta(Eigen::Index q, DeltaMode mode, Rng& rng) {
    Vector delta(q);
    if (mode == DeltaMode::UnitOnes) {
        delta.setConstant(q > 0 ? 1.0 / std::sqrt(static_cast<double>(q)) : 0.0);
    } else {
        for (Eigen::Index j = 0; j < q; ++j) delta[j] = rng.rademacher();
    }
    return delta;
}

struct ScenarioConfig {
    Eigen::Index n = 100;
    Eigen::Index p = 10;
    Eigen::Index q = 0;
    Eigen::Index s = 1;
    double nu = 1.0;
    DesignKind design = DesignKind::Toeplitz;
    ResponseKind response = ResponseKind::Logistic;
    bool with_w = false;          // adds the auxiliary linear response W
    double b_effect = 0.0;        // W -> Y coefficient inside the link
    DeltaMode delta_mode = DeltaMode::UnitOnes;
    std::uint64_t seed = 1;

    void validate() const {
        if (n < 2) throw std::invalid_argument("ScenarioConfig: n >= 2");
        if (p < 1) throw std::invalid_argument("ScenarioConfig: p >= 1");
        if (q < 0) throw std::invalid_argument("ScenarioConfig: q >= 0");
        if (s < 1 || s > p) throw std::invalid_argument("s must not exceed p and be >= 1");
        if (nu < 0.0) throw std::invalid_argument("ScenarioConfig: nu >= 0");
        if (with_w && response != ResponseKind::Logistic) {
            throw std::invalid_argument("ScenarioConfig: W scenarios use a logistic response");
        }
    }
};

struct XyuzDraw {
    Matrix X;
    Matrix U;
    Matrix Z;
    Vector y;
};

namespace detail {

// Z rows ~ N(0, Sigma) through the lower Cholesky factor, U rows ~ N(0, I).
// Draw order: all Z normals first (row-major), then all U normals.
struct DesignDraw {
    Matrix X, U, Z;
};

inline DesignDraw sample_design(Eigen::Index n, const Matrix& sigma, const Matrix& gamma,
                                Rng& rng) {
    const Eigen::Index p = sigma.rows();
    const Eigen::Index q = gamma.rows();
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw degenerate_error("sample_design: covariance matrix is not positive definite");
    }
    Matrix raw(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) raw(i, j) = rng.normal();
    }
    DesignDraw out;
    out.Z.noalias() = raw * llt.matrixL().transpose();
    out.U.resize(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < q; ++j) out.U(i, j) = rng.normal();
    }
    out.X = out.Z;
    if (q > 0) out.X.noalias() += out.U * gamma;
    return out;
}

}  // namespace detail

// Model draw: X = Gamma' U + Z with the response from the linear predictor
// eta_i = x_i' beta0 + u_i' delta0 (Bernoulli(f(eta)) for logistic, eta plus
// standard Gaussian noise for linear).
inline XyuzDraw sample_xyuz(const ScenarioConfig& cfg, const Matrix& sigma, const Matrix& gamma,
                            const Vector& beta0, const Vector& delta0, Rng& rng) {
    detail::DesignDraw d = detail::sample_design(cfg.n, sigma, gamma, rng);
    Vector eta = d.X * beta0;
    if (cfg.q > 0) eta.noalias() += d.U * delta0;
    const LinkSpec logistic = LinkSpec::logistic();
    Vector y(cfg.n);
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        if (cfg.response == ResponseKind::Logistic) {
            y[i] = rng.bernoulli(logistic.f(eta[i])) ? 1.0 : 0.0;
        } else {
            y[i] = eta[i] + rng.normal();
        }
    }
    return {std::move(d.X), std::move(d.U), std::move(d.Z), std::move(y)};
}

// Auxiliary response W = X beta_w + U delta_w + zeta, zeta ~ N(0,1), and
// Y ~ Bernoulli(f(X beta0 + U delta0 + b_effect * W)). Draw order: all zeta,
// then the y draws.
inline std::pair<Vector, Vector> sample_w_and_y(const ScenarioConfig& cfg, const Matrix& X,
                                                const Matrix& U, const Vector& beta_w,
                                                const Vector& delta_w, const Vector& beta0,
                                                const Vector& delta0, double b_effect, Rng& rng) {
    const Eigen::Index n = X.rows();
    Vector w = X * beta_w;
    if (cfg.q > 0) w.noalias() += U * delta_w;
    for (Eigen::Index i = 0; i < n; ++i) w[i] += rng.normal();
    Vector eta = X * beta0;
    if (cfg.q > 0) eta.noalias() += U * delta0;
    eta.noalias() += b_effect * w;
    const LinkSpec logistic = LinkSpec::logistic();
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = rng.bernoulli(logistic.f(eta[i])) ? 1.0 : 0.0;
    }
    return {std::move(w), std::move(y)};
}

// One complete simulated dataset plus its generating truth.
struct ScenarioDraw {
    Matrix X, U, Z;
    Vector y;
    std::optional<Vector> w;
    Matrix gamma;
    Vector beta0;
    std::vector<Eigen::Index> support;
    Vector delta0;
    Vector beta_w;   // empty unless with_w
    Vector delta_w;  // empty unless with_w
};

// Fixed draw order: Gamma, beta0, delta0, (beta_w, delta_w,) Z, U, (zeta,)
// response. sigma must be design_sigma(cfg.design, cfg.p); it is passed in so
// callers can hoist it across replications.
inline ScenarioDraw draw_scenario(const ScenarioConfig& cfg, const Matrix& sigma) {
    cfg.validate();
    Rng rng(cfg.seed);
    ScenarioDraw out;
    out.gamma = sample_gamma(cfg.q, cfg.p, cfg.nu, rng);
    auto [beta0, support] = sample_beta0(cfg.p, cfg.s, rng);
    out.beta0 = std::move(beta0);
    out.support = std::move(support);
    out.delta0 = make_delta(cfg.q, cfg.delta_mode, rng);
    if (cfg.with_w) {
        auto [beta_w, support_w] = sample_beta0(cfg.p, cfg.s, rng);
        (void)support_w;
        out.beta_w = std::move(beta_w);
        out.delta_w = make_delta(cfg.q, cfg.delta_mode, rng);
        detail::DesignDraw d = detail::sample_design(cfg.n, sigma, out.gamma, rng);
        auto [w, y] = sample_w_and_y(cfg, d.X, d.U, out.beta_w, out.delta_w, out.beta0,
                                     out.delta0, cfg.b_effect, rng);
        out.X = std::move(d.X);
        out.U = std::move(d.U);
        out.Z = std::move(d.Z);
        out.w = std::move(w);
        out.y = std::move(y);
    } else {
        XyuzDraw d = sample_xyuz(cfg, sigma, out.gamma, out.beta0, out.delta0, rng);
        out.X = std::move(d.X);
        out.U = std::move(d.U);
        out.Z = std::move(d.Z);
        out.y = std::move(d.y);
    }
    return out;
}

inline Dataset scenario_dataset(const ScenarioDraw& draw) {
    std::vector<std::string> names(static_cast<std::size_t>(draw.X.cols()));
    for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j + 1);
    return Dataset::make(draw.y, draw.X, draw.w, std::move(names));
}

// Truth sidecar: long-form CSV `field,index,value`. Scalar metadata uses
// index 0; vector entries use 1-based indices; support lists 1-based column
// numbers in increasing order.
inline void write_truth_csv(const ScenarioConfig& cfg, const ScenarioDraw& draw,
                            const std::string& path) {
    std::ofstream out = open_output(path);
    out << "field,index,value\n";
    auto put = [&out](const std::string& field, Eigen::Index index, const std::string& value) {
        out << field << ',' << index << ',' << value << '\n';
    };
    put("n", 0, std::to_string(cfg.n));
    put("p", 0, std::to_string(cfg.p));
    put("q", 0, std::to_string(cfg.q));
    put("s", 0, std::to_string(cfg.s));
    put("nu", 0, format_double(cfg.nu));
    put("design", 0, design_name(cfg.design));
    put("response", 0, cfg.response == ResponseKind::Logistic ? "logistic" : "linear");
    put("with_w", 0, cfg.with_w ? "1" : "0");
    put("b_effect", 0, format_double(cfg.b_effect));
    put("delta_mode", 0, cfg.delta_mode == DeltaMode::UnitOnes ? "unit_ones" : "rademacher");
    put("seed", 0, std::to_string(cfg.seed));
    for (Eigen::Index j = 0; j < draw.beta0.size(); ++j) {
        put("beta0", j + 1, format_double(draw.beta0[j]));
    }
    for (std::size_t r = 0; r < draw.support.size(); ++r) {
        put("support", static_cast<Eigen::Index>(r + 1), std::to_string(draw.support[r] + 1));
    }
    for (Eigen::Index j = 0; j < draw.delta0.size(); ++j) {
        put("delta0", j + 1, format_double(draw.delta0[j]));
    }
    if (cfg.with_w) {
        for (Eigen::Index j = 0; j < draw.beta_w.size(); ++j) {
            put("beta_w", j + 1, format_double(draw.beta_w[j]));
        }
        for (Eigen::Index j = 0; j < draw.delta_w.size(); ++j) {
            put("delta_w", j + 1, format_double(draw.delta_w[j]));
        }
    }
    if (!out) throw io_error("failed writing '" + path + "'");
}

}  // namespace glava

#endif  // GLAVA_SIMULATE_HPP
