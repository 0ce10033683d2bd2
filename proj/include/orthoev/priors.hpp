#pragma once

// Log prior densities. Every function returns -infinity outside its support
// and never throws on parameter values, so samplers can reject gracefully.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"

namespace orthoev {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct PcPriorConfig {
    double lambda = 1.0;
    bool use_laplace_approx = false;
};

enum class PriorKind { jeffreys_orthogonal, jeffreys_original, pc_composite, flat };

struct PriorSpec {
    PriorKind kind = PriorKind::flat;
    std::optional<PcPriorConfig> pc;

    static PriorSpec flat() { return {PriorKind::flat, std::nullopt}; }
    static PriorSpec jeffreys_orthogonal() { return {PriorKind::jeffreys_orthogonal, std::nullopt}; }
    static PriorSpec jeffreys_original() { return {PriorKind::jeffreys_original, std::nullopt}; }
    static PriorSpec pc_composite(double lambda, bool laplace = false) {
        return {PriorKind::pc_composite, PcPriorConfig{lambda, laplace}};
    }

    void validate() const {
        if ((kind == PriorKind::pc_composite) != pc.has_value())
            throw config_error("PriorSpec: pc config must be present iff kind = pc_composite");
        if (pc && !(pc->lambda > 0.0 && std::isfinite(pc->lambda)))
            throw config_error("PriorSpec: lambda must be > 0");
    }
};

inline std::string to_string(PriorKind k) {
    switch (k) {
        case PriorKind::jeffreys_orthogonal: return "jeffreys_orthogonal";
        case PriorKind::jeffreys_original: return "jeffreys_original";
        case PriorKind::pc_composite: return "pc_composite";
        case PriorKind::flat: return "flat";
    }
    return "?";
}

inline PriorKind prior_kind_from_string(const std::string& s) {
    if (s == "jeffreys_orthogonal") return PriorKind::jeffreys_orthogonal;
    if (s == "jeffreys_original") return PriorKind::jeffreys_original;
    if (s == "pc_composite") return PriorKind::pc_composite;
    if (s == "flat") return PriorKind::flat;
    throw config_error("unknown prior kind '" + s + "'");
}

/// Unnormalized Jeffreys prior in (r, nu, xi): r^{1/2} / (nu (1+xi) (1+2xi)^{1/2}).
inline double log_jeffreys_orthogonal(const OrthogonalParams& p) {
    if (!(p.r > 0.0) || !(p.nu > 0.0) || !(p.xi > -0.5) || !std::isfinite(p.xi)) return neg_inf;
    return 0.5 * std::log(p.r) - std::log(p.nu) - std::log1p(p.xi) - 0.5 * std::log1p(2.0 * p.xi);
}

/// Unnormalized Jeffreys prior in (mu, sigma, xi) at context (u, m):
/// t^{-3/(2xi) - 1} / (sigma^2 (1+xi) (1+2xi)^{1/2}) with t = 1 + xi (u - mu)/sigma.
/// Equals the pushforward of log_jeffreys_orthogonal up to the constant 1.5 log m.
inline double log_jeffreys_original(const OriginalParams& p, const ModelContext& ctx) {
    if (!(p.sigma > 0.0) || !(p.xi > -0.5) || !std::isfinite(p.mu) || !std::isfinite(p.xi))
        return neg_inf;
    const double a = (ctx.u - p.mu) / p.sigma;
    const double t = 1.0 + p.xi * a;
    if (!(t > 0.0)) return neg_inf;
    const double log_t_pow = -1.5 * detail::log1p_over(a, p.xi) - std::log(t);
    return log_t_pow - 2.0 * std::log(p.sigma) - std::log1p(p.xi) - 0.5 * std::log1p(2.0 * p.xi);
}

/// Jeffreys prior of the GPD in its orthogonal coordinates (nu, xi):
/// 1 / (nu (1+xi) (1+2xi)^{1/2}); the (nu, xi) block of the Poisson-process
/// information per unit intensity.
inline double log_jeffreys_gpd_orthogonal(double nu, double xi) {
    if (!(nu > 0.0) || !(xi > -0.5) || !std::isfinite(xi)) return neg_inf;
    return -std::log(nu) - std::log1p(xi) - 0.5 * std::log1p(2.0 * xi);
}

/// GPD Jeffreys prior in (sigma_tilde, xi): 1 / (sigma (1+xi) (1+2xi)^{1/2}).
inline double log_jeffreys_gpd_original(double sigma_tilde, double xi) {
    if (!(sigma_tilde > 0.0) || !(xi > -0.5) || !std::isfinite(xi)) return neg_inf;
    return -std::log(sigma_tilde) - std::log1p(xi) - 0.5 * std::log1p(2.0 * xi);
}

/// Distance from the exponential base model: |xi| / sqrt(1 - xi); +inf for xi >= 1.
/// The exponent of the PC density uses exactly this form (the sqrt(2) of the
/// KL-based definition is absorbed in lambda).
inline double pc_distance(double xi) {
    if (!(xi < 1.0)) return std::numeric_limits<double>::infinity();
    return std::abs(xi) / std::sqrt(1.0 - xi);
}

/// Derivative of the signed distance xi / sqrt(1 - xi).
inline double pc_distance_derivative(double xi) {
    if (!(xi < 1.0)) return std::numeric_limits<double>::infinity();
    return (1.0 - 0.5 * xi) / std::pow(1.0 - xi, 1.5);
}

/// Normalized PC prior density on xi (or its Laplace(0, 1/lambda) approximation).
inline double pc_log_density(double xi, const PcPriorConfig& cfg) {
    if (!std::isfinite(xi) || !(cfg.lambda > 0.0)) return neg_inf;
    const double log_half_lambda = std::log(0.5 * cfg.lambda);
    if (cfg.use_laplace_approx) return log_half_lambda - cfg.lambda * std::abs(xi);
    if (!(xi < 1.0)) return neg_inf;
    return log_half_lambda + std::log1p(-0.5 * xi) - 1.5 * std::log1p(-xi) -
           cfg.lambda * pc_distance(xi);
}

/// Closed-form cdf of the PC prior: 0.5 exp(lambda d) for xi <= 0 and
/// 1 - 0.5 exp(-lambda d) for 0 < xi < 1, with d the signed distance.
inline double pc_cdf(double xi, const PcPriorConfig& cfg) {
    if (cfg.use_laplace_approx) {
        return xi <= 0.0 ? 0.5 * std::exp(cfg.lambda * xi) : 1.0 - 0.5 * std::exp(-cfg.lambda * xi);
    }
    if (!(xi < 1.0)) return 1.0;
    const double d = xi / std::sqrt(1.0 - xi);
    return xi <= 0.0 ? 0.5 * std::exp(cfg.lambda * d) : 1.0 - 0.5 * std::exp(-cfg.lambda * d);
}

inline double pc_quantile(double q, const PcPriorConfig& cfg) {
    if (!(q > 0.0 && q < 1.0)) throw domain_error("pc_quantile: q must lie in (0, 1)");
    const double d = q <= 0.5 ? std::log(2.0 * q) / cfg.lambda : -std::log(2.0 * (1.0 - q)) / cfg.lambda;
    if (cfg.use_laplace_approx) return d;
    // invert d = xi / sqrt(1 - xi): xi^2 = d^2 (1 - xi) with sign(xi) = sign(d)
    return 0.5 * (d * std::sqrt(d * d + 4.0) - d * d);
}

/// Equal-tailed credible interval of the PC prior (or its Laplace approximation).
inline std::pair<double, double> pc_credible_interval(double level, const PcPriorConfig& cfg) {
    const double tail = 0.5 * (1.0 - level);
    return {pc_quantile(tail, cfg), pc_quantile(1.0 - tail, cfg)};
}

/// Composite prior p_PC(xi) / nu; independent of r.
inline double log_pc_composite(const OrthogonalParams& p, const PcPriorConfig& cfg) {
    if (!(p.r > 0.0) || !(p.nu > 0.0)) return neg_inf;
    return pc_log_density(p.xi, cfg) - std::log(p.nu);
}

}  // namespace orthoev
