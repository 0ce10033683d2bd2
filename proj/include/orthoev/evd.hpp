#pragma once

// Extreme-value distribution functions and parameter transforms.
//
// Conventions:
//   OriginalParams    (mu, sigma, xi)  location/scale/shape of the GEV for m blocks
//   OrthogonalParams  (r, nu, xi)      Poisson intensity above u, orthogonal scale, shape
//   ModelContext      (u, m)           threshold and number of blocks
//
// All functions are pure. |xi| < xi_switch selects the analytic xi = 0 limit;
// otherwise log1p/expm1 forms are used so both branches agree to ~1e-8.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "orthoev/error.hpp"

namespace orthoev {

inline constexpr double xi_switch = 1e-8;

struct OriginalParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
};

struct OrthogonalParams {
    double r = 1.0;
    double nu = 1.0;
    double xi = 0.0;
};

struct ModelContext {
    double u = 0.0;
    double m = 1.0;
};

struct GpdParams {
    double sigma_tilde = 1.0;
    double xi = 0.0;
};

namespace detail {

inline bool is_gumbel(double xi) { return std::abs(xi) < xi_switch; }

/// log(1 + xi*a) / xi, with limit a as xi -> 0 (series near the limit).
inline double log1p_over(double a, double xi) {
    const double t = xi * a;
    if (!is_gumbel(xi) || std::abs(t) > 1e-4) return std::log1p(t) / xi;
    return a * (1.0 - t / 2.0 + t * t / 3.0);
}

/// (exp(xi*b) - 1) / xi, with limit b as xi -> 0 (series near the limit).
inline double expm1_over(double b, double xi) {
    const double t = xi * b;
    if (!is_gumbel(xi) || std::abs(t) > 1e-4) return std::expm1(t) / xi;
    return b * (1.0 + t / 2.0 + t * t / 6.0);
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw domain_error(std::string(what) + " must be finite");
}

inline void require_scale(double s, const char* what) {
    require_finite(s, what);
    if (!(s > 0.0)) throw domain_error(std::string(what) + " must be > 0");
}

}  // namespace detail

/// GEV cdf G((x - mu)/sigma). Outside the support returns 0 or 1.
inline double gev_cdf(double x, const OriginalParams& p) {
    detail::require_finite(x, "x");
    detail::require_finite(p.mu, "mu");
    detail::require_finite(p.xi, "xi");
    detail::require_scale(p.sigma, "sigma");
    const double z = (x - p.mu) / p.sigma;
    if (1.0 + p.xi * z <= 0.0) return p.xi > 0.0 ? 0.0 : 1.0;
    return std::exp(-std::exp(-detail::log1p_over(z, p.xi)));
}

inline double gpd_cdf(double y, const GpdParams& p) {
    detail::require_finite(y, "y");
    detail::require_finite(p.xi, "xi");
    detail::require_scale(p.sigma_tilde, "sigma_tilde");
    if (y <= 0.0) return 0.0;
    const double z = y / p.sigma_tilde;
    if (1.0 + p.xi * z <= 0.0) return 1.0;
    return -std::expm1(-detail::log1p_over(z, p.xi));
}

/// Inverse of gpd_cdf. q = 1 is only allowed for xi < 0 (finite endpoint).
inline double gpd_quantile(double q, const GpdParams& p) {
    detail::require_finite(p.xi, "xi");
    detail::require_scale(p.sigma_tilde, "sigma_tilde");
    if (!(q >= 0.0 && q <= 1.0)) throw domain_error("gpd_quantile: q must lie in [0, 1)");
    if (q == 1.0) {
        if (p.xi >= 0.0 || detail::is_gumbel(p.xi))
            throw unbounded_error("gpd_quantile: q = 1 is +infinity for xi >= 0");
        return -p.sigma_tilde / p.xi;
    }
    // y = sigma * ((1-q)^{-xi} - 1) / xi
    return p.sigma_tilde * detail::expm1_over(-std::log1p(-q), p.xi);
}

/// GPD scale above u implied by the GEV parameters: sigma + xi (u - mu).
inline GpdParams gpd_scale_at_threshold(const OriginalParams& p, double u) {
    detail::require_scale(p.sigma, "sigma");
    const double st = p.sigma + p.xi * (u - p.mu);
    if (!(st > 0.0)) throw domain_error("gpd_scale_at_threshold: sigma + xi (u - mu) <= 0");
    return {st, p.xi};
}

inline OrthogonalParams to_orthogonal(const OriginalParams& p, const ModelContext& ctx) {
    detail::require_scale(p.sigma, "sigma");
    detail::require_scale(ctx.m, "m");
    detail::require_finite(p.mu, "mu");
    detail::require_finite(p.xi, "xi");
    const double a = (ctx.u - p.mu) / p.sigma;
    if (!(1.0 + p.xi * a > 0.0))
        throw domain_error("to_orthogonal: threshold u outside the GEV support");
    // log(r/m) = -log(1 + xi a) / xi
    const double log_ratio = -detail::log1p_over(a, p.xi);
    const double nu = (1.0 + p.xi) * (p.sigma + p.xi * (ctx.u - p.mu));
    if (!(nu > 0.0)) throw domain_error("to_orthogonal: nu <= 0 (requires xi > -1)");
    return {ctx.m * std::exp(log_ratio), nu, p.xi};
}

/// Inverse of to_orthogonal.
///
/// With L = log(r/m):
///   mu    = u - nu / (xi (1+xi)) * (1 - exp(xi L)) = u + nu/(1+xi) * expm1(xi L)/xi
///   sigma = nu / (1+xi) * exp(xi L)
/// As xi -> 0, expm1(xi L)/xi -> L, which gives mu = u + nu log(r/m), sigma = nu.
inline OriginalParams to_original(const OrthogonalParams& p, const ModelContext& ctx) {
    detail::require_scale(p.r, "r");
    detail::require_scale(p.nu, "nu");
    detail::require_scale(ctx.m, "m");
    detail::require_finite(p.xi, "xi");
    if (p.xi == -1.0) throw singularity_error("to_original: xi = -1 is singular");
    if (p.xi < -1.0) throw domain_error("to_original: xi < -1 gives a negative scale");
    const double log_ratio = std::log(p.r / ctx.m);
    const double scale_u = p.nu / (1.0 + p.xi);
    return {ctx.u + scale_u * detail::expm1_over(log_ratio, p.xi),
            scale_u * std::exp(p.xi * log_ratio), p.xi};
}

/// Rescale GEV parameters from k1 blocks to k2 blocks (xi unchanged).
inline OriginalParams rescale_blocks(const OriginalParams& p, double k1, double k2) {
    detail::require_scale(k1, "k1");
    detail::require_scale(k2, "k2");
    detail::require_scale(p.sigma, "sigma");
    const double log_k = std::log(k2 / k1);
    // mu_k2 = mu_k1 - sigma/xi (1 - (k2/k1)^{-xi}); limit mu - sigma log(k2/k1)
    return {p.mu + p.sigma * detail::expm1_over(-log_k, p.xi),
            p.sigma * std::exp(-p.xi * log_k), p.xi};
}

/// Expected information of the Poisson-process likelihood in (r, nu, xi).
inline Eigen::Matrix3d fisher_information(const OrthogonalParams& p) {
    detail::require_scale(p.r, "r");
    detail::require_scale(p.nu, "nu");
    if (!(p.xi > -0.5))
        throw undefined_information_error("fisher_information: requires xi > -1/2");
    Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
    info(0, 0) = 1.0 / p.r;
    info(1, 1) = p.r / (p.nu * p.nu * (1.0 + 2.0 * p.xi));
    info(2, 2) = p.r / ((1.0 + p.xi) * (1.0 + p.xi));
    return info;
}

}  // namespace orthoev
