#pragma once

// Synthetic Poisson-process data, scaling-factor tuning and maximum likelihood.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"
#include "orthoev/model.hpp"
#include "orthoev/optimize.hpp"
#include "orthoev/rng.hpp"

namespace orthoev {

struct GeneratorSpec {
    double m = 1.0;
    double u = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
    std::uint64_t seed = 1;

    OriginalParams params() const { return {mu, sigma, xi}; }
    ModelContext context() const { return {u, m}; }

    void validate() const {
        if (!(sigma > 0.0) || !(m > 0.0)) throw config_error("GeneratorSpec: sigma and m must be > 0");
        if (!std::isfinite(u) || !std::isfinite(mu) || !std::isfinite(xi))
            throw config_error("GeneratorSpec: u, mu, xi must be finite");
        if (!(1.0 + xi * (u - mu) / sigma > 0.0))
            throw config_error("GeneratorSpec: u lies outside the GEV support");
        if (!(sigma + xi * (u - mu) > 0.0))
            throw config_error("GeneratorSpec: GPD scale at u must be > 0");
    }

    /// Expected number of exceedances of u.
    double intensity() const { return to_orthogonal(params(), context()).r; }
};

struct GenerateResult {
    ExceedanceData data;
    std::size_t regenerations = 0;  // realizations with n_u = 0 that were redrawn
    double intensity = 0.0;
    bool low_intensity = false;     // intensity < 0.5
    std::vector<std::string> warnings;
};

inline constexpr double low_intensity_threshold = 0.5;
inline constexpr std::size_t max_regenerations = 100000;

/// n_u ~ Poisson(r), then n_u GPD(sigma + xi (u - mu), xi) excesses above u.
template <class Rng>
GenerateResult generate(const GeneratorSpec& spec, Rng& rng) {
    spec.validate();
    GenerateResult out;
    out.intensity = spec.intensity();
    if (out.intensity < low_intensity_threshold) {
        out.low_intensity = true;
        out.warnings.push_back("expected exceedance count " + std::to_string(out.intensity) +
                               " < 0.5: empty realizations are frequent");
    }
    const GpdParams g = gpd_scale_at_threshold(spec.params(), spec.u);
    std::uint64_t n = 0;
    while ((n = draw_poisson(rng, out.intensity)) == 0) {
        if (++out.regenerations > max_regenerations)
            throw config_error("generate: no exceedances after repeated regeneration");
    }
    out.data.u = spec.u;
    out.data.m = spec.m;
    out.data.xs.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        double x = spec.u + gpd_quantile(draw_open_uniform(rng), g);
        if (!(x > spec.u)) x = std::nextafter(spec.u, std::numeric_limits<double>::infinity());
        out.data.xs.push_back(x);
    }
    return out;
}

inline GenerateResult generate(const GeneratorSpec& spec) {
    Engine rng = make_engine(spec.seed);
    return generate(spec, rng);
}

// ---------------------------------------------------------------------------
// Scaling-factor tuning

struct AcovOffdiag {
    double mu_sigma = 0.0;
    double mu_xi = 0.0;
    double sigma_xi = 0.0;
};

namespace detail {

/// Bracket of ACov_{mu,sigma}; its sign is the sign of the covariance.
inline double acov_mu_sigma_bracket(double x, double xi) {
    return xi * xi * xi + (1.0 + xi) * (1.0 + 2.0 * xi + xi * (1.0 + xi) * x * x -
                                        (1.0 + 3.0 * xi) * x +
                                        std::exp(-xi * x) * (1.0 + 2.0 * xi) * (x - 1.0));
}

inline double acov_mu_xi_bracket(double x, double xi) {
    return xi * (1.0 + xi) * x + (1.0 + 2.0 * xi) * std::expm1(-xi * x);
}

}  // namespace detail

/// Off-diagonal asymptotic covariances of (mu, sigma, xi) as functions of
/// x = log(r/m). The prefactor is exp(-x) / m (the inverse of the diagonal
/// information in orthogonal coordinates scales with 1/r).
inline AcovOffdiag acov_offdiag(double x, double sigma, double xi, double m) {
    if (!(xi > -0.5)) throw undefined_information_error("acov_offdiag: requires xi > -1/2");
    if (detail::is_gumbel(xi)) throw domain_error("acov_offdiag: xi = 0 is excluded");
    detail::require_scale(sigma, "sigma");
    detail::require_scale(m, "m");
    detail::require_finite(x, "x");
    const double pre = std::exp(-x) / m;
    AcovOffdiag a;
    a.mu_sigma = sigma * sigma / (xi * xi) * pre * detail::acov_mu_sigma_bracket(x, xi);
    a.mu_xi = sigma / (xi * xi) * pre * (1.0 + xi) * detail::acov_mu_xi_bracket(x, xi);
    a.sigma_xi = sigma * pre * (1.0 + xi) * ((1.0 + xi) * x - 1.0);
    return a;
}

struct SharkeyResult {
    double m1 = 0.0;        // from x1 = 1/(1+xi), root of ACov_{sigma,xi}
    double m2 = 0.0;        // from x2, root of ACov_{mu,sigma}
    double chosen_m = 0.0;  // midpoint of [m1, m2]
    double xi_hat = 0.0;
    double x1 = 0.0;
    std::optional<double> x2;
    std::vector<double> x2_roots;  // every sign change found on the scan
    bool multiple_roots = false;
    bool positive_root = false;    // chosen x2 > 0
    bool fallback = false;         // no root for x2: chosen_m = n_u
    AcovOffdiag acov_at_roots;     // sigma_xi at x1, mu_sigma at x2 (sigma = 1, m = 1)
};

inline constexpr double sharkey_scan_lo = -20.0;
inline constexpr double sharkey_scan_hi = 20.0;
inline constexpr int sharkey_scan_points = 8001;

/// Every root of ACov_{mu,sigma}(x) on [-20, 20], ascending.
inline std::vector<double> acov_mu_sigma_roots(double xi) {
    const auto h = [xi](double x) { return detail::acov_mu_sigma_bracket(x, xi); };
    std::vector<double> roots;
    const double step = (sharkey_scan_hi - sharkey_scan_lo) / (sharkey_scan_points - 1);
    double a = sharkey_scan_lo;
    double fa = h(a);
    for (int i = 1; i < sharkey_scan_points; ++i) {
        const double b = sharkey_scan_lo + i * step;
        const double fb = h(b);
        if (fa == 0.0) {
            roots.push_back(a);
        } else if (fa * fb < 0.0) {
            boost::uintmax_t iters = 200;
            const auto tol = boost::math::tools::eps_tolerance<double>(52);
            const auto br = boost::math::tools::toms748_solve(h, a, b, fa, fb, tol, iters);
            roots.push_back(0.5 * (br.first + br.second));
        }
        a = b;
        fa = fb;
    }
    return roots;
}

/// Scaling factor interval for pp_original from the roots x1, x2 of the
/// asymptotic covariances, with m = n_u exp(-x).
inline SharkeyResult tune_m(const ExceedanceData& d, double xi_hat) {
    if (!(xi_hat > -0.5)) throw undefined_information_error("tune_m: requires xi_hat > -1/2");
    d.validate();
    SharkeyResult res;
    res.xi_hat = xi_hat;
    double xi = xi_hat;
    if (std::abs(xi) < 1e-4) xi = xi < 0.0 ? -1e-4 : 1e-4;
    const double n_u = static_cast<double>(d.n_u());

    res.x1 = 1.0 / (1.0 + xi);
    res.m1 = n_u * std::exp(-res.x1);
    res.acov_at_roots.sigma_xi = acov_offdiag(res.x1, 1.0, xi, 1.0).sigma_xi;

    res.x2_roots = acov_mu_sigma_roots(xi);
    res.multiple_roots = res.x2_roots.size() > 1;
    if (res.x2_roots.empty()) {
        res.fallback = true;
        res.m2 = n_u;
        res.chosen_m = n_u;
        return res;
    }
    const double x2 = *std::min_element(res.x2_roots.begin(), res.x2_roots.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
    res.x2 = x2;
    res.positive_root = x2 > 0.0;
    res.m2 = n_u * std::exp(-x2);
    res.acov_at_roots.mu_sigma = acov_offdiag(x2, 1.0, xi, 1.0).mu_sigma;
    res.chosen_m = 0.5 * (res.m1 + res.m2);
    return res;
}

/// The m = n_u rule.
inline double wadsworth_m(const ExceedanceData& d) { return static_cast<double>(d.n_u()); }

// ---------------------------------------------------------------------------
// Maximum likelihood

struct MlFit {
    std::vector<double> theta;  // natural coordinates of the parameterization
    std::vector<std::string> labels;
    double loglik = neg_inf;
    bool converged = false;
    std::size_t starts_finite = 0;
};

namespace detail {

inline std::vector<double> ml_start(const Parameterization& param, const ExceedanceData& d,
                                    double m_sampling, double xi, double st) {
    const double n_u = static_cast<double>(d.n_u());
    switch (param.kind) {
        case ModelKind::gpd_original: return {st, xi};
        case ModelKind::gpd_orthogonal: return {st * (1.0 + xi), xi};
        case ModelKind::pp_orthogonal: return {n_u, st * (1.0 + xi), xi};
        case ModelKind::pp_original: {
            const OriginalParams p = to_original({n_u, st * (1.0 + xi), xi}, {d.u, m_sampling});
            return {p.mu, p.sigma, p.xi};
        }
    }
    return {};
}

}  // namespace detail

/// Multistart Nelder-Mead on the log-likelihood in unconstrained coordinates.
/// sharkey_interval overrides must be resolved first (resolve_parameterization).
/// For pp_orthogonal, r is profiled exactly at n_u.
inline MlFit ml_fit(const Parameterization& param, const ExceedanceData& d) {
    if (d.n_u() < 3) throw fit_error("ml_fit: at least 3 exceedances are required");
    const LogPosterior lp = build_log_posterior(param, PriorSpec::flat(), d);
    const double n_u = static_cast<double>(d.n_u());

    std::vector<double> ys(d.xs.size());
    std::transform(d.xs.begin(), d.xs.end(), ys.begin(), [&](double x) { return x - d.u; });
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n_u;
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    var /= std::max(1.0, n_u - 1.0);
    const double y_max = *std::max_element(ys.begin(), ys.end());
    double xi_mom = var > 0.0 ? 0.5 * (1.0 - mean * mean / var) : 0.0;
    xi_mom = std::clamp(xi_mom, -0.45, 0.9);

    const bool profile_r = param.kind == ModelKind::pp_orthogonal;
    const std::size_t skip = profile_r ? 1 : 0;
    const std::size_t dim = lp.dimension();

    // optimize over coordinates [skip, dim), unconstrained
    const auto full_theta = [&](const std::vector<double>& z) {
        std::vector<double> zz(dim);
        if (profile_r) zz[0] = std::log(n_u);
        std::copy(z.begin(), z.end(), zz.begin() + skip);
        return lp.from_unconstrained(zz);
    };
    const std::function<double(const std::vector<double>&)> objective =
        [&](const std::vector<double>& z) { return -lp.log_likelihood(full_theta(z)); };

    MlFit best;
    best.labels = lp.labels;
    const double xis[] = {xi_mom, -0.3, 0.0, 0.3, 0.6};
    for (double xi0 : xis) {
        if (param.fixed_xi) xi0 = *param.fixed_xi;
        double st = mean * (1.0 - xi0);
        if (xi0 < 0.0) st = std::max(st, -xi0 * y_max * 1.05);
        if (!(st > 0.0)) st = std::max(mean, 1e-8);
        std::vector<double> start = detail::ml_start(param, d, lp.sampling_ctx.m, xi0, st);
        if (param.fixed_xi) start.pop_back();
        const std::vector<double> z_full = lp.to_unconstrained(start);
        std::vector<double> z0(z_full.begin() + skip, z_full.end());
        if (!std::isfinite(objective(z0))) continue;
        ++best.starts_finite;
        const NelderMeadResult nm = nelder_mead(objective, z0);
        const double ll = -nm.value;
        if (std::isfinite(ll) && ll > best.loglik) {
            best.loglik = ll;
            best.theta = full_theta(nm.x);
            best.converged = nm.converged;
        }
        if (param.fixed_xi) break;
    }
    if (best.theta.empty()) throw fit_error("ml_fit: every start gave a non-finite likelihood");
    if (profile_r) best.theta[0] = n_u;
    return best;
}

/// Shape estimate used for tuning: ml_fit on the gpd_orthogonal model.
inline double preliminary_xi(const ExceedanceData& d) {
    Parameterization p;
    p.kind = ModelKind::gpd_orthogonal;
    return ml_fit(p, d).theta[1];
}

/// Replace a sharkey_interval override by the explicit chosen m.
inline Parameterization resolve_parameterization(const Parameterization& param,
                                                 const ExceedanceData& d,
                                                 SharkeyResult* info = nullptr) {
    if (param.m_override.kind != MOverride::Kind::sharkey_interval) return param;
    const double xi_hat = std::max(preliminary_xi(d), -0.49);
    const SharkeyResult res = tune_m(d, xi_hat);
    if (info) *info = res;
    Parameterization out = param;
    if (out.label.empty()) out.label = param.name();
    out.m_override = MOverride::explicit_m(res.chosen_m);
    return out;
}

}  // namespace orthoev
