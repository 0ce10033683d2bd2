#pragma once

// Likelihoods and log-posterior targets for the Poisson-process and GPD models.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orthoev/chains.hpp"
#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"
#include "orthoev/priors.hpp"
#include "orthoev/rng.hpp"

namespace orthoev {

/// Exceedances x_1..x_{n_u} of threshold u, with scaling factor m.
struct ExceedanceData {
    double u = 0.0;
    double m = 1.0;
    std::vector<double> xs;

    std::size_t n_u() const { return xs.size(); }

    void validate() const {
        if (!std::isfinite(u)) throw domain_error("ExceedanceData: u must be finite");
        if (!(m > 0.0) || !std::isfinite(m)) throw domain_error("ExceedanceData: m must be > 0");
        if (xs.empty()) throw domain_error("ExceedanceData: at least one exceedance is required");
        for (double x : xs)
            if (!(x > u) || !std::isfinite(x))
                throw domain_error("ExceedanceData: every exceedance must be finite and > u");
    }
};

inline ExceedanceData make_exceedance_data(double u, double m, std::vector<double> xs) {
    ExceedanceData d{u, m, std::move(xs)};
    d.validate();
    return d;
}

enum class ModelKind { pp_original, pp_orthogonal, gpd_original, gpd_orthogonal };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::pp_original: return "pp_original";
        case ModelKind::pp_orthogonal: return "pp_orthogonal";
        case ModelKind::gpd_original: return "gpd_original";
        case ModelKind::gpd_orthogonal: return "gpd_orthogonal";
    }
    return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "pp_original") return ModelKind::pp_original;
    if (s == "pp_orthogonal") return ModelKind::pp_orthogonal;
    if (s == "gpd_original") return ModelKind::gpd_original;
    if (s == "gpd_orthogonal") return ModelKind::gpd_orthogonal;
    throw config_error("unknown model kind '" + s + "'");
}

inline bool is_poisson_process(ModelKind k) {
    return k == ModelKind::pp_original || k == ModelKind::pp_orthogonal;
}

/// How the scaling factor used for sampling relates to the data's m.
struct MOverride {
    enum class Kind { keep, set_to_nu_count, sharkey_interval, explicit_value };
    Kind kind = Kind::keep;
    double value = 0.0;  // used when kind = explicit_value

    static MOverride keep() { return {}; }
    static MOverride nu_count() { return {Kind::set_to_nu_count, 0.0}; }
    static MOverride sharkey() { return {Kind::sharkey_interval, 0.0}; }
    static MOverride explicit_m(double m) { return {Kind::explicit_value, m}; }
};

struct Parameterization {
    ModelKind kind = ModelKind::pp_orthogonal;
    MOverride m_override;
    std::optional<double> fixed_xi;  // pp_orthogonal only: sample (r, nu) with xi held fixed
    std::string label;               // display name; defaults to the kind

    std::string name() const {
        if (!label.empty()) return label;
        std::string s = to_string(kind);
        switch (m_override.kind) {
            case MOverride::Kind::keep: break;
            case MOverride::Kind::set_to_nu_count: s += "_m_nu"; break;
            case MOverride::Kind::sharkey_interval: s += "_m_sharkey"; break;
            case MOverride::Kind::explicit_value: s += "_m_" + std::to_string(m_override.value); break;
        }
        if (fixed_xi) s += "_fixed_xi";
        return s;
    }

    void validate() const {
        if (m_override.kind != MOverride::Kind::keep && kind != ModelKind::pp_original)
            throw config_error("m_override is only valid for pp_original");
        if (m_override.kind == MOverride::Kind::explicit_value &&
            !(m_override.value > 0.0 && std::isfinite(m_override.value)))
            throw config_error("explicit m_override must be > 0");
        if (fixed_xi && kind != ModelKind::pp_orthogonal)
            throw config_error("fixed_xi is only supported for pp_orthogonal");
        if (fixed_xi && !(*fixed_xi > -1.0 && std::isfinite(*fixed_xi)))
            throw config_error("fixed_xi must be finite and > -1");
    }
};

/// Per-coordinate monotone map from natural to unconstrained coordinates.
enum class CoordMap { identity, log };

// ---------------------------------------------------------------------------
// Likelihoods

/// Poisson-process log-likelihood in (mu, sigma, xi); -inf outside the support.
inline double pp_loglik_original(const OriginalParams& p, const ExceedanceData& d) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.mu) || !std::isfinite(p.xi)) return neg_inf;
    const double a_u = (d.u - p.mu) / p.sigma;
    if (!(1.0 + p.xi * a_u > 0.0)) return neg_inf;
    double ll = -d.m * std::exp(-detail::log1p_over(a_u, p.xi)) -
                static_cast<double>(d.n_u()) * std::log(p.sigma);
    for (double x : d.xs) {
        const double z = (x - p.mu) / p.sigma;
        const double t = 1.0 + p.xi * z;
        if (!(t > 0.0)) return neg_inf;
        // (1 + 1/xi) log t = log t + log(t)/xi
        ll -= std::log(t) + detail::log1p_over(z, p.xi);
    }
    return ll;
}

namespace detail {

/// Sum over exceedances of the GPD log density with scale st and shape xi.
inline double gpd_log_density_sum(double st, double xi, const ExceedanceData& d) {
    if (!(st > 0.0) || !std::isfinite(xi)) return neg_inf;
    double ll = -static_cast<double>(d.n_u()) * std::log(st);
    for (double x : d.xs) {
        const double z = (x - d.u) / st;
        const double t = 1.0 + xi * z;
        if (!(t > 0.0)) return neg_inf;
        ll -= std::log(t) + log1p_over(z, xi);
    }
    return ll;
}

}  // namespace detail

/// Poisson-process log-likelihood in (r, nu, xi):
/// -r + n log(r/m) + sum of GPD log densities with scale nu / (1 + xi).
inline double pp_loglik_orthogonal(const OrthogonalParams& p, const ExceedanceData& d) {
    if (!(p.r > 0.0) || !(p.nu > 0.0) || !(p.xi > -1.0) || !std::isfinite(p.xi)) return neg_inf;
    const double gpd = detail::gpd_log_density_sum(p.nu / (1.0 + p.xi), p.xi, d);
    if (gpd == neg_inf) return neg_inf;
    return -p.r + static_cast<double>(d.n_u()) * std::log(p.r / d.m) + gpd;
}

inline double gpd_loglik(const GpdParams& p, const ExceedanceData& d) {
    return detail::gpd_log_density_sum(p.sigma_tilde, p.xi, d);
}

/// GPD log-likelihood in the orthogonal coordinates (nu, xi) = (sigma (1 + xi), xi).
inline double gpd_loglik_orthogonal(double nu, double xi, const ExceedanceData& d) {
    if (!(nu > 0.0) || !(xi > -1.0)) return neg_inf;
    return detail::gpd_log_density_sum(nu / (1.0 + xi), xi, d);
}

// ---------------------------------------------------------------------------
// Log-posterior targets

using DensityFn = std::function<double(std::span<const double>)>;

/// A log-density on natural coordinates plus the unconstrained maps samplers use.
struct LogPosterior {
    Parameterization param;
    PriorSpec prior;
    std::vector<std::string> labels;
    std::vector<CoordMap> maps;
    ChainFamily family = ChainFamily::generic;
    ModelContext sampling_ctx;   // (u, m) the likelihood is evaluated at
    double m_reference = 1.0;    // data's m; draws are reported at this m
    std::shared_ptr<const ExceedanceData> data;
    DensityFn log_likelihood;
    DensityFn log_prior;

    std::size_t dimension() const { return labels.size(); }

    /// Log posterior at natural coordinates; -inf outside the support.
    double eval(std::span<const double> theta) const {
        if (theta.size() != dimension()) return neg_inf;
        const double lp = log_prior ? log_prior(theta) : 0.0;
        if (!(lp > neg_inf) || std::isnan(lp)) return neg_inf;
        const double ll = log_likelihood(theta);
        if (!(ll > neg_inf) || std::isnan(ll)) return neg_inf;
        return ll + lp;
    }
    double operator()(std::span<const double> theta) const { return eval(theta); }

    std::vector<double> to_unconstrained(std::span<const double> theta) const {
        std::vector<double> z(theta.begin(), theta.end());
        for (std::size_t k = 0; k < z.size(); ++k)
            if (maps[k] == CoordMap::log) z[k] = std::log(z[k]);
        return z;
    }

    std::vector<double> from_unconstrained(std::span<const double> z) const {
        std::vector<double> theta(z.begin(), z.end());
        for (std::size_t k = 0; k < theta.size(); ++k)
            if (maps[k] == CoordMap::log) theta[k] = std::exp(theta[k]);
        return theta;
    }

    /// Target in unconstrained coordinates, including the log-Jacobian of the maps.
    double eval_unconstrained(std::span<const double> z) const {
        const auto theta = from_unconstrained(z);
        double jac = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k)
            if (maps[k] == CoordMap::log) jac += z[k];
        const double v = eval(theta);
        return v == neg_inf ? neg_inf : v + jac;
    }

    /// Arbitrary target, used for testing samplers and diagnostics.
    static LogPosterior custom(std::vector<std::string> labels, std::vector<CoordMap> maps,
                               DensityFn fn) {
        LogPosterior lp;
        lp.labels = std::move(labels);
        lp.maps = std::move(maps);
        lp.log_likelihood = std::move(fn);
        lp.prior = PriorSpec::flat();
        return lp;
    }
};

/// Natural sampling coordinates of a parameterization.
inline std::vector<std::string> natural_labels(const Parameterization& param) {
    switch (param.kind) {
        case ModelKind::pp_original: return {"mu", "sigma", "xi"};
        case ModelKind::pp_orthogonal:
            return param.fixed_xi ? std::vector<std::string>{"r", "nu"}
                                  : std::vector<std::string>{"r", "nu", "xi"};
        case ModelKind::gpd_original: return {"sigma_tilde", "xi"};
        case ModelKind::gpd_orthogonal: return {"nu", "xi"};
    }
    return {};
}

inline std::vector<CoordMap> natural_maps(const Parameterization& param) {
    switch (param.kind) {
        case ModelKind::pp_original: return {CoordMap::identity, CoordMap::log, CoordMap::identity};
        case ModelKind::pp_orthogonal:
            return param.fixed_xi ? std::vector<CoordMap>{CoordMap::log, CoordMap::log}
                                  : std::vector<CoordMap>{CoordMap::log, CoordMap::log, CoordMap::identity};
        case ModelKind::gpd_original:
        case ModelKind::gpd_orthogonal: return {CoordMap::log, CoordMap::identity};
    }
    return {};
}

/// Scaling factor used by the likelihood. sharkey_interval must already be
/// resolved to an explicit value (see simgen::resolve_parameterization).
inline double sampling_m(const Parameterization& param, const ExceedanceData& d) {
    switch (param.m_override.kind) {
        case MOverride::Kind::keep: return d.m;
        case MOverride::Kind::set_to_nu_count: return static_cast<double>(d.n_u());
        case MOverride::Kind::explicit_value: return param.m_override.value;
        case MOverride::Kind::sharkey_interval:
            throw config_error("sharkey_interval m_override must be resolved before building the target");
    }
    return d.m;
}

namespace detail {

inline OrthogonalParams orthogonal_from(const Parameterization& param, std::span<const double> t) {
    return param.fixed_xi ? OrthogonalParams{t[0], t[1], *param.fixed_xi}
                          : OrthogonalParams{t[0], t[1], t[2]};
}

inline DensityFn make_log_prior(const Parameterization& param, const PriorSpec& prior,
                                ModelContext ctx) {
    const auto incompatible = [&]() {
        return config_error("prior " + to_string(prior.kind) + " is incompatible with " +
                            to_string(param.kind));
    };
    switch (prior.kind) {
        case PriorKind::flat:
            return [](std::span<const double>) { return 0.0; };
        case PriorKind::jeffreys_orthogonal:
            if (param.kind == ModelKind::pp_orthogonal)
                return [param](std::span<const double> t) {
                    return log_jeffreys_orthogonal(orthogonal_from(param, t));
                };
            if (param.kind == ModelKind::gpd_orthogonal)
                return [](std::span<const double> t) { return log_jeffreys_gpd_orthogonal(t[0], t[1]); };
            throw incompatible();
        case PriorKind::jeffreys_original:
            if (param.kind == ModelKind::pp_original)
                return [ctx](std::span<const double> t) {
                    return log_jeffreys_original({t[0], t[1], t[2]}, ctx);
                };
            if (param.kind == ModelKind::gpd_original)
                return [](std::span<const double> t) { return log_jeffreys_gpd_original(t[0], t[1]); };
            throw incompatible();
        case PriorKind::pc_composite: {
            const PcPriorConfig cfg = *prior.pc;
            switch (param.kind) {
                case ModelKind::pp_orthogonal:
                    return [param, cfg](std::span<const double> t) {
                        return log_pc_composite(orthogonal_from(param, t), cfg);
                    };
                case ModelKind::gpd_orthogonal:
                    return [cfg](std::span<const double> t) {
                        return t[0] > 0.0 ? pc_log_density(t[1], cfg) - std::log(t[0]) : neg_inf;
                    };
                case ModelKind::pp_original:
                    // pushforward of p_PC(xi)/nu: log|d(r,nu)/d(mu,sigma)| = log(1+xi) - log(sigma) + log(r)
                    return [cfg, ctx](std::span<const double> t) {
                        const OriginalParams p{t[0], t[1], t[2]};
                        if (!(p.sigma > 0.0) || !(p.xi > -1.0)) return neg_inf;
                        const double a = (ctx.u - p.mu) / p.sigma;
                        if (!(1.0 + p.xi * a > 0.0)) return neg_inf;
                        const double log_r = std::log(ctx.m) - log1p_over(a, p.xi);
                        const double nu = (1.0 + p.xi) * (p.sigma + p.xi * (ctx.u - p.mu));
                        if (!(nu > 0.0)) return neg_inf;
                        return pc_log_density(p.xi, cfg) - std::log(nu) + std::log1p(p.xi) -
                               std::log(p.sigma) + log_r;
                    };
                case ModelKind::gpd_original:
                    // nu = sigma (1 + xi): p_PC(xi) / (sigma (1+xi)) * (1+xi)
                    return [cfg](std::span<const double> t) {
                        return t[0] > 0.0 ? pc_log_density(t[1], cfg) - std::log(t[0]) : neg_inf;
                    };
            }
            throw incompatible();
        }
    }
    throw incompatible();
}

}  // namespace detail

/// Log-likelihood + log-prior in the parameterization's natural coordinates.
/// For pp_original with an m_override, the likelihood is evaluated at the
/// sampling m; m_reference keeps the data's m so draws can be rescaled back.
inline LogPosterior build_log_posterior(const Parameterization& param, const PriorSpec& prior,
                                        const ExceedanceData& d) {
    param.validate();
    prior.validate();
    d.validate();
    LogPosterior lp;
    lp.param = param;
    lp.prior = prior;
    lp.labels = natural_labels(param);
    lp.maps = natural_maps(param);
    lp.family = is_poisson_process(param.kind) ? ChainFamily::poisson_process : ChainFamily::gpd;
    lp.m_reference = d.m;
    lp.sampling_ctx = {d.u, sampling_m(param, d)};
    auto data = std::make_shared<ExceedanceData>(d);
    data->m = lp.sampling_ctx.m;
    lp.data = data;

    switch (param.kind) {
        case ModelKind::pp_original:
            lp.log_likelihood = [data](std::span<const double> t) {
                return pp_loglik_original({t[0], t[1], t[2]}, *data);
            };
            break;
        case ModelKind::pp_orthogonal:
            lp.log_likelihood = [data, param](std::span<const double> t) {
                return pp_loglik_orthogonal(detail::orthogonal_from(param, t), *data);
            };
            break;
        case ModelKind::gpd_original:
            lp.log_likelihood = [data](std::span<const double> t) {
                return gpd_loglik({t[0], t[1]}, *data);
            };
            break;
        case ModelKind::gpd_orthogonal:
            lp.log_likelihood = [data](std::span<const double> t) {
                return gpd_loglik_orthogonal(t[0], t[1], *data);
            };
            break;
    }
    lp.log_prior = detail::make_log_prior(param, prior, lp.sampling_ctx);
    return lp;
}

/// One draw from the posterior predictive of a new exceedance above ctx.u:
/// pick a retained draw uniformly, then sample GPD(sigma_tilde, xi).
template <class Rng>
double posterior_predictive_draw(const ChainSet& chains, const ModelContext& ctx, Rng& rng) {
    if (chains.empty()) throw domain_error("posterior_predictive_draw: empty chain set");
    const std::size_t c = draw_index(rng, chains.n_chains);
    const std::size_t i = draw_index(rng, chains.n_draws);
    GpdParams g;
    switch (chains.family) {
        case ChainFamily::poisson_process:
            g = gpd_scale_at_threshold({chains.value(c, i, 0), chains.value(c, i, 1), chains.value(c, i, 2)},
                                       ctx.u);
            break;
        case ChainFamily::gpd: g = {chains.value(c, i, 0), chains.value(c, i, 1)}; break;
        case ChainFamily::generic:
            throw domain_error("posterior_predictive_draw: chains carry no model family");
    }
    return ctx.u + gpd_quantile(draw_open_uniform(rng), g);
}

}  // namespace orthoev
