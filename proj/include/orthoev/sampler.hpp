#pragma once

// Multi-chain adaptive random-walk Metropolis-Hastings.
//
// Each chain walks in the unconstrained coordinates of its LogPosterior with
// independent Gaussian increments per coordinate and one joint accept/reject.
// During burn-in a global log-scale follows Robbins-Monro toward the target
// acceptance; at mid burn-in the per-coordinate scales are reset to the
// sample SDs of the second burn-in quarter. Scales are frozen afterwards.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "orthoev/chains.hpp"
#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"
#include "orthoev/model.hpp"
#include "orthoev/rng.hpp"
#include "orthoev/simgen.hpp"

namespace orthoev {

enum class InitKind { ml_jitter, explicit_values };

struct SamplerConfig {
    std::size_t n_chains = 4;
    std::size_t n_draws = 1000;
    std::size_t n_burnin = 1000;
    double target_accept = 0.234;
    std::uint64_t seed = 1;
    InitKind init = InitKind::ml_jitter;
    std::vector<double> init_values;  // natural coordinates, for explicit_values
    double jitter = 0.1;
    bool parallel = false;

    void validate() const {
        if (n_chains < 1 || n_draws < 1 || n_burnin < 1)
            throw config_error("SamplerConfig: n_chains, n_draws and n_burnin must be >= 1");
        if (!(target_accept > 0.0 && target_accept < 1.0))
            throw config_error("SamplerConfig: target_accept must lie in (0, 1)");
        if (!(jitter >= 0.0)) throw config_error("SamplerConfig: jitter must be >= 0");
    }
};

inline constexpr std::size_t max_init_attempts = 100;

namespace detail {

struct ChainOutput {
    std::vector<double> draws;  // n_draws x d, natural coordinates
    double acceptance = 0.0;
    std::vector<double> scales;
};

/// Per-coordinate step sizes from the diagonal curvature of the target.
inline std::vector<double> curvature_scales(const LogPosterior& target, const std::vector<double>& z) {
    const std::size_t d = z.size();
    std::vector<double> s(d);
    const double f0 = target.eval_unconstrained(z);
    for (std::size_t k = 0; k < d; ++k) {
        const double h = 1e-4 * std::max(1.0, std::abs(z[k]));
        std::vector<double> zp = z, zm = z;
        zp[k] += h;
        zm[k] -= h;
        const double c = (target.eval_unconstrained(zp) - 2.0 * f0 + target.eval_unconstrained(zm)) / (h * h);
        s[k] = (std::isfinite(c) && c < 0.0) ? 1.0 / std::sqrt(-c) : 0.1 * std::max(1.0, std::abs(z[k]));
    }
    return s;
}

template <class Rng>
std::vector<double> jittered_start(const LogPosterior& target, const std::vector<double>& center,
                                   double jitter, Rng& rng) {
    for (std::size_t attempt = 0; attempt < max_init_attempts; ++attempt) {
        std::vector<double> theta = center;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double z = draw_normal(rng);
            if (target.maps[k] == CoordMap::log)
                theta[k] *= std::exp(jitter * z);
            else
                theta[k] += jitter * std::max(std::abs(theta[k]), 0.1) * z;
        }
        if (std::isfinite(target.eval(theta))) return theta;
    }
    throw init_error("run_chains: no finite starting point after " +
                     std::to_string(max_init_attempts) + " jitters");
}

inline std::vector<double> default_center(const LogPosterior& target) {
    if (target.data) {
        try {
            MlFit fit = ml_fit(target.param, *target.data);
            if (target.eval(fit.theta) > neg_inf) return fit.theta;
        } catch (const fit_error&) {
        }
    }
    std::vector<double> theta(target.dimension());
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = target.maps[k] == CoordMap::log ? 1.0 : 0.0;
    if (target.data && target.dimension() >= 2) {
        // crude moment start in natural coordinates
        const ExceedanceData& d = *target.data;
        double mean = 0.0;
        for (double x : d.xs) mean += x - d.u;
        mean /= static_cast<double>(d.n_u());
        const double n_u = static_cast<double>(d.n_u());
        const double y_max = *std::max_element(d.xs.begin(), d.xs.end()) - d.u;
        const double st = std::max(mean, y_max * 0.5);
        switch (target.param.kind) {
            case ModelKind::gpd_original: theta = {st, 0.0}; break;
            case ModelKind::gpd_orthogonal: theta = {st, 0.0}; break;
            case ModelKind::pp_orthogonal:
                theta = target.param.fixed_xi ? std::vector<double>{n_u, st}
                                              : std::vector<double>{n_u, st, 0.0};
                break;
            case ModelKind::pp_original: {
                const OriginalParams p = to_original({n_u, st, 0.0}, target.sampling_ctx);
                theta = {p.mu, p.sigma, p.xi};
                break;
            }
        }
    }
    return theta;
}

template <class Rng>
ChainOutput run_one_chain(const LogPosterior& target, const SamplerConfig& cfg,
                          const std::vector<double>& center, Rng& rng) {
    const std::size_t d = target.dimension();
    const std::vector<double> theta0 = jittered_start(target, center, cfg.jitter, rng);
    std::vector<double> z = target.to_unconstrained(theta0);
    double fz = target.eval_unconstrained(z);
    // Per-coordinate scales from the curvature at the common center; only the
    // global factor adapts, and is averaged over the second half of burn-in.
    const std::vector<double> zc = target.to_unconstrained(center);
    std::vector<double> scales =
        std::isfinite(target.eval_unconstrained(zc)) ? curvature_scales(target, zc) : curvature_scales(target, z);
    double log_g = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    const std::size_t n = cfg.n_burnin;
    const std::size_t avg_from = n / 2;
    double log_g_sum = 0.0;
    std::size_t log_g_n = 0;

    std::vector<double> proposal(d);
    const auto step = [&](double g) {
        for (std::size_t k = 0; k < d; ++k) proposal[k] = z[k] + g * scales[k] * draw_normal(rng);
        const double fp = target.eval_unconstrained(proposal);
        const double log_alpha = fp - fz;
        const double u = draw_open_uniform(rng);
        const double alpha = std::isfinite(fp) ? std::min(1.0, std::exp(log_alpha)) : 0.0;
        if (std::isfinite(fp) && std::log(u) < log_alpha) {
            z = proposal;
            fz = fp;
            return std::pair{true, alpha};
        }
        return std::pair{false, alpha};
    };

    for (std::size_t t = 0; t < n; ++t) {
        const double alpha = step(std::exp(log_g)).second;
        log_g += std::pow(static_cast<double>(t + 1), -0.6) * (alpha - cfg.target_accept);
        if (t >= avg_from) {
            log_g_sum += log_g;
            ++log_g_n;
        }
    }
    if (log_g_n > 0) log_g = log_g_sum / static_cast<double>(log_g_n);

    ChainOutput out;
    out.draws.reserve(cfg.n_draws * d);
    const double g = std::exp(log_g);
    std::size_t n_acc = 0;
    for (std::size_t i = 0; i < cfg.n_draws; ++i) {
        if (step(g).first) ++n_acc;
        const auto theta = target.from_unconstrained(z);
        out.draws.insert(out.draws.end(), theta.begin(), theta.end());
    }
    out.acceptance = static_cast<double>(n_acc) / static_cast<double>(cfg.n_draws);
    out.scales.resize(d);
    for (std::size_t k = 0; k < d; ++k) out.scales[k] = g * scales[k];
    return out;
}

}  // namespace detail

/// Run cfg.n_chains chains on target. The result holds the draws in the
/// target's natural coordinates (draws and raw_draws coincide); see
/// transform_chains for the mapping to reference coordinates.
inline ChainSet run_chains(const LogPosterior& target, const SamplerConfig& cfg) {
    cfg.validate();
    const std::size_t d = target.dimension();
    if (d == 0) throw config_error("run_chains: target has no coordinates");
    std::vector<double> center;
    if (cfg.init == InitKind::explicit_values) {
        if (cfg.init_values.size() != d) throw config_error("run_chains: init_values has the wrong length");
        center = cfg.init_values;
    } else {
        center = detail::default_center(target);
    }

    std::vector<detail::ChainOutput> outs(cfg.n_chains);
    std::vector<std::uint64_t> seeds(cfg.n_chains);
    for (std::size_t c = 0; c < cfg.n_chains; ++c) seeds[c] = derive_seed(cfg.seed, c);
    const auto run = [&](std::size_t c) {
        Engine rng(seeds[c]);
        return detail::run_one_chain(target, cfg, center, rng);
    };
    if (cfg.parallel && cfg.n_chains > 1) {
        std::vector<std::future<detail::ChainOutput>> futs;
        for (std::size_t c = 0; c < cfg.n_chains; ++c) futs.push_back(std::async(std::launch::async, run, c));
        for (std::size_t c = 0; c < cfg.n_chains; ++c) outs[c] = futs[c].get();
    } else {
        for (std::size_t c = 0; c < cfg.n_chains; ++c) outs[c] = run(c);
    }

    ChainSet cs;
    cs.n_chains = cfg.n_chains;
    cs.n_draws = cfg.n_draws;
    cs.labels = target.labels;
    cs.raw_labels = target.labels;
    cs.seeds = seeds;
    cs.family = ChainFamily::generic;
    cs.reference = target.sampling_ctx;
    cs.m_sampling = target.sampling_ctx.m;
    cs.raw_draws.reserve(cfg.n_chains * cfg.n_draws * d);
    for (auto& o : outs) {
        cs.raw_draws.insert(cs.raw_draws.end(), o.draws.begin(), o.draws.end());
        cs.acceptance_rates.push_back(o.acceptance);
        cs.proposal_scales.push_back(o.scales);
    }
    cs.draws = cs.raw_draws;
    return cs;
}

inline std::vector<std::string> reference_labels(ModelKind kind) {
    return is_poisson_process(kind) ? std::vector<std::string>{"mu", "sigma", "xi"}
                                    : std::vector<std::string>{"sigma_tilde", "xi"};
}

/// Map sampled draws to the reference coordinates: (mu, sigma, xi) at the
/// reference m for Poisson-process models, (sigma_tilde, xi) for GPD models.
/// A draw index that cannot be mapped in any chain is dropped from every
/// chain (keeps chains aligned) and recorded in excluded_draws.
inline ChainSet transform_chains(const ChainSet& raw, const Parameterization& param,
                                 const ModelContext& ctx) {
    const auto expected = natural_labels(param);
    if (raw.raw_labels != expected)
        throw config_error("transform_chains: chain labels do not match " + param.name());
    const std::size_t rd = raw.raw_dim();
    const auto labels = reference_labels(param.kind);
    const std::size_t d = labels.size();

    const auto map_draw = [&](const double* t, double* out) {
        switch (param.kind) {
            case ModelKind::pp_original: {
                OriginalParams p{t[0], t[1], t[2]};
                if (raw.m_sampling != ctx.m) p = rescale_blocks(p, raw.m_sampling, ctx.m);
                out[0] = p.mu;
                out[1] = p.sigma;
                out[2] = p.xi;
                break;
            }
            case ModelKind::pp_orthogonal: {
                const OrthogonalParams q = param.fixed_xi ? OrthogonalParams{t[0], t[1], *param.fixed_xi}
                                                          : OrthogonalParams{t[0], t[1], t[2]};
                const OriginalParams p = to_original(q, ctx);
                out[0] = p.mu;
                out[1] = p.sigma;
                out[2] = p.xi;
                break;
            }
            case ModelKind::gpd_original:
                out[0] = t[0];
                out[1] = t[1];
                break;
            case ModelKind::gpd_orthogonal:
                if (t[1] == -1.0) throw singularity_error("transform_chains: xi = -1");
                out[0] = t[0] / (1.0 + t[1]);
                out[1] = t[1];
                break;
        }
        for (std::size_t k = 0; k < d; ++k)
            if (!std::isfinite(out[k])) throw domain_error("transform_chains: non-finite result");
    };

    std::vector<double> mapped(raw.n_chains * raw.n_draws * d);
    std::vector<char> bad(raw.n_draws, 0);
    for (std::size_t c = 0; c < raw.n_chains; ++c)
        for (std::size_t i = 0; i < raw.n_draws; ++i) {
            try {
                map_draw(&raw.raw_draws[(c * raw.n_draws + i) * rd], &mapped[(c * raw.n_draws + i) * d]);
            } catch (const domain_error&) {
                bad[i] = 1;
            }
        }

    ChainSet out = raw;
    out.labels = labels;
    out.family = is_poisson_process(param.kind) ? ChainFamily::poisson_process : ChainFamily::gpd;
    out.reference = ctx;
    out.excluded_draws.clear();
    for (std::size_t i = 0; i < raw.n_draws; ++i)
        if (bad[i]) out.excluded_draws.push_back(i);
    out.n_draws = raw.n_draws - out.excluded_draws.size();
    out.draws.clear();
    out.raw_draws.clear();
    out.draws.reserve(raw.n_chains * out.n_draws * d);
    out.raw_draws.reserve(raw.n_chains * out.n_draws * rd);
    for (std::size_t c = 0; c < raw.n_chains; ++c)
        for (std::size_t i = 0; i < raw.n_draws; ++i) {
            if (bad[i]) continue;
            const double* m = &mapped[(c * raw.n_draws + i) * d];
            const double* r = &raw.raw_draws[(c * raw.n_draws + i) * rd];
            out.draws.insert(out.draws.end(), m, m + d);
            out.raw_draws.insert(out.raw_draws.end(), r, r + rd);
        }
    return out;
}

struct PosteriorRun {
    ChainSet chains;                     // reference coordinates
    Parameterization resolved;           // sharkey_interval replaced by its chosen m
    std::optional<SharkeyResult> sharkey;
};

/// Resolve the parameterization, build the target, sample and transform.
inline PosteriorRun sample_posterior(const Parameterization& param, const PriorSpec& prior,
                                     const ExceedanceData& d, const SamplerConfig& cfg) {
    PosteriorRun run;
    SharkeyResult info;
    run.resolved = resolve_parameterization(param, d, &info);
    if (param.m_override.kind == MOverride::Kind::sharkey_interval) run.sharkey = info;
    const LogPosterior target = build_log_posterior(run.resolved, prior, d);
    const ChainSet raw = run_chains(target, cfg);
    run.chains = transform_chains(raw, run.resolved, {d.u, d.m});
    return run;
}

}  // namespace orthoev
