#pragma once

// Posterior summaries, return levels, propriety checks and the MSE study.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "orthoev/chains.hpp"
#include "orthoev/diagnostics.hpp"
#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"
#include "orthoev/model.hpp"
#include "orthoev/priors.hpp"
#include "orthoev/rng.hpp"
#include "orthoev/sampler.hpp"
#include "orthoev/simgen.hpp"

namespace orthoev {

/// Linear-interpolation (type 7) quantile of sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw domain_error("sorted_quantile: no values");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// ---------------------------------------------------------------------------
// Return levels

/// Level exceeded on average once every T periods by the GEV(mu, sigma, xi)
/// maximum of one period: mu + sigma ((-log(1 - 1/T))^{-xi} - 1) / xi.
inline double return_level(const OriginalParams& p, double T) {
    if (!(T > 1.0)) throw domain_error("return_level: T must be > 1");
    detail::require_scale(p.sigma, "sigma");
    const double y = -std::log1p(-1.0 / T);
    return p.mu + p.sigma * detail::expm1_over(-std::log(y), p.xi);
}

struct ReturnLevelCurve {
    std::vector<double> periods;
    std::vector<double> mean;
    std::vector<double> lo;   // 2.5% posterior quantile
    std::vector<double> hi;   // 97.5% posterior quantile
    std::vector<double> relative_width;
    std::size_t excluded = 0;  // draws where the level is undefined
    bool excluded_warning = false;
};

/// Pointwise posterior mean and 95% band of the return level. Chains must
/// hold (mu, sigma, xi) scaled to one block per period.
inline ReturnLevelCurve return_level_curve(const ChainSet& chains, const std::vector<double>& periods) {
    if (chains.empty()) throw domain_error("return_level_curve: empty chain set");
    if (chains.family != ChainFamily::poisson_process)
        throw domain_error("return_level_curve: chains must hold (mu, sigma, xi)");
    ReturnLevelCurve out;
    out.periods = periods;
    const std::size_t total = chains.n_chains * chains.n_draws;
    std::vector<std::vector<double>> levels(periods.size());
    for (std::size_t c = 0; c < chains.n_chains; ++c)
        for (std::size_t i = 0; i < chains.n_draws; ++i) {
            const OriginalParams p{chains.value(c, i, 0), chains.value(c, i, 1), chains.value(c, i, 2)};
            std::vector<double> row(periods.size());
            bool ok = p.sigma > 0.0;
            for (std::size_t j = 0; ok && j < periods.size(); ++j) {
                row[j] = return_level(p, periods[j]);
                ok = std::isfinite(row[j]);
            }
            if (!ok) {
                ++out.excluded;
                continue;
            }
            for (std::size_t j = 0; j < periods.size(); ++j) levels[j].push_back(row[j]);
        }
    if (out.excluded == total) throw domain_error("return_level_curve: no draw gives a finite level");
    out.excluded_warning = static_cast<double>(out.excluded) > 0.01 * static_cast<double>(total);
    for (auto& v : levels) {
        std::sort(v.begin(), v.end());
        double s = 0.0;
        for (double x : v) s += x;
        const double mean = s / static_cast<double>(v.size());
        out.mean.push_back(mean);
        out.lo.push_back(sorted_quantile(v, 0.025));
        out.hi.push_back(sorted_quantile(v, 0.975));
        out.relative_width.push_back((out.hi.back() - out.lo.back()) / mean);
    }
    return out;
}

/// (mu, sigma, xi) chains moved from the reference m to m_new blocks.
inline ChainSet rescale_chains(const ChainSet& chains, double m_new) {
    if (chains.family != ChainFamily::poisson_process)
        throw domain_error("rescale_chains: chains must hold (mu, sigma, xi)");
    ChainSet out = chains;
    for (std::size_t c = 0; c < chains.n_chains; ++c)
        for (std::size_t i = 0; i < chains.n_draws; ++i) {
            const OriginalParams p{chains.value(c, i, 0), chains.value(c, i, 1), chains.value(c, i, 2)};
            const OriginalParams q = rescale_blocks(p, chains.reference.m, m_new);
            const std::size_t k = (c * chains.n_draws + i) * chains.dim();
            out.draws[k] = q.mu;
            out.draws[k + 1] = q.sigma;
            out.draws[k + 2] = q.xi;
        }
    out.reference.m = m_new;
    return out;
}

/// n log-spaced periods from t_min to t_max.
inline std::vector<double> log_spaced(double t_min, double t_max, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = std::exp(std::log(t_min) + f * (std::log(t_max) - std::log(t_min)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Propriety checks for one observation

struct ProprietyResult {
    double numeric = 0.0;
    double analytic = 0.0;
    double estimated_error = 0.0;

    double relative_difference() const { return std::abs(numeric - analytic) / analytic; }
};

struct QuadratureOptions {
    double tolerance = 1e-9;   // relative, per axis
    unsigned max_depth = 15;
};

namespace detail {

template <class F>
double integrate_axis(F f, double a, double b, const QuadratureOptions& opt, double& err_acc) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, opt.max_depth,
                                                                                   opt.tolerance, &err);
    if (!std::isfinite(v)) throw numerical_error("quadrature produced a non-finite value", err);
    // relative error of negligible pieces does not affect the total
    if (std::abs(v) > 1e-10) err_acc = std::max(err_acc, err / std::abs(v));
    return v;
}

/// log(expm1(xi b) / xi) without overflow for large xi b.
inline double log_expm1_over(double b, double xi) {
    if (std::abs(xi) < 1e-8) return std::log(b) + std::log1p(0.5 * xi * b);
    const double a = xi * b;
    if (a > 0.0) return (a > 30.0 ? a + std::log1p(-std::exp(-a)) : std::log(std::expm1(a))) - std::log(xi);
    return std::log(-std::expm1(a)) - std::log(-xi);
}

/// One excess y above u with m = 1, parameterized by s in (0, 1) in place of
/// nu, where 1 - s = (1 + xi (1+xi) y / nu)^{-1/xi}. Returns log nu and the
/// log of the one-point likelihood times |d nu / d s|, both finite for all xi.
struct SPoint {
    double log_nu;
    double log_lik_jac;
};

inline SPoint s_point(double s, double r, double xi, double y) {
    const double k = (1.0 + xi) * y;
    const double l1 = std::log1p(-s);
    const double log_w = log_expm1_over(-l1, xi) - std::log(k);
    const double log_nu = -log_w;
    const double log_jac = 2.0 * log_nu - (xi + 1.0) * l1 - std::log(k);
    const double log_sigma = log_nu - std::log1p(xi);
    const double loglik = -r + std::log(r) - log_sigma + (1.0 + xi) * l1;
    return {log_nu, loglik + log_jac};
}

/// s as a function of nu.
inline double s_of_nu(double nu, double xi, double y) {
    const double z = (1.0 + xi) * y / nu;
    return -std::expm1(-log1p_over(z, xi));
}

/// Integral over (r, nu) at fixed xi of prior times likelihood for one excess
/// y, nu restricted to nu < nu_max. The prior must be of the form
/// g(r, xi) / nu; log_prior is evaluated at nu = 1 and shifted.
template <class LogPrior>
double one_point_slice(LogPrior log_prior, double y, double xi, double nu_max, const QuadratureOptions& opt,
                       double& err_acc) {
    if (!std::isfinite(xi) || !(xi > -1.0)) return 0.0;
    const double s_lo = std::isfinite(nu_max) ? s_of_nu(nu_max, xi, y) : 0.0;
    if (!(s_lo < 1.0)) return 0.0;
    const auto nu_integral = [&](double r) {
        if (!(r > 0.0) || !std::isfinite(r)) return 0.0;
        const double lp_unit = log_prior(OrthogonalParams{r, 1.0, xi});
        if (lp_unit == neg_inf) return 0.0;
        const auto f = [&](double s) {
            if (!(s > 0.0 && s < 1.0)) return 0.0;
            const SPoint pt = s_point(s, r, xi, y);
            const double v = std::exp(lp_unit - pt.log_nu + pt.log_lik_jac);
            return std::isfinite(v) ? v : 0.0;
        };
        return integrate_axis(f, s_lo, 1.0, opt, err_acc);
    };
    return integrate_axis(nu_integral, 0.0, std::numeric_limits<double>::infinity(), opt, err_acc);
}

template <class LogPrior>
double one_point_integral(LogPrior log_prior, double y, double xi_lo, double xi_hi, double nu_max,
                          const QuadratureOptions& opt, double& err_acc) {
    const auto f = [&](double xi) { return one_point_slice(log_prior, y, xi, nu_max, opt, err_acc); };
    return integrate_axis(f, xi_lo, xi_hi, opt, err_acc);
}

}  // namespace detail

/// Normalizing constant of the Jeffreys posterior for one observation with
/// excess x - u (m = 1), by nested Gauss-Kronrod quadrature, next to the
/// closed form 3 pi^{3/2} / (4 (x - u)).
inline ProprietyResult propriety_oracle_jeffreys(double x_minus_u, const QuadratureOptions& opt = {}) {
    if (!(x_minus_u > 0.0) || !std::isfinite(x_minus_u))
        throw domain_error("propriety_oracle_jeffreys: x - u must be > 0");
    const double y = x_minus_u;
    double err = 0.0;
    const auto prior = [](const OrthogonalParams& p) { return log_jeffreys_orthogonal(p); };
    const double inf = std::numeric_limits<double>::infinity();
    const auto slice = [&](double xi) { return detail::one_point_slice(prior, y, xi, inf, opt, err); };

    // xi in (-1/2, 0): xi = -1/2 + t^2 removes the (1+2xi)^{-1/2} endpoint singularity
    const double lower = detail::integrate_axis(
        [&](double t) {
            const double xi = -0.5 + t * t;
            return xi < 0.0 && t > 0.0 ? slice(xi) * 2.0 * t : 0.0;
        },
        0.0, std::sqrt(0.5), opt, err);
    // xi in (0, inf): 1 + 2 xi = 1/q^2, q in (0, 1]
    const double upper = detail::integrate_axis(
        [&](double q) {
            if (!(q > 0.0)) return 0.0;
            const double xi = 0.5 * (1.0 / (q * q) - 1.0);
            return xi > 0.0 ? slice(xi) / (q * q * q) : 0.0;
        },
        0.0, 1.0, opt, err);

    ProprietyResult res;
    res.numeric = lower + upper;
    res.analytic = 3.0 * std::pow(std::numbers::pi, 1.5) / (4.0 * x_minus_u);
    res.estimated_error = err;
    if (err > 1e-4) throw numerical_error("propriety_oracle_jeffreys: tolerance not reached", err);
    return res;
}

struct PcProprietyResult {
    std::vector<double> cutoffs;
    std::vector<double> values;
    double relative_change = 0.0;  // |v_last - v_first| / v_last
};

/// Mass of the one-observation posterior under the composite PC prior with
/// nu restricted to (0, cutoff), for each cutoff. The prior is proper in
/// xi and improper (1/nu) in nu, so convergence in the cutoff shows propriety.
inline PcProprietyResult pc_propriety_check(double x_minus_u, const PcPriorConfig& cfg,
                                            const std::vector<double>& cutoffs = {1e3, 1e4},
                                            const QuadratureOptions& opt = {}) {
    if (!(x_minus_u > 0.0)) throw domain_error("pc_propriety_check: x - u must be > 0");
    if (cutoffs.empty()) throw domain_error("pc_propriety_check: no cutoffs");
    const auto prior = [cfg](const OrthogonalParams& p) { return log_pc_composite(p, cfg); };
    PcProprietyResult res;
    res.cutoffs = cutoffs;
    for (double c : cutoffs) {
        double err = 0.0;
        const double xi_hi = cfg.use_laplace_approx ? std::numeric_limits<double>::infinity() : 1.0;
        const double neg = detail::one_point_integral(prior, x_minus_u, -1.0, 0.0, c, opt, err);
        const double pos = detail::one_point_integral(prior, x_minus_u, 0.0, xi_hi, c, opt, err);
        if (err > 1e-4) throw numerical_error("pc_propriety_check: tolerance not reached", err);
        res.values.push_back(neg + pos);
    }
    res.relative_change = std::abs(res.values.back() - res.values.front()) / res.values.back();
    return res;
}

// ---------------------------------------------------------------------------
// Summaries

struct CoordinateSummary {
    std::string label;
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::optional<double> ess;
    std::optional<double> rhat_inf;
};

inline std::vector<CoordinateSummary> summarize(const ChainSet& chains) {
    if (chains.empty()) throw domain_error("summarize: empty chain set");
    std::vector<CoordinateSummary> out;
    for (std::size_t k = 0; k < chains.dim(); ++k) {
        CoordinateSummary s;
        s.label = chains.labels[k];
        auto v = chains.pooled(k);
        const double n = static_cast<double>(v.size());
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / n;
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        std::sort(v.begin(), v.end());
        s.ci_lo = sorted_quantile(v, 0.025);
        s.ci_hi = sorted_quantile(v, 0.975);
        const bool constant = v.front() == v.back();
        if (!constant && chains.n_chains >= 2 && chains.n_draws >= 8) s.ess = ess(chains, k);
        if (chains.n_chains >= 2 && chains.n_draws >= 4) s.rhat_inf = rhat_infinity(chains, k);
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Replication study of the shape estimator

enum class EstimatorKind { posterior_mean, max_likelihood, oracle };

struct Estimator {
    std::string label;
    EstimatorKind kind = EstimatorKind::posterior_mean;
    Parameterization param;
    PriorSpec prior = PriorSpec::jeffreys_orthogonal();
};

struct MseConfig {
    std::vector<double> xi0_grid;
    std::size_t n_rep = 50;
    std::vector<Estimator> estimators;
    double m = 1.0;
    double u = 10.0;
    double sigma = 15.0;
    double expected_count = 100.0;  // mu is set so that r equals this
    std::uint64_t seed = 1;
    SamplerConfig sampler;

    void validate() const {
        if (xi0_grid.empty()) throw config_error("MseConfig: empty xi0 grid");
        for (double x : xi0_grid)
            if (!(x > -0.5 && x < 1.0)) throw config_error("MseConfig: xi0 must lie in (-0.5, 1)");
        if (n_rep < 2) throw config_error("MseConfig: n_rep must be >= 2");
        if (estimators.empty()) throw config_error("MseConfig: no estimators");
        sampler.validate();
    }
};

/// mu giving expected exceedance count r above u: u - sigma ((r/m)^{-xi} - 1) / xi.
inline double mu_for_count(double u, double sigma, double xi, double r, double m = 1.0) {
    return u - sigma * detail::expm1_over(-std::log(r / m), xi);
}

struct MseRow {
    std::string estimator;
    double xi0 = 0.0;
    double mse = 0.0;
    double bias2 = 0.0;
    double variance = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    std::vector<double> estimates;
};

struct MseReport {
    std::vector<MseRow> rows;
    std::size_t n_rep = 0;

    const MseRow& row(const std::string& estimator, double xi0) const {
        for (const auto& r : rows)
            if (r.estimator == estimator && r.xi0 == xi0) return r;
        throw domain_error("MseReport: no row for " + estimator);
    }
};

inline MseRow mse_row(const std::string& label, double xi0, const std::vector<double>& est, std::size_t failed) {
    MseRow row;
    row.estimator = label;
    row.xi0 = xi0;
    row.estimates = est;
    row.n_ok = est.size();
    row.n_failed = failed;
    if (est.empty()) {
        row.mse = row.bias2 = row.variance = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    const double n = static_cast<double>(est.size());
    double mean = 0.0, sq = 0.0;
    for (double e : est) {
        mean += e;
        sq += (e - xi0) * (e - xi0);
    }
    mean /= n;
    row.mse = sq / n;
    row.bias2 = (mean - xi0) * (mean - xi0);
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    row.variance = var / n;
    return row;
}

/// Shape estimate of one estimator on one dataset.
inline double estimate_xi(const Estimator& e, const ExceedanceData& d, double xi0, const SamplerConfig& cfg) {
    switch (e.kind) {
        case EstimatorKind::oracle: return xi0;
        case EstimatorKind::max_likelihood: {
            const Parameterization p = resolve_parameterization(e.param, d);
            const MlFit fit = ml_fit(p, d);
            const auto it = std::find(fit.labels.begin(), fit.labels.end(), "xi");
            if (it == fit.labels.end()) return *p.fixed_xi;
            return fit.theta[static_cast<std::size_t>(it - fit.labels.begin())];
        }
        case EstimatorKind::posterior_mean: {
            const PosteriorRun run = sample_posterior(e.param, e.prior, d, cfg);
            const auto xs = run.chains.pooled(run.chains.index_of("xi"));
            double s = 0.0;
            for (double x : xs) s += x;
            return s / static_cast<double>(xs.size());
        }
    }
    return xi0;
}

/// For each xi0 and replication: simulate with (m, u, sigma, xi0) and mu set
/// so that r = expected_count, then estimate xi with every estimator.
/// A failing estimator drops that replication from its own average only.
inline MseReport mse_study(const MseConfig& cfg) {
    cfg.validate();
    MseReport rep;
    rep.n_rep = cfg.n_rep;
    for (std::size_t g = 0; g < cfg.xi0_grid.size(); ++g) {
        const double xi0 = cfg.xi0_grid[g];
        std::vector<std::vector<double>> est(cfg.estimators.size());
        std::vector<std::size_t> failed(cfg.estimators.size(), 0);
        for (std::size_t rpt = 0; rpt < cfg.n_rep; ++rpt) {
            GeneratorSpec spec{cfg.m, cfg.u, mu_for_count(cfg.u, cfg.sigma, xi0, cfg.expected_count, cfg.m),
                               cfg.sigma, xi0, derive_seed(cfg.seed, g, rpt)};
            const ExceedanceData d = generate(spec).data;
            SamplerConfig sc = cfg.sampler;
            sc.seed = derive_seed(cfg.seed ^ 0x5bd1e995ULL, g, rpt);
            for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
                try {
                    const double v = estimate_xi(cfg.estimators[e], d, xi0, sc);
                    if (std::isfinite(v))
                        est[e].push_back(v);
                    else
                        ++failed[e];
                } catch (const error&) {
                    ++failed[e];
                }
            }
        }
        for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
            rep.rows.push_back(mse_row(cfg.estimators[e].label, xi0, est[e], failed[e]));
    }
    return rep;
}

}  // namespace orthoev
