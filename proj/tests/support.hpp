#pragma once

// Fixtures and independent oracles shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "orthoev/orthoev.hpp"

namespace orthoev::testing {

/// Daily series over `years` years starting 1920-01-01 whose in-season
/// (Dec-May) exceedances of u form exactly `clusters` runs, each 1-3 days
/// long and peaking at a GPD(sigma_tilde, xi) excess above u. Out-of-season
/// exceedances are added so the season filter has something to remove.
struct SyntheticSeries {
    DailySeries series;
    std::vector<double> peaks;
};

inline SyntheticSeries garonne_like_series(std::size_t clusters, double u, double sigma_tilde, double xi,
                                           std::uint64_t seed, int years = 99) {
    using namespace std::chrono;
    Engine rng = make_engine(seed);
    const sys_days start = year{1920} / January / 1;
    const sys_days stop = year{1920 + years} / January / 1;
    const auto n_days = static_cast<std::size_t>((stop - start).count());
    SyntheticSeries out;
    auto& s = out.series;
    s.dates.resize(n_days);
    s.values.resize(n_days);
    s.missing.assign(n_days, 0);
    for (std::size_t i = 0; i < n_days; ++i) {
        s.dates[i] = start + days{static_cast<int>(i)};
        s.values[i] = 0.2 * u + 0.6 * u * draw_uniform(rng);
    }
    const std::set<unsigned> season = {12, 1, 2, 3, 4, 5};
    std::vector<std::size_t> in_season, off_season;
    for (std::size_t i = 5; i + 5 < n_days; i += 7)
        (season.count(month_of(s.dates[i])) ? in_season : off_season).push_back(i);
    // well-spaced candidate starts; pick `clusters` of them deterministically
    std::vector<std::size_t> starts;
    const double stride = static_cast<double>(in_season.size()) / static_cast<double>(clusters);
    for (std::size_t k = 0; k < clusters; ++k)
        starts.push_back(in_season[static_cast<std::size_t>(stride * static_cast<double>(k))]);
    const GpdParams g{sigma_tilde, xi};
    for (std::size_t i : starts) {
        const double peak = u + gpd_quantile(draw_open_uniform(rng), g);
        out.peaks.push_back(peak);
        const std::size_t len = 1 + draw_index(rng, 3);
        const std::size_t at = i + draw_index(rng, len);
        for (std::size_t j = i; j < i + len; ++j)
            s.values[j] = j == at ? peak : u + (peak - u) * (0.2 + 0.6 * draw_uniform(rng));
    }
    for (std::size_t k = 0; k < off_season.size(); k += 25) s.values[off_season[k]] = 1.5 * u;
    return out;
}

/// Declustered synthetic stand-in for the Garonne record: 182 in-season
/// clusters above u = 2000 over 99 years, with excesses from the GPD implied
/// by (mu, sigma, xi) = (2560.8, 919.6, 0.015).
inline constexpr double garonne_u = 2000.0;
inline constexpr double garonne_years = 99.0;
inline const OriginalParams garonne_truth{2560.8, 919.6, 0.015};

inline DeclusterResult garonne_fixture(std::uint64_t seed = 2024) {
    const GpdParams g = gpd_scale_at_threshold(garonne_truth, garonne_u);
    const auto syn = garonne_like_series(182, garonne_u, g.sigma_tilde, g.xi, seed);
    DeclusterConfig cfg;
    cfg.threshold_u = garonne_u;
    cfg.season = {12, 1, 2, 3, 4, 5};
    return decluster(syn.series, cfg, garonne_years);
}

/// Intensity lambda(x) = (m / sigma) (1 + xi (x - mu) / sigma)^{-1/xi - 1} of
/// the Poisson process with mean measure m (1 + xi (x - mu)/sigma)^{-1/xi}.
inline double pp_intensity(double x, double mu, double sigma, double xi, double m) {
    const double z = 1.0 + xi * (x - mu) / sigma;
    if (!(z > 0.0)) return 0.0;
    return m / sigma * std::pow(z, -1.0 / xi - 1.0);
}

/// Expected Fisher information of (mu, sigma, xi) for the process on (u, inf):
/// integral of grad(lambda) grad(lambda)^T / lambda, gradients by central
/// differences, integral by adaptive Gauss-Kronrod.
inline Eigen::Matrix3d pp_fisher_original(double mu, double sigma, double xi, double u, double m) {
    const double upper = xi < 0.0 ? mu - sigma / xi : std::numeric_limits<double>::infinity();
    const double h[3] = {1e-5 * sigma, 1e-5 * sigma, 1e-5};
    const auto grad = [&](double x) {
        Eigen::Vector3d g;
        for (int k = 0; k < 3; ++k) {
            double p[3] = {mu, sigma, xi}, q[3] = {mu, sigma, xi};
            p[k] += h[k];
            q[k] -= h[k];
            g[k] = (pp_intensity(x, p[0], p[1], p[2], m) - pp_intensity(x, q[0], q[1], q[2], m)) / (2 * h[k]);
        }
        return g;
    };
    Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            const auto f = [&](double x) {
                const double lam = pp_intensity(x, mu, sigma, xi, m);
                if (!(lam > 0.0)) return 0.0;
                const Eigen::Vector3d g = grad(x);
                return g[a] * g[b] / lam;
            };
            // stay clear of the upper endpoint where the differences straddle the support
            const double hi = std::isfinite(upper) ? upper - 1e-4 * sigma : upper;
            const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, u, hi, 20, 1e-11);
            info(a, b) = info(b, a) = v;
        }
    return info;
}

/// Monte-Carlo average of the negative finite-difference Hessian of the
/// orthogonal Poisson-process log-likelihood at the generating point.
inline Eigen::Matrix3d mc_fisher_orthogonal(const OrthogonalParams& p, std::size_t n_datasets, std::uint64_t seed) {
    const ModelContext ctx{0.0, 1.0};
    const GpdParams g{p.nu / (1.0 + p.xi), p.xi};
    Engine rng = make_engine(seed);
    const double h[3] = {1e-3 * p.r, 1e-3 * p.nu, 1e-3};
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    ExceedanceData d{ctx.u, ctx.m, {}};
    for (std::size_t k = 0; k < n_datasets; ++k) {
        const auto n = draw_poisson(rng, p.r);
        d.xs.clear();
        for (std::uint64_t i = 0; i < n; ++i) d.xs.push_back(gpd_quantile(draw_open_uniform(rng), g));
        const auto ll = [&](double dr, double dn, double dx) {
            return pp_loglik_orthogonal({p.r + dr, p.nu + dn, p.xi + dx}, d);
        };
        const auto at = [&](int i, double s) {
            std::array<double, 3> v{0, 0, 0};
            v[i] = s * h[i];
            return v;
        };
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                double hess;
                if (a == b) {
                    const auto vp = at(a, 1), vm = at(a, -1);
                    hess = (ll(vp[0], vp[1], vp[2]) - 2 * ll(0, 0, 0) + ll(vm[0], vm[1], vm[2])) / (h[a] * h[a]);
                } else {
                    double pp[3] = {0, 0, 0}, pm[3] = {0, 0, 0}, mp[3] = {0, 0, 0}, mm[3] = {0, 0, 0};
                    pp[a] = h[a], pp[b] = h[b];
                    pm[a] = h[a], pm[b] = -h[b];
                    mp[a] = -h[a], mp[b] = h[b];
                    mm[a] = -h[a], mm[b] = -h[b];
                    hess = (ll(pp[0], pp[1], pp[2]) - ll(pm[0], pm[1], pm[2]) - ll(mp[0], mp[1], mp[2]) +
                            ll(mm[0], mm[1], mm[2])) /
                           (4 * h[a] * h[b]);
                }
                acc(a, b) -= hess;
                if (a != b) acc(b, a) -= hess;
            }
    }
    return acc / static_cast<double>(n_datasets);
}

inline std::vector<double> ar1(std::size_t n, double phi, Engine& rng) {
    std::vector<double> x(n);
    double v = draw_normal(rng) / std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = v;
        v = phi * v + draw_normal(rng);
    }
    return x;
}

inline std::vector<double> white_noise(std::size_t n, Engine& rng, double shift = 0.0) {
    std::vector<double> x(n);
    for (double& v : x) v = shift + draw_normal(rng);
    return x;
}

}  // namespace orthoev::testing
