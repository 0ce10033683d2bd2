#pragma once

// Autocorrelation, effective sample size and indicator-based R-hat.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "orthoev/chains.hpp"
#include "orthoev/error.hpp"

namespace orthoev {

/// Biased (divide-by-N) autocovariance of a centered copy of x, lags 0..N-1.
inline std::vector<double> autocovariance(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::size_t len = 1;
    while (len < 2 * n) len <<= 1;
    std::vector<double> padded(len, 0.0);
    for (std::size_t i = 0; i < n; ++i) padded[i] = x[i] - mean;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> freq;
    fft.fwd(freq, padded);
    for (auto& f : freq) f = std::complex<double>(std::norm(f), 0.0);
    std::vector<double> back;
    fft.inv(back, freq);
    std::vector<double> acov(n);
    for (std::size_t t = 0; t < n; ++t) acov[t] = back[t] / static_cast<double>(n);
    return acov;
}

/// Normalized autocorrelation rho_0..rho_max_lag of one chain.
inline std::vector<double> autocorrelation(const std::vector<double>& chain, std::size_t max_lag) {
    if (chain.size() <= max_lag) throw domain_error("autocorrelation: chain length must exceed max_lag");
    const auto acov = autocovariance(chain);
    if (!(acov[0] > 0.0)) throw domain_error("autocorrelation: constant chain");
    std::vector<double> rho(max_lag + 1);
    for (std::size_t t = 0; t <= max_lag; ++t) rho[t] = acov[t] / acov[0];
    rho[0] = 1.0;
    return rho;
}

/// Autocorrelation of one coordinate averaged across chains.
inline std::vector<double> autocorrelation(const ChainSet& chains, std::size_t coord, std::size_t max_lag) {
    std::vector<double> avg(max_lag + 1, 0.0);
    for (std::size_t c = 0; c < chains.n_chains; ++c) {
        const auto rho = autocorrelation(chains.chain_coordinate(c, coord), max_lag);
        for (std::size_t t = 0; t <= max_lag; ++t) avg[t] += rho[t];
    }
    for (double& v : avg) v /= static_cast<double>(chains.n_chains);
    return avg;
}

/// Effective sample size of chains[c][i] (first n_use draws of each chain).
/// Pooled autocorrelation rho_t = 1 - (W - mean_c acov_c(t)) / var_plus,
/// truncated by Geyer's initial monotone positive-pair sequence.
inline double ess(const std::vector<std::vector<double>>& chains, std::size_t n_use = 0) {
    const std::size_t m = chains.size();
    if (m < 1) throw domain_error("ess: no chains");
    std::size_t n = chains[0].size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n_use) n = std::min(n, n_use);
    if (n < 8) throw domain_error("ess: at least 8 draws per chain are required");

    std::vector<std::vector<double>> acov(m);
    std::vector<double> means(m);
    for (std::size_t c = 0; c < m; ++c) {
        std::vector<double> x(chains[c].begin(), chains[c].begin() + static_cast<std::ptrdiff_t>(n));
        acov[c] = autocovariance(x);
        double s = 0.0;
        for (double v : x) s += v;
        means[c] = s / static_cast<double>(n);
    }
    const double nd = static_cast<double>(n);
    double mean_var = 0.0;
    for (std::size_t c = 0; c < m; ++c) mean_var += acov[c][0] * nd / (nd - 1.0);
    mean_var /= static_cast<double>(m);
    double var_plus = mean_var * (nd - 1.0) / nd;
    if (m > 1) {
        double gm = 0.0;
        for (double v : means) gm += v;
        gm /= static_cast<double>(m);
        double b = 0.0;
        for (double v : means) b += (v - gm) * (v - gm);
        var_plus += b / static_cast<double>(m - 1);
    }
    if (!(var_plus > 0.0) || !std::isfinite(var_plus)) throw domain_error("ess: degenerate chains");

    const auto mean_acov = [&](std::size_t t) {
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) s += acov[c][t];
        return s / static_cast<double>(m);
    };
    const auto rho_at = [&](std::size_t t) { return 1.0 - (mean_var - mean_acov(t)) / var_plus; };

    std::vector<double> rho(n, 0.0);
    double rho_even = 1.0;
    double rho_odd = rho_at(1);
    rho[0] = rho_even;
    rho[1] = rho_odd;
    std::size_t s = 1;
    while (s < n - 4 && rho_even + rho_odd > 0.0) {
        rho_even = rho_at(s + 1);
        rho_odd = rho_at(s + 2);
        if (rho_even + rho_odd >= 0.0) {
            rho[s + 1] = rho_even;
            rho[s + 2] = rho_odd;
        }
        s += 2;
    }
    const std::size_t max_s = s;
    if (rho_even > 0.0 && max_s + 1 < n) rho[max_s + 1] = rho_even;
    for (std::size_t k = 1; k + 3 <= max_s; k += 2) {
        if (rho[k + 1] + rho[k + 2] > rho[k - 1] + rho[k]) {
            rho[k + 1] = 0.5 * (rho[k - 1] + rho[k]);
            rho[k + 2] = rho[k + 1];
        }
    }
    const double total = static_cast<double>(m) * nd;
    double tau = -1.0;
    for (std::size_t k = 0; k < max_s; ++k) tau += 2.0 * rho[k];
    if (max_s + 1 < n) tau += rho[max_s + 1];
    tau = std::max(tau, 1.0 / std::log10(total));
    return total / tau;
}

inline double ess(const ChainSet& chains, std::size_t coord) {
    if (chains.n_chains < 2) throw domain_error("ess: at least 2 chains are required");
    return ess(chains.coordinate(coord));
}

/// ESS using the first n draws of each chain, for n on an even grid up to N.
inline std::vector<std::pair<std::size_t, double>> ess_trajectory(const ChainSet& chains, std::size_t coord,
                                                                  std::size_t points = 20) {
    const auto cs = chains.coordinate(coord);
    std::vector<std::pair<std::size_t, double>> out;
    const std::size_t n = chains.n_draws;
    points = std::max<std::size_t>(points, 1);
    for (std::size_t j = 1; j <= points; ++j) {
        const std::size_t use = std::max<std::size_t>(8, n * j / points);
        if (use > n) break;
        if (!out.empty() && out.back().first == use) continue;
        out.emplace_back(use, ess(cs, use));
    }
    return out;
}

namespace detail {

/// Chains, halved when split is set (a middle draw is dropped for odd N).
inline std::vector<std::vector<double>> rhat_chains(const ChainSet& chains, std::size_t coord, bool split) {
    auto cs = chains.coordinate(coord);
    if (!split) return cs;
    std::vector<std::vector<double>> out;
    for (auto& c : cs) {
        const std::size_t h = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
    }
    return out;
}

/// Classical R-hat for indicator counts: counts[j] of n draws are <= x.
inline double indicator_rhat(const std::vector<std::size_t>& counts, std::size_t n) {
    const std::size_t m = counts.size();
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0 || total == m * n) return 1.0;
    const double nd = static_cast<double>(n);
    double w = 0.0, mean = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / nd;
        w += nd / (nd - 1.0) * p * (1.0 - p);
        mean += p;
    }
    w /= static_cast<double>(m);
    mean /= static_cast<double>(m);
    double b = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / nd;
        b += (p - mean) * (p - mean);
    }
    b *= nd / static_cast<double>(m - 1);
    if (w == 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double var_plus = (nd - 1.0) / nd * w + b / nd;
    return std::sqrt(var_plus / w);
}

struct SortedChains {
    std::vector<std::vector<double>> sorted;
    std::size_t n = 0;

    SortedChains(const ChainSet& chains, std::size_t coord, bool split) {
        sorted = rhat_chains(chains, coord, split);
        n = sorted.empty() ? 0 : sorted[0].size();
        for (auto& c : sorted) std::sort(c.begin(), c.end());
    }

    double at(double x) const {
        std::vector<std::size_t> counts(sorted.size());
        for (std::size_t j = 0; j < sorted.size(); ++j)
            counts[j] = static_cast<std::size_t>(std::upper_bound(sorted[j].begin(), sorted[j].end(), x) -
                                                 sorted[j].begin());
        return indicator_rhat(counts, n);
    }
};

}  // namespace detail

/// R-hat of the indicator 1{theta <= x}. Exactly 1 when every indicator agrees.
inline double local_rhat(const ChainSet& chains, std::size_t coord, double x, bool split = true) {
    if (chains.n_chains < 2) throw domain_error("local_rhat: at least 2 chains are required");
    if (split && chains.n_draws < 4) throw domain_error("local_rhat: too few draws to split");
    return detail::SortedChains(chains, coord, split).at(x);
}

inline constexpr std::size_t rhat_full_grid_max = 4096;
inline constexpr std::size_t rhat_quantile_grid = 512;

/// Sorted pooled order statistics: every value when the pool has at most
/// max_full entries, otherwise `points` equispaced order statistics.
inline std::vector<double> quantile_grid(std::vector<double> pooled, std::size_t max_full, std::size_t points) {
    std::sort(pooled.begin(), pooled.end());
    if (pooled.size() <= max_full) {
        pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
        return pooled;
    }
    std::vector<double> grid(points);
    const double last = static_cast<double>(pooled.size() - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const auto k = static_cast<std::size_t>(std::llround(last * static_cast<double>(i) /
                                                             static_cast<double>(points - 1)));
        grid[i] = pooled[k];
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline std::vector<double> rhat_grid(const ChainSet& chains, std::size_t coord) {
    return quantile_grid(chains.pooled(coord), rhat_full_grid_max, rhat_quantile_grid);
}

inline std::vector<std::pair<double, double>> rhat_curve(const ChainSet& chains, std::size_t coord,
                                                         const std::vector<double>& grid, bool split = true) {
    if (chains.n_chains < 2) throw domain_error("rhat_curve: at least 2 chains are required");
    const detail::SortedChains sc(chains, coord, split);
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double x : grid) out.emplace_back(x, sc.at(x));
    return out;
}

/// Supremum of local_rhat over the pooled-value grid.
inline double rhat_infinity(const ChainSet& chains, std::size_t coord, bool split = true) {
    double best = 1.0;
    for (const auto& [x, r] : rhat_curve(chains, coord, rhat_grid(chains, coord), split)) best = std::max(best, r);
    return best;
}

struct DiagnosticsOptions {
    std::size_t max_lag = 50;
    std::size_t ess_points = 20;
    std::size_t curve_points = 200;
    double threshold = 1.03;
    bool split = true;
};

struct CoordinateDiagnostics {
    std::string label;
    bool constant = false;  // every draw identical (e.g. a fixed coordinate)
    std::vector<double> acf;
    std::optional<double> ess;
    std::vector<std::pair<std::size_t, double>> ess_trajectory;
    std::vector<std::pair<double, double>> rhat_curve;
    double rhat_inf = 1.0;
};

struct DiagnosticsReport {
    std::vector<CoordinateDiagnostics> coords;
    double threshold = 1.03;
    bool split = true;

    double total_ess() const {
        double s = 0.0;
        for (const auto& c : coords)
            if (c.ess) s += *c.ess;
        return s;
    }
    bool all_below_threshold() const {
        for (const auto& c : coords)
            if (!(c.rhat_inf < threshold)) return false;
        return true;
    }
};

inline DiagnosticsReport diagnose(const ChainSet& chains, const DiagnosticsOptions& opt = {}) {
    if (chains.empty()) throw domain_error("diagnose: empty chain set");
    DiagnosticsReport rep;
    rep.threshold = opt.threshold;
    rep.split = opt.split;
    for (std::size_t k = 0; k < chains.dim(); ++k) {
        CoordinateDiagnostics cd;
        cd.label = chains.labels[k];
        const auto pooled = chains.pooled(k);
        const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
        cd.constant = *lo == *hi;
        if (!cd.constant) {
            const std::size_t lag = std::min(opt.max_lag, chains.n_draws - 1);
            try {
                cd.acf = autocorrelation(chains, k, lag);
            } catch (const domain_error&) {
                cd.acf.clear();  // some chain is constant
            }
            if (chains.n_chains >= 2 && chains.n_draws >= 8) {
                cd.ess = ess(chains, k);
                cd.ess_trajectory = ess_trajectory(chains, k, opt.ess_points);
            }
        }
        if (chains.n_chains >= 2) {
            const auto full = rhat_curve(chains, k, rhat_grid(chains, k), opt.split);
            for (const auto& [x, r] : full) cd.rhat_inf = std::max(cd.rhat_inf, r);
            const std::size_t stride = std::max<std::size_t>(1, full.size() / std::max<std::size_t>(1, opt.curve_points));
            for (std::size_t i = 0; i < full.size(); i += stride) cd.rhat_curve.push_back(full[i]);
        }
        rep.coords.push_back(std::move(cd));
    }
    return rep;
}

}  // namespace orthoev
