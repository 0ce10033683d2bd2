#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"

namespace orthoev {

/// Which family the reference coordinates of a ChainSet belong to.
enum class ChainFamily {
    poisson_process,  // reference (mu, sigma, xi) at reference m
    gpd,              // reference (sigma_tilde, xi)
    generic,          // arbitrary target; reference = sampling coordinates
};

/// M chains x N retained draws x d coordinates, row-major [chain][draw][coord].
struct ChainSet {
    std::size_t n_chains = 0;
    std::size_t n_draws = 0;

    std::vector<std::string> labels;      // reference coordinates
    std::vector<double> draws;
    std::vector<std::string> raw_labels;  // sampling (natural) coordinates
    std::vector<double> raw_draws;

    std::vector<double> acceptance_rates;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<double>> proposal_scales;  // frozen after burn-in

    ChainFamily family = ChainFamily::generic;
    ModelContext reference;      // (u, m) of the reference coordinates
    double m_sampling = 1.0;     // m used by the sampled likelihood
    std::vector<std::size_t> excluded_draws;  // draw indices dropped by transform_chains

    std::size_t dim() const { return labels.size(); }
    std::size_t raw_dim() const { return raw_labels.size(); }
    bool empty() const { return n_chains == 0 || n_draws == 0; }

    double value(std::size_t chain, std::size_t draw, std::size_t coord) const {
        return draws[(chain * n_draws + draw) * dim() + coord];
    }
    double raw_value(std::size_t chain, std::size_t draw, std::size_t coord) const {
        return raw_draws[(chain * n_draws + draw) * raw_dim() + coord];
    }

    /// One coordinate of one chain, in reference coordinates.
    std::vector<double> chain_coordinate(std::size_t chain, std::size_t coord) const {
        std::vector<double> out(n_draws);
        for (std::size_t i = 0; i < n_draws; ++i) out[i] = value(chain, i, coord);
        return out;
    }

    /// All chains of one coordinate, chain-major.
    std::vector<std::vector<double>> coordinate(std::size_t coord) const {
        if (coord >= dim()) throw domain_error("ChainSet: coordinate index out of range");
        std::vector<std::vector<double>> out(n_chains);
        for (std::size_t c = 0; c < n_chains; ++c) out[c] = chain_coordinate(c, coord);
        return out;
    }

    std::vector<double> pooled(std::size_t coord) const {
        std::vector<double> out;
        out.reserve(n_chains * n_draws);
        for (std::size_t c = 0; c < n_chains; ++c)
            for (std::size_t i = 0; i < n_draws; ++i) out.push_back(value(c, i, coord));
        return out;
    }

    std::size_t index_of(const std::string& label) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k] == label) return k;
        throw domain_error("ChainSet: no coordinate named '" + label + "'");
    }
};

/// Build a ChainSet directly from per-chain, per-coordinate sequences
/// (chains[c][k][i]); reference and raw coordinates coincide.
inline ChainSet make_chain_set(const std::vector<std::vector<std::vector<double>>>& chains,
                               std::vector<std::string> labels) {
    ChainSet cs;
    cs.n_chains = chains.size();
    cs.n_draws = chains.empty() || chains[0].empty() ? 0 : chains[0][0].size();
    cs.labels = labels;
    cs.raw_labels = std::move(labels);
    const std::size_t d = cs.labels.size();
    cs.draws.resize(cs.n_chains * cs.n_draws * d);
    for (std::size_t c = 0; c < cs.n_chains; ++c) {
        if (chains[c].size() != d) throw domain_error("make_chain_set: coordinate count mismatch");
        for (std::size_t k = 0; k < d; ++k) {
            if (chains[c][k].size() != cs.n_draws)
                throw domain_error("make_chain_set: chains must have equal length");
            for (std::size_t i = 0; i < cs.n_draws; ++i)
                cs.draws[(c * cs.n_draws + i) * d + k] = chains[c][k][i];
        }
    }
    cs.raw_draws = cs.draws;
    cs.acceptance_rates.assign(cs.n_chains, 1.0);
    cs.seeds.assign(cs.n_chains, 0);
    return cs;
}

/// Convenience for one-coordinate chain sets: chains[c][i].
inline ChainSet make_chain_set(const std::vector<std::vector<double>>& chains,
                               const std::string& label = "x") {
    std::vector<std::vector<std::vector<double>>> nested;
    nested.reserve(chains.size());
    for (const auto& ch : chains) nested.push_back({ch});
    return make_chain_set(nested, {label});
}

}  // namespace orthoev
