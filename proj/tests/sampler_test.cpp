#include <cmath>

#include <gtest/gtest.h>

#include "orthoev/orthoev.hpp"

using namespace orthoev;

namespace {

LogPosterior gaussian(std::size_t d) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < d; ++k) labels.push_back("x" + std::to_string(k));
    return LogPosterior::custom(labels, std::vector<CoordMap>(d, CoordMap::identity), [](std::span<const double> t) {
        double s = 0.0;
        for (double v : t) s += v * v;
        return -0.5 * s;
    });
}

SamplerConfig explicit_cfg(std::vector<double> init, std::uint64_t seed = 3) {
    SamplerConfig cfg;
    cfg.seed = seed;
    cfg.init = InitKind::explicit_values;
    cfg.init_values = std::move(init);
    return cfg;
}

}  // namespace

TEST(RunChains, GaussianTarget) {
    const auto cs = run_chains(gaussian(3), explicit_cfg({0.5, -0.5, 0.2}));
    ASSERT_EQ(cs.n_chains, 4u);
    ASSERT_EQ(cs.n_draws, 1000u);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto v = cs.pooled(k);
        double m = 0.0, ss = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        for (double x : v) ss += (x - m) * (x - m);
        EXPECT_LT(std::abs(m), 0.1) << k;
        EXPECT_LT(std::abs(ss / static_cast<double>(v.size()) - 1.0), 0.1) << k;
    }
}

TEST(RunChains, Deterministic) {
    const auto a = run_chains(gaussian(2), explicit_cfg({0, 0}, 99));
    const auto b = run_chains(gaussian(2), explicit_cfg({0, 0}, 99));
    EXPECT_EQ(a.raw_draws, b.raw_draws);
    EXPECT_EQ(a.seeds, b.seeds);
    EXPECT_EQ(a.acceptance_rates, b.acceptance_rates);
    const auto c = run_chains(gaussian(2), explicit_cfg({0, 0}, 100));
    EXPECT_NE(a.raw_draws, c.raw_draws);
}

TEST(RunChains, RespectsSupport) {
    const auto target = LogPosterior::custom({"x"}, {CoordMap::identity}, [](std::span<const double> t) {
        return t[0] > 0.0 ? -0.5 * t[0] * t[0] : neg_inf;
    });
    const auto cs = run_chains(target, explicit_cfg({0.5}));
    for (double v : cs.raw_draws) ASSERT_GT(v, 0.0);
}

TEST(RunChains, NoFiniteStart) {
    const auto target = LogPosterior::custom({"x"}, {CoordMap::identity}, [](std::span<const double>) { return neg_inf; });
    EXPECT_THROW(run_chains(target, explicit_cfg({0.0})), error);
}

TEST(RunChains, InvalidConfig) {
    SamplerConfig cfg = explicit_cfg({0.0});
    cfg.target_accept = 1.0;
    EXPECT_THROW(run_chains(gaussian(1), cfg), config_error);
    cfg = explicit_cfg({0.0, 1.0});
    EXPECT_THROW(run_chains(gaussian(1), cfg), config_error);
}

TEST(TransformChains, IdentityParameterization) {
    const auto d = make_exceedance_data(0.0, 1.0, {0.5, 1.0, 2.0, 4.0, 0.2, 0.9});
    const Parameterization p{ModelKind::pp_original, {}, {}, ""};
    SamplerConfig cfg;
    cfg.n_draws = 50;
    cfg.n_burnin = 50;
    const auto raw = run_chains(build_log_posterior(p, PriorSpec::flat(), d), cfg);
    const auto out = transform_chains(raw, p, {d.u, d.m});
    EXPECT_EQ(out.draws, raw.raw_draws);
    EXPECT_EQ(out.family, ChainFamily::poisson_process);
}

TEST(TransformChains, OrthogonalAtRm) {
    const Parameterization p{ModelKind::pp_orthogonal, {}, {}, ""};
    const ModelContext ctx{7.0, 30.0};
    auto raw = make_chain_set(std::vector<std::vector<std::vector<double>>>{{{30.0, 30.0}, {6.0, 3.0}, {0.5, -0.25}},
                                                                            {{30.0, 30.0}, {6.0, 3.0}, {0.2, 0.0}}},
                              {"r", "nu", "xi"});
    const auto out = transform_chains(raw, p, ctx);
    ASSERT_EQ(out.n_chains, 2u);
    ASSERT_EQ(out.n_draws, 2u);
    EXPECT_NEAR(out.value(0, 0, 0), 7.0, 1e-12);
    EXPECT_NEAR(out.value(0, 0, 1), 4.0, 1e-12);
    EXPECT_NEAR(out.value(0, 1, 1), 4.0, 1e-12);
    EXPECT_NEAR(out.value(1, 1, 1), 3.0, 1e-12);
    EXPECT_EQ(out.labels, (std::vector<std::string>{"mu", "sigma", "xi"}));
}

TEST(TransformChains, SingularDrawsExcluded) {
    const Parameterization p{ModelKind::gpd_orthogonal, {}, {}, ""};
    auto raw = make_chain_set(std::vector<std::vector<std::vector<double>>>{{{2, 2, 2}, {0.1, -1.0, 0.2}},
                                                                            {{2, 2, 2}, {0.1, 0.3, 0.2}}},
                              {"nu", "xi"});
    const auto out = transform_chains(raw, p, {0, 1});
    EXPECT_EQ(out.n_draws, 2u);
    EXPECT_EQ(out.excluded_draws, std::vector<std::size_t>{1});
    EXPECT_NEAR(out.value(0, 1, 0), 2.0 / 1.2, 1e-14);
    EXPECT_EQ(out.draws.size(), 2u * 2u * 2u);
}

TEST(TransformChains, LabelMismatch) {
    auto raw = make_chain_set(std::vector<std::vector<double>>{{1, 2}, {3, 4}}, "x");
    EXPECT_THROW(transform_chains(raw, {ModelKind::pp_orthogonal, {}, {}, ""}, {0, 1}), config_error);
}

TEST(SamplePosterior, ExplicitMRecoversGenerator) {
    const GeneratorSpec g{20, 20, 25, 5, 0.0, 41};
    const auto d = generate(g).data;
    const Parameterization p{ModelKind::pp_original, MOverride::explicit_m(50.0), {}, ""};
    SamplerConfig cfg;
    cfg.seed = 5;
    const auto run = sample_posterior(p, PriorSpec::jeffreys_original(), d, cfg);
    EXPECT_DOUBLE_EQ(run.chains.m_sampling, 50.0);
    EXPECT_DOUBLE_EQ(run.chains.reference.m, 20.0);
    const auto s = summarize(run.chains);
    const double truth[3] = {25, 5, 0.0};
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(s[k].mean - truth[k]), 3 * s[k].sd) << s[k].label;
}

// ---------------------------------------------------------------------------

TEST(SamplerProperty, DeterministicAcrossSchedules) {
    auto cfg = explicit_cfg({0, 0, 0}, 12);
    const auto a = run_chains(gaussian(3), cfg);
    cfg.parallel = true;
    const auto b = run_chains(gaussian(3), cfg);
    EXPECT_EQ(a.raw_draws, b.raw_draws);
    EXPECT_EQ(a.proposal_scales, b.proposal_scales);
}

TEST(SamplerProperty, FrozenScalesReported) {
    const auto cs = run_chains(gaussian(3), explicit_cfg({0, 0, 0}));
    ASSERT_EQ(cs.proposal_scales.size(), 4u);
    for (const auto& s : cs.proposal_scales) {
        ASSERT_EQ(s.size(), 3u);
        for (double v : s) EXPECT_TRUE(v > 0.0 && std::isfinite(v));
    }
}

TEST(SamplerProperty, GaussianAcceptanceNearTarget) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto cs = run_chains(gaussian(3), explicit_cfg({0.1, 0.1, 0.1}, seed));
        for (double a : cs.acceptance_rates) EXPECT_NEAR(a, 0.234, 0.08) << seed;
    }
}

TEST(SamplerProperty, TransformPreservesShape) {
    const GeneratorSpec g{5, 10, 30, 15, 0.7, 3};
    const auto d = generate(g).data;
    for (const auto& p : {Parameterization{ModelKind::pp_orthogonal, {}, {}, ""},
                          Parameterization{ModelKind::pp_original, MOverride::nu_count(), {}, ""}}) {
        SamplerConfig cfg;
        cfg.n_draws = 200;
        cfg.n_burnin = 200;
        const auto target = build_log_posterior(resolve_parameterization(p, d), PriorSpec::flat(), d);
        const auto raw = run_chains(target, cfg);
        const auto out = transform_chains(raw, resolve_parameterization(p, d), {d.u, d.m});
        ASSERT_TRUE(out.excluded_draws.empty());
        ASSERT_EQ(out.n_chains, raw.n_chains);
        ASSERT_EQ(out.n_draws, raw.n_draws);
        // draw i of chain c maps from raw draw i of chain c
        for (std::size_t c = 0; c < out.n_chains; ++c)
            for (std::size_t i = 0; i < out.n_draws; i += 37) {
                ASSERT_EQ(out.raw_value(c, i, 0), raw.raw_value(c, i, 0));
                ASSERT_EQ(out.value(c, i, 2), raw.raw_value(c, i, 2));
            }
    }
}
