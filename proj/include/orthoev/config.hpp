#pragma once

// Declarative run configuration (JSON). Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orthoev/analysis.hpp"
#include "orthoev/diagnostics.hpp"
#include "orthoev/error.hpp"
#include "orthoev/ingest.hpp"
#include "orthoev/io.hpp"
#include "orthoev/model.hpp"
#include "orthoev/priors.hpp"
#include "orthoev/sampler.hpp"
#include "orthoev/simgen.hpp"

namespace orthoev {

struct RunSpec {
    std::string label;
    Parameterization param;
    PriorSpec prior = PriorSpec::jeffreys_orthogonal();

    std::string name() const { return label.empty() ? param.name() : label; }
};

struct DataSource {
    std::optional<std::filesystem::path> exceedances;  // date,value CSV
    std::optional<std::filesystem::path> series;       // daily series, declustered first
    std::optional<double> u;
    std::optional<double> m;
    DeclusterConfig decluster;
};

struct ReturnLevelOptions {
    double t_min = 2.0;
    double t_max = 1e4;
    std::size_t points = 30;
    std::optional<double> years;  // rescale draws from m blocks to this many blocks
};

struct MseOptions {
    std::vector<double> xi0 = {0.3, 0.7};
    std::size_t replications = 50;
    std::vector<Estimator> estimators;
    double m = 1.0;
    double u = 10.0;
    double sigma = 15.0;
    double expected_count = 100.0;
};

struct ProprietyOptions {
    std::vector<double> x_minus_u = {0.5, 1.0, 5.0};
    double pc_lambda = 10.0;
    double pc_x_minus_u = 1.0;
    std::vector<double> cutoffs = {1e3, 1e4};
};

struct RunConfig {
    std::filesystem::path source;  // the config file (empty when built in code)
    std::string command;
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> output_dir;
    std::optional<GeneratorSpec> generator;
    std::optional<DataSource> data;
    std::vector<RunSpec> runs;
    SamplerConfig sampler;
    DiagnosticsOptions diagnostics;
    ReturnLevelOptions return_levels;
    MseOptions mse;
    ProprietyOptions propriety;
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw config_error(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw config_error(where + ": unknown key '" + k + "'");
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(where + ": invalid or missing '" + key + "'");
    }
}

template <class T>
void read_opt(const json& j, const std::string& key, T& target, const std::string& where) {
    if (j.contains(key)) target = get_as<T>(j, key, where);
}

inline MOverride parse_m_override(const json& j) {
    if (j.is_number()) return MOverride::explicit_m(j.get<double>());
    if (!j.is_string()) throw config_error("model.m_override: expected a string or a number");
    const auto s = j.get<std::string>();
    if (s == "keep") return MOverride::keep();
    if (s == "nu_count" || s == "n_u") return MOverride::nu_count();
    if (s == "sharkey" || s == "sharkey_interval") return MOverride::sharkey();
    throw config_error("model.m_override: unknown value '" + s + "'");
}

inline Parameterization parse_model(const json& j) {
    check_keys(j, {"kind", "m_override", "fixed_xi", "label"}, "model");
    Parameterization p;
    p.kind = model_kind_from_string(get_as<std::string>(j, "kind", "model"));
    if (j.contains("m_override")) p.m_override = parse_m_override(j["m_override"]);
    if (j.contains("fixed_xi") && !j["fixed_xi"].is_null()) p.fixed_xi = get_as<double>(j, "fixed_xi", "model");
    read_opt(j, "label", p.label, "model");
    p.validate();
    return p;
}

inline PriorSpec parse_prior(const json& j) {
    check_keys(j, {"kind", "lambda", "laplace"}, "prior");
    const PriorKind kind = prior_kind_from_string(get_as<std::string>(j, "kind", "prior"));
    PriorSpec p{kind, std::nullopt};
    if (kind == PriorKind::pc_composite) {
        PcPriorConfig pc;
        read_opt(j, "lambda", pc.lambda, "prior");
        read_opt(j, "laplace", pc.use_laplace_approx, "prior");
        p.pc = pc;
    } else if (j.contains("lambda") || j.contains("laplace")) {
        throw config_error("prior: lambda/laplace only apply to pc_composite");
    }
    p.validate();
    return p;
}

inline RunSpec parse_run(const json& j) {
    check_keys(j, {"label", "model", "prior"}, "runs[]");
    RunSpec r;
    read_opt(j, "label", r.label, "runs[]");
    if (!j.contains("model")) throw config_error("runs[]: missing 'model'");
    r.param = parse_model(j["model"]);
    if (j.contains("prior")) r.prior = parse_prior(j["prior"]);
    return r;
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
    using detail::check_keys;
    using detail::get_as;
    using detail::read_opt;
    check_keys(j, {"command", "seed", "output_dir", "generator", "data", "model", "prior", "runs", "sampler",
                   "diagnostics", "return_levels", "mse", "propriety", "description"},
               "config");
    RunConfig c;
    read_opt(j, "command", c.command, "config");
    read_opt(j, "seed", c.seed, "config");
    if (j.contains("output_dir")) c.output_dir = detail::resolve_path(base_dir, get_as<std::string>(j, "output_dir", "config"));

    if (j.contains("generator")) {
        const json& g = j["generator"];
        check_keys(g, {"m", "u", "mu", "sigma", "xi", "seed"}, "generator");
        GeneratorSpec s;
        s.m = get_as<double>(g, "m", "generator");
        s.u = get_as<double>(g, "u", "generator");
        s.mu = get_as<double>(g, "mu", "generator");
        s.sigma = get_as<double>(g, "sigma", "generator");
        s.xi = get_as<double>(g, "xi", "generator");
        s.seed = c.seed;
        read_opt(g, "seed", s.seed, "generator");
        s.validate();
        c.generator = s;
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, {"exceedances", "series", "u", "m", "gap_days", "season_months"}, "data");
        DataSource ds;
        if (d.contains("exceedances")) ds.exceedances = detail::resolve_path(base_dir, get_as<std::string>(d, "exceedances", "data"));
        if (d.contains("series")) ds.series = detail::resolve_path(base_dir, get_as<std::string>(d, "series", "data"));
        if (ds.exceedances.has_value() == ds.series.has_value())
            throw config_error("data: give exactly one of 'exceedances' or 'series'");
        if (d.contains("u")) ds.u = get_as<double>(d, "u", "data");
        if (d.contains("m")) ds.m = get_as<double>(d, "m", "data");
        read_opt(d, "gap_days", ds.decluster.gap_days, "data");
        if (d.contains("season_months")) {
            for (unsigned mth : get_as<std::vector<unsigned>>(d, "season_months", "data")) ds.decluster.season.insert(mth);
        }
        if (ds.series) {
            if (!ds.u || !ds.m) throw config_error("data: a daily series needs 'u' and 'm'");
            ds.decluster.threshold_u = *ds.u;
            ds.decluster.validate();
        }
        c.data = ds;
    }
    if (j.contains("runs")) {
        if (j.contains("model") || j.contains("prior")) throw config_error("config: use either 'runs' or 'model'/'prior'");
        for (const auto& r : j["runs"]) c.runs.push_back(detail::parse_run(r));
        if (c.runs.empty()) throw config_error("config: 'runs' is empty");
    } else if (j.contains("model")) {
        RunSpec r;
        r.param = detail::parse_model(j["model"]);
        if (j.contains("prior")) r.prior = detail::parse_prior(j["prior"]);
        c.runs.push_back(r);
    }
    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        check_keys(s, {"chains", "draws", "burnin", "target_accept", "parallel", "init", "jitter"}, "sampler");
        read_opt(s, "chains", c.sampler.n_chains, "sampler");
        read_opt(s, "draws", c.sampler.n_draws, "sampler");
        read_opt(s, "burnin", c.sampler.n_burnin, "sampler");
        read_opt(s, "target_accept", c.sampler.target_accept, "sampler");
        read_opt(s, "parallel", c.sampler.parallel, "sampler");
        read_opt(s, "jitter", c.sampler.jitter, "sampler");
        if (s.contains("init")) {
            c.sampler.init = InitKind::explicit_values;
            c.sampler.init_values = get_as<std::vector<double>>(s, "init", "sampler");
        }
    }
    c.sampler.seed = c.seed;
    c.sampler.validate();
    if (j.contains("diagnostics")) {
        const json& d = j["diagnostics"];
        check_keys(d, {"max_lag", "ess_points", "curve_points", "threshold", "split"}, "diagnostics");
        read_opt(d, "max_lag", c.diagnostics.max_lag, "diagnostics");
        read_opt(d, "ess_points", c.diagnostics.ess_points, "diagnostics");
        read_opt(d, "curve_points", c.diagnostics.curve_points, "diagnostics");
        read_opt(d, "threshold", c.diagnostics.threshold, "diagnostics");
        read_opt(d, "split", c.diagnostics.split, "diagnostics");
    }
    if (j.contains("return_levels")) {
        const json& r = j["return_levels"];
        check_keys(r, {"t_min", "t_max", "points", "years"}, "return_levels");
        read_opt(r, "t_min", c.return_levels.t_min, "return_levels");
        read_opt(r, "t_max", c.return_levels.t_max, "return_levels");
        read_opt(r, "points", c.return_levels.points, "return_levels");
        if (r.contains("years")) c.return_levels.years = get_as<double>(r, "years", "return_levels");
        if (!(c.return_levels.t_min > 1.0 && c.return_levels.t_max > c.return_levels.t_min && c.return_levels.points >= 2))
            throw config_error("return_levels: need 1 < t_min < t_max and points >= 2");
    }
    if (j.contains("mse")) {
        const json& m = j["mse"];
        check_keys(m, {"xi0", "replications", "estimators", "m", "u", "sigma", "expected_count"}, "mse");
        read_opt(m, "xi0", c.mse.xi0, "mse");
        read_opt(m, "replications", c.mse.replications, "mse");
        read_opt(m, "m", c.mse.m, "mse");
        read_opt(m, "u", c.mse.u, "mse");
        read_opt(m, "sigma", c.mse.sigma, "mse");
        read_opt(m, "expected_count", c.mse.expected_count, "mse");
        if (m.contains("estimators")) {
            for (const auto& e : m["estimators"]) {
                check_keys(e, {"label", "kind", "model", "prior"}, "mse.estimators[]");
                Estimator est;
                const auto kind = get_as<std::string>(e, "kind", "mse.estimators[]");
                if (kind == "posterior_mean")
                    est.kind = EstimatorKind::posterior_mean;
                else if (kind == "max_likelihood")
                    est.kind = EstimatorKind::max_likelihood;
                else if (kind == "oracle")
                    est.kind = EstimatorKind::oracle;
                else
                    throw config_error("mse.estimators[]: unknown kind '" + kind + "'");
                if (e.contains("model")) est.param = detail::parse_model(e["model"]);
                if (e.contains("prior")) est.prior = detail::parse_prior(e["prior"]);
                est.label = e.contains("label") ? get_as<std::string>(e, "label", "mse.estimators[]")
                                                : kind + "_" + est.param.name();
                c.mse.estimators.push_back(est);
            }
        }
    }
    if (j.contains("propriety")) {
        const json& p = j["propriety"];
        check_keys(p, {"x_minus_u", "pc_lambda", "pc_x_minus_u", "cutoffs"}, "propriety");
        read_opt(p, "x_minus_u", c.propriety.x_minus_u, "propriety");
        read_opt(p, "pc_lambda", c.propriety.pc_lambda, "propriety");
        read_opt(p, "pc_x_minus_u", c.propriety.pc_x_minus_u, "propriety");
        read_opt(p, "cutoffs", c.propriety.cutoffs, "propriety");
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    RunConfig c = parse_config(read_json(path), path.parent_path());
    c.source = path;
    return c;
}

/// Exceedance data named by the config: a generated sample, an exceedance
/// file or a declustered daily series.
struct LoadedData {
    ExceedanceData data;
    std::vector<Date> dates;
    std::optional<DeclusterReport> decluster;
    std::optional<GenerateResult> generated;
};

inline LoadedData load_data(const RunConfig& c) {
    LoadedData out;
    if (c.data) {
        const DataSource& ds = *c.data;
        if (ds.exceedances) {
            out.data = read_exceedances(*ds.exceedances, ds.u, ds.m);
        } else {
            const DeclusterResult r = decluster(load_csv(ds.series->string()), ds.decluster, *ds.m);
            out.data = r.data;
            out.dates = r.dates;
            out.decluster = r.report;
        }
        return out;
    }
    if (c.generator) {
        out.generated = generate(*c.generator);
        out.data = out.generated->data;
        return out;
    }
    throw config_error("config: needs a 'data' or a 'generator' section");
}

}  // namespace orthoev
