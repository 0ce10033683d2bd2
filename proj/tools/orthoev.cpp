#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "orthoev/orthoev.hpp"

namespace fs = std::filesystem;
using namespace orthoev;

namespace {

constexpr const char* out_env = "ORTHOEV_OUT";

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

struct Context {
    RunConfig cfg;
    fs::path out;
    bool complete = true;  // false when some requested output could not be produced
};

fs::path output_dir(const Common& c, const RunConfig& cfg, const std::string& command) {
    if (!c.out.empty()) return c.out;
    if (cfg.output_dir) return *cfg.output_dir;
    const std::string stem = cfg.source.empty() ? command : cfg.source.stem().string();
    if (const char* env = std::getenv(out_env); env && *env) return fs::path(env) / stem;
    return fs::path("orthoev_out") / stem;
}

Context prepare(const Common& c, const std::string& command) {
    Context ctx;
    ctx.cfg = load_config(c.config);
    if (!ctx.cfg.command.empty() && ctx.cfg.command != command)
        std::cerr << "note: config is meant for '" << ctx.cfg.command << "', running '" << command << "'\n";
    if (c.seed) {
        ctx.cfg.seed = *c.seed;
        ctx.cfg.sampler.seed = *c.seed;
        if (ctx.cfg.generator) ctx.cfg.generator->seed = *c.seed;
    }
    ctx.out = output_dir(c, ctx.cfg, command);
    fs::create_directories(ctx.out);
    fs::copy_file(c.config, ctx.out / "config.json", fs::copy_options::overwrite_existing);
    json inv;
    inv["command"] = command;
    inv["seed"] = ctx.cfg.seed;
    inv["seed_overridden"] = c.seed.has_value();
    write_json(ctx.out / "invocation.json", inv);
    return ctx;
}

void plot(const fs::path& csv, const std::string& x, const std::string& y, const std::string& group,
          const std::string& facet, const fs::path& prefix, PlotOptions opt) {
    for (const auto& p : plot_csv(csv, x, y, group, facet, prefix, opt)) std::cout << "  wrote " << p.string() << '\n';
}

void plot_diagnostics(const fs::path& dir, double threshold) {
    PlotOptions acf{"Autocorrelation", "lag", "rho", false, std::nullopt};
    plot(dir / "acf.csv", "lag", "rho", "run", "parameter", dir / "acf", acf);
    PlotOptions ess{"Effective sample size", "draws", "ESS", false, std::nullopt};
    plot(dir / "ess.csv", "draws", "ess", "run", "parameter", dir / "ess", ess);
    PlotOptions rh{"Local R-hat", "x", "R-hat(x)", false, threshold};
    plot(dir / "rhat.csv", "x", "rhat", "run", "parameter", dir / "rhat", rh);
}

json data_report(const LoadedData& ld) {
    json j;
    j["u"] = ld.data.u;
    j["m"] = ld.data.m;
    j["n_u"] = ld.data.n_u();
    if (ld.decluster) j["decluster"] = to_json(*ld.decluster);
    if (ld.generated) {
        j["intensity"] = ld.generated->intensity;
        j["regenerations"] = ld.generated->regenerations;
        j["warnings"] = ld.generated->warnings;
    }
    return j;
}

std::string safe_name(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    return s;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Common& c) {
    Context ctx = prepare(c, "simulate");
    if (!ctx.cfg.generator) throw config_error("simulate: config needs a 'generator' section");
    const GenerateResult g = generate(*ctx.cfg.generator);
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << '\n';
    const GeneratorSpec& s = *ctx.cfg.generator;
    json extra{{"generator", {{"m", s.m}, {"u", s.u}, {"mu", s.mu}, {"sigma", s.sigma}, {"xi", s.xi}, {"seed", s.seed}}},
               {"intensity", g.intensity},
               {"regenerations", g.regenerations},
               {"warnings", g.warnings}};
    write_exceedances(ctx.out / "exceedances.csv", g.data, {}, extra);
    std::cout << "n_u = " << g.data.n_u() << " (expected " << g.intensity << ")\n";
    std::cout << "  wrote " << (ctx.out / "exceedances.csv").string() << '\n';
    return 0;
}

struct RunOutput {
    PosteriorRun run;
    DiagnosticsReport diag;
    std::vector<CoordinateSummary> summary;
};

RunOutput fit_one(const RunSpec& spec, const ExceedanceData& d, const RunConfig& cfg) {
    RunOutput o;
    o.run = sample_posterior(spec.param, spec.prior, d, cfg.sampler);
    o.diag = diagnose(o.run.chains, cfg.diagnostics);
    o.summary = summarize(o.run.chains);
    return o;
}

json run_json(const RunSpec& spec, const RunOutput& o) {
    json j;
    j["run"] = spec.name();
    j["model"] = o.run.resolved.name();
    j["prior"] = to_string(spec.prior.kind);
    j["m_sampling"] = o.run.chains.m_sampling;
    j["summary"] = to_json(o.summary);
    j["diagnostics"] = to_json(o.diag);
    j["acceptance_rates"] = o.run.chains.acceptance_rates;
    j["excluded_draws"] = o.run.chains.excluded_draws.size();
    if (o.run.sharkey) j["sharkey"] = to_json(*o.run.sharkey);
    return j;
}

int cmd_fit_or_compare(const Common& c, const std::string& command) {
    Context ctx = prepare(c, command);
    if (ctx.cfg.runs.empty()) throw config_error(command + ": config needs 'model' or 'runs'");
    if (command == "fit" && ctx.cfg.runs.size() != 1) throw config_error("fit: expects a single model; use compare");
    const LoadedData ld = load_data(ctx.cfg);
    json report;
    report["data"] = data_report(ld);
    report["seed"] = ctx.cfg.seed;
    report["runs"] = json::array();
    DiagnosticsCsv dcsv(ctx.out);
    for (const auto& spec : ctx.cfg.runs) {
        const std::string name = spec.name();
        std::cout << name << ": sampling " << ctx.cfg.sampler.n_chains << " x " << ctx.cfg.sampler.n_draws << '\n';
        try {
            const RunOutput o = fit_one(spec, ld.data, ctx.cfg);
            const std::string base = command == "fit" ? std::string("chains") : "chains_" + safe_name(name);
            write_chains_csv(ctx.out / (base + ".csv"), o.run.chains);
            write_json(ctx.out / (base + ".json"), chains_sidecar(o.run.chains));
            if (command == "fit") write_summary_csv(ctx.out / "summary.csv", o.summary);
            dcsv.add(name, o.diag);
            report["runs"].push_back(run_json(spec, o));
            for (const auto& s : o.summary)
                std::cout << "  " << s.label << " mean " << s.mean << " sd " << s.sd << " ESS " << s.ess.value_or(0.0)
                          << " Rhat_inf " << s.rhat_inf.value_or(1.0) << '\n';
        } catch (const error& e) {
            std::cerr << name << ": failed: " << e.what() << '\n';
            report["runs"].push_back({{"run", name}, {"failed", true}, {"error", e.what()}});
            ctx.complete = false;
        }
    }
    dcsv.acf.flush();
    dcsv.ess.flush();
    dcsv.rhat.flush();
    write_json(ctx.out / (command == "fit" ? "summary.json" : "comparison.json"), report);
    plot_diagnostics(ctx.out, ctx.cfg.diagnostics.threshold);
    return ctx.complete ? 0 : 3;
}

int cmd_return_levels(const Common& c) {
    Context ctx = prepare(c, "return-levels");
    if (ctx.cfg.runs.empty()) throw config_error("return-levels: config needs 'model' or 'runs'");
    const LoadedData ld = load_data(ctx.cfg);
    const auto& rl = ctx.cfg.return_levels;
    const auto periods = log_spaced(rl.t_min, rl.t_max, rl.points);
    auto out = open_output(ctx.out / "return_levels.csv");
    out << "run,T,mean,lo,hi,relative_width\n";
    json report;
    report["data"] = data_report(ld);
    report["runs"] = json::array();
    for (const auto& spec : ctx.cfg.runs) {
        const std::string name = spec.name();
        std::cout << name << '\n';
        try {
            const RunOutput o = fit_one(spec, ld.data, ctx.cfg);
            const ChainSet chains = rl.years ? rescale_chains(o.run.chains, *rl.years) : o.run.chains;
            const ReturnLevelCurve curve = return_level_curve(chains, periods);
            write_return_levels_csv(out, name, curve);
            json j = run_json(spec, o);
            j["excluded_draws_return_level"] = curve.excluded;
            if (curve.excluded_warning) {
                std::cerr << "warning: " << name << ": " << curve.excluded << " draws give no finite return level\n";
                j["warning"] = "more than 1% of draws excluded";
            }
            report["runs"].push_back(j);
        } catch (const error& e) {
            std::cerr << name << ": failed: " << e.what() << '\n';
            report["runs"].push_back({{"run", name}, {"failed", true}, {"error", e.what()}});
            ctx.complete = false;
        }
    }
    out.close();
    write_json(ctx.out / "return_levels.json", report);
    PlotOptions lv{"Return level (posterior mean)", "T", "level", true, std::nullopt};
    plot(ctx.out / "return_levels.csv", "T", "mean", "run", "", ctx.out / "return_levels", lv);
    PlotOptions wd{"Relative width of the 95% interval", "T", "width / mean", true, std::nullopt};
    plot(ctx.out / "return_levels.csv", "T", "relative_width", "run", "", ctx.out / "return_level_width", wd);
    return ctx.complete ? 0 : 3;
}

int cmd_mse(const Common& c) {
    Context ctx = prepare(c, "mse");
    const MseOptions& o = ctx.cfg.mse;
    if (o.estimators.empty()) throw config_error("mse: config needs 'mse.estimators'");
    MseConfig mc;
    mc.xi0_grid = o.xi0;
    mc.n_rep = o.replications;
    mc.estimators = o.estimators;
    mc.m = o.m;
    mc.u = o.u;
    mc.sigma = o.sigma;
    mc.expected_count = o.expected_count;
    mc.seed = ctx.cfg.seed;
    mc.sampler = ctx.cfg.sampler;
    const MseReport rep = mse_study(mc);
    write_mse_csv(ctx.out / "mse.csv", rep);
    json j = json::array();
    for (const auto& r : rep.rows) {
        j.push_back({{"estimator", r.estimator},
                     {"xi0", r.xi0},
                     {"mse", json_number(r.mse)},
                     {"bias2", json_number(r.bias2)},
                     {"variance", json_number(r.variance)},
                     {"n_ok", r.n_ok},
                     {"n_failed", r.n_failed},
                     {"estimates", r.estimates}});
        std::cout << r.estimator << " xi0=" << r.xi0 << " MSE " << r.mse << " (" << r.n_failed << " failed)\n";
    }
    write_json(ctx.out / "mse.json", j);
    PlotOptions p{"MSE of the shape estimate", "xi0", "MSE", false, std::nullopt};
    plot(ctx.out / "mse.csv", "xi0", "mse", "estimator", "", ctx.out / "mse", p);
    return 0;
}

int cmd_check_propriety(const Common& c) {
    Context ctx = prepare(c, "check-propriety");
    const ProprietyOptions& o = ctx.cfg.propriety;
    auto out = open_output(ctx.out / "propriety.csv");
    out << "x_minus_u,numeric,analytic,relative_difference,estimated_error\n";
    json j;
    j["jeffreys"] = json::array();
    for (double y : o.x_minus_u) {
        const ProprietyResult r = propriety_oracle_jeffreys(y);
        out << y << ',' << r.numeric << ',' << r.analytic << ',' << r.relative_difference() << ','
            << r.estimated_error << '\n';
        j["jeffreys"].push_back({{"x_minus_u", y},
                                 {"numeric", r.numeric},
                                 {"analytic", r.analytic},
                                 {"relative_difference", r.relative_difference()}});
        std::cout << "Jeffreys x-u=" << y << ": " << r.numeric << " vs " << r.analytic << '\n';
    }
    out.close();
    const PcProprietyResult pc = pc_propriety_check(o.pc_x_minus_u, {o.pc_lambda, false}, o.cutoffs);
    auto pout = open_output(ctx.out / "propriety_pc.csv");
    pout << "cutoff,mass\n";
    for (std::size_t i = 0; i < pc.cutoffs.size(); ++i) pout << pc.cutoffs[i] << ',' << pc.values[i] << '\n';
    pout.close();
    j["pc"] = {{"lambda", o.pc_lambda},
               {"x_minus_u", o.pc_x_minus_u},
               {"cutoffs", pc.cutoffs},
               {"values", pc.values},
               {"relative_change", pc.relative_change}};
    std::cout << "PC lambda=" << o.pc_lambda << ": relative change " << pc.relative_change << '\n';
    write_json(ctx.out / "propriety.json", j);
    PlotOptions p{"Jeffreys normalizing constant", "x - u", "value", false, std::nullopt};
    plot(ctx.out / "propriety.csv", "x_minus_u", "numeric", "", "", ctx.out / "propriety", p);
    return 0;
}

int cmd_decluster(const Common& c) {
    Context ctx = prepare(c, "decluster");
    if (!ctx.cfg.data || !ctx.cfg.data->series) throw config_error("decluster: config needs 'data.series'");
    const DataSource& ds = *ctx.cfg.data;
    const DeclusterResult r = decluster(load_csv(ds.series->string()), ds.decluster, *ds.m);
    write_exceedances(ctx.out / "exceedances.csv", r.data, r.dates, {{"decluster", to_json(r.report)}});
    write_json(ctx.out / "decluster_report.json", to_json(r.report));
    std::cout << r.report.n_total << " rows, " << r.report.n_observed << " observed, " << r.report.n_in_season
              << " in season, " << r.report.n_exceedances << " exceedances, " << r.report.n_clusters
              << " clusters\n";
    auto out = open_output(ctx.out / "clusters.csv");
    out << "index,value\n";
    for (std::size_t i = 0; i < r.data.xs.size(); ++i) out << i << ',' << r.data.xs[i] << '\n';
    out.close();
    PlotOptions p{"Cluster maxima", "cluster", "value", false, ds.decluster.threshold_u};
    plot(ctx.out / "clusters.csv", "index", "value", "", "", ctx.out / "clusters", p);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian extreme-value inference with orthogonal parameterizations"};
    app.require_subcommand(1);
    Common common;
    std::uint64_t seed = 0;

    const auto add = [&](const std::string& name, const std::string& desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("-c,--config", common.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", common.out, std::string("output directory (default: config, then $") + out_env + ")");
        sub->add_option("-s,--seed", seed, "override the config seed");
        return sub;
    };
    CLI::App* simulate = add("simulate", "generate Poisson-process exceedances");
    CLI::App* fit = add("fit", "sample one posterior and write chains, summary and diagnostics");
    CLI::App* compare = add("compare", "sample several parameterizations on one dataset");
    CLI::App* levels = add("return-levels", "posterior return-level curves for one or more priors");
    CLI::App* mse = add("mse", "replicated simulation study of the shape estimate");
    CLI::App* propriety = add("check-propriety", "quadrature checks of posterior propriety for one observation");
    CLI::App* declus = add("decluster", "season filter and runs declustering of a daily series");

    CLI11_PARSE(app, argc, argv);
    for (CLI::App* sub : app.get_subcommands())
        if (sub->count("--seed")) common.seed = seed;

    try {
        if (*simulate) return cmd_simulate(common);
        if (*fit) return cmd_fit_or_compare(common, "fit");
        if (*compare) return cmd_fit_or_compare(common, "compare");
        if (*levels) return cmd_return_levels(common);
        if (*mse) return cmd_mse(common);
        if (*propriety) return cmd_check_propriety(common);
        if (*declus) return cmd_decluster(common);
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 4;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 5;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 7;
    }
    return 1;
}
