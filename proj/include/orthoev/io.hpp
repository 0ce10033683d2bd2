#pragma once

// CSV and JSON serialization of chains, data and reports.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orthoev/analysis.hpp"
#include "orthoev/chains.hpp"
#include "orthoev/diagnostics.hpp"
#include "orthoev/error.hpp"
#include "orthoev/ingest.hpp"
#include "orthoev/model.hpp"
#include "orthoev/simgen.hpp"

namespace orthoev {

using json = nlohmann::json;

/// Finite numbers as numbers, everything else as null.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw error("failed writing " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

/// A CSV file as a header and rows of strings.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw parse_error("no column '" + name + "'");
    }

    std::vector<double> numbers(const std::string& name) const {
        const std::size_t k = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            const auto v = detail::parse_number(r.at(k));
            out.push_back(v ? *v : std::nan(""));
        }
        return out;
    }
};

inline CsvTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = detail::split_csv(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) throw parse_error("wrong number of columns", lineno);
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw parse_error("empty CSV " + path.string());
    return t;
}

// ---------------------------------------------------------------------------
// Chains

/// Columns chain, draw, reference coordinates, then raw_<sampling coordinate>.
inline void write_chains_csv(const std::filesystem::path& path, const ChainSet& cs) {
    auto out = open_output(path);
    out << "chain,draw";
    for (const auto& l : cs.labels) out << ',' << l;
    for (const auto& l : cs.raw_labels) out << ",raw_" << l;
    out << '\n';
    for (std::size_t c = 0; c < cs.n_chains; ++c)
        for (std::size_t i = 0; i < cs.n_draws; ++i) {
            out << c << ',' << i;
            for (std::size_t k = 0; k < cs.dim(); ++k) out << ',' << cs.value(c, i, k);
            for (std::size_t k = 0; k < cs.raw_dim(); ++k) out << ',' << cs.raw_value(c, i, k);
            out << '\n';
        }
    if (!out) throw error("failed writing " + path.string());
}

inline json chains_sidecar(const ChainSet& cs) {
    json j;
    j["n_chains"] = cs.n_chains;
    j["n_draws"] = cs.n_draws;
    j["labels"] = cs.labels;
    j["raw_labels"] = cs.raw_labels;
    j["seeds"] = cs.seeds;
    j["acceptance_rates"] = cs.acceptance_rates;
    j["proposal_scales"] = cs.proposal_scales;
    j["reference"] = {{"u", cs.reference.u}, {"m", cs.reference.m}};
    j["m_sampling"] = cs.m_sampling;
    j["excluded_draws"] = cs.excluded_draws;
    return j;
}

/// Read back a chain CSV and its JSON sidecar.
inline ChainSet read_chains(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
    const json j = read_json(sidecar);
    const CsvTable t = read_csv_table(csv);
    ChainSet cs;
    cs.n_chains = j.at("n_chains").get<std::size_t>();
    cs.n_draws = j.at("n_draws").get<std::size_t>();
    cs.labels = j.at("labels").get<std::vector<std::string>>();
    cs.raw_labels = j.at("raw_labels").get<std::vector<std::string>>();
    cs.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cs.acceptance_rates = j.at("acceptance_rates").get<std::vector<double>>();
    cs.proposal_scales = j.at("proposal_scales").get<std::vector<std::vector<double>>>();
    cs.reference = {j.at("reference").at("u").get<double>(), j.at("reference").at("m").get<double>()};
    cs.m_sampling = j.at("m_sampling").get<double>();
    cs.excluded_draws = j.at("excluded_draws").get<std::vector<std::size_t>>();
    if (t.rows.size() != cs.n_chains * cs.n_draws) throw parse_error("chain CSV row count mismatch");
    std::vector<std::vector<double>> ref, raw;
    for (const auto& l : cs.labels) ref.push_back(t.numbers(l));
    for (const auto& l : cs.raw_labels) raw.push_back(t.numbers("raw_" + l));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (auto& col : ref) cs.draws.push_back(col[r]);
        for (auto& col : raw) cs.raw_draws.push_back(col[r]);
    }
    if (cs.labels == std::vector<std::string>{"mu", "sigma", "xi"})
        cs.family = ChainFamily::poisson_process;
    else if (cs.labels == std::vector<std::string>{"sigma_tilde", "xi"})
        cs.family = ChainFamily::gpd;
    return cs;
}

// ---------------------------------------------------------------------------
// Exceedances

/// Columns date, value (date empty for simulated data); u and m go to a
/// JSON sidecar next to the file.
inline void write_exceedances(const std::filesystem::path& path, const ExceedanceData& d,
                              const std::vector<Date>& dates = {}, const json& extra = {}) {
    auto out = open_output(path);
    out << "date,value\n";
    for (std::size_t i = 0; i < d.xs.size(); ++i) {
        if (i < dates.size()) out << format_date(dates[i]);
        out << ',' << d.xs[i] << '\n';
    }
    if (!out) throw error("failed writing " + path.string());
    json j = extra.is_object() ? extra : json::object();
    j["u"] = d.u;
    j["m"] = d.m;
    j["n_u"] = d.n_u();
    auto side = path;
    side.replace_extension(".json");
    write_json(side, j);
}

/// Reads the value column. u and m come from the arguments when given,
/// otherwise from the JSON sidecar.
inline ExceedanceData read_exceedances(const std::filesystem::path& path, std::optional<double> u = {},
                                       std::optional<double> m = {}) {
    const CsvTable t = read_csv_table(path);
    ExceedanceData d;
    d.xs = t.numbers("value");
    for (std::size_t i = 0; i < d.xs.size(); ++i)
        if (!std::isfinite(d.xs[i])) throw parse_error("invalid exceedance value", i + 2);
    auto side = path;
    side.replace_extension(".json");
    json j;
    if ((!u || !m) && std::filesystem::exists(side)) j = read_json(side);
    if (u)
        d.u = *u;
    else if (j.contains("u"))
        d.u = j["u"].get<double>();
    else
        throw config_error("threshold u not given and no sidecar " + side.string());
    if (m)
        d.m = *m;
    else if (j.contains("m"))
        d.m = j["m"].get<double>();
    else
        throw config_error("scaling factor m not given and no sidecar " + side.string());
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const std::vector<CoordinateSummary>& s) {
    json arr = json::array();
    for (const auto& c : s) {
        json row;
        row["parameter"] = c.label;
        row["mean"] = json_number(c.mean);
        row["sd"] = json_number(c.sd);
        row["ci_2.5%"] = json_number(c.ci_lo);
        row["ci_97.5%"] = json_number(c.ci_hi);
        row["ess"] = c.ess ? json_number(*c.ess) : json(nullptr);
        row["rhat_inf"] = c.rhat_inf ? json_number(*c.rhat_inf) : json(nullptr);
        arr.push_back(row);
    }
    return arr;
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<CoordinateSummary>& s) {
    auto out = open_output(path);
    out << "parameter,mean,sd,ci_2.5%,ci_97.5%,ess,rhat_inf\n";
    for (const auto& c : s) {
        out << c.label << ',' << c.mean << ',' << c.sd << ',' << c.ci_lo << ',' << c.ci_hi << ',';
        if (c.ess) out << *c.ess;
        out << ',';
        if (c.rhat_inf) out << *c.rhat_inf;
        out << '\n';
    }
}

inline json to_json(const SharkeyResult& r) {
    json j;
    j["m1"] = r.m1;
    j["m2"] = r.m2;
    j["chosen_m"] = r.chosen_m;
    j["xi_hat"] = r.xi_hat;
    j["x1"] = r.x1;
    j["x2"] = r.x2 ? json(*r.x2) : json(nullptr);
    j["x2_roots"] = r.x2_roots;
    j["multiple_roots"] = r.multiple_roots;
    j["positive_root"] = r.positive_root;
    j["fallback"] = r.fallback;
    j["acov_at_roots"] = {{"sigma_xi_at_x1", r.acov_at_roots.sigma_xi}, {"mu_sigma_at_x2", r.acov_at_roots.mu_sigma}};
    return j;
}

inline json to_json(const DiagnosticsReport& rep) {
    json j;
    j["threshold"] = rep.threshold;
    j["split"] = rep.split;
    j["total_ess"] = rep.total_ess();
    j["all_below_threshold"] = rep.all_below_threshold();
    json coords = json::array();
    for (const auto& c : rep.coords) {
        coords.push_back({{"parameter", c.label},
                          {"constant", c.constant},
                          {"ess", c.ess ? json_number(*c.ess) : json(nullptr)},
                          {"rhat_inf", json_number(c.rhat_inf)}});
    }
    j["coordinates"] = coords;
    return j;
}

/// acf.csv, ess.csv and rhat.csv with a leading `run` column.
struct DiagnosticsCsv {
    std::ofstream acf, ess, rhat;

    explicit DiagnosticsCsv(const std::filesystem::path& dir)
        : acf(open_output(dir / "acf.csv")), ess(open_output(dir / "ess.csv")), rhat(open_output(dir / "rhat.csv")) {
        acf << "run,parameter,lag,rho\n";
        ess << "run,parameter,draws,ess\n";
        rhat << "run,parameter,x,rhat\n";
    }

    void add(const std::string& run, const DiagnosticsReport& rep) {
        for (const auto& c : rep.coords) {
            for (std::size_t t = 0; t < c.acf.size(); ++t) acf << run << ',' << c.label << ',' << t << ',' << c.acf[t] << '\n';
            for (const auto& [n, e] : c.ess_trajectory) ess << run << ',' << c.label << ',' << n << ',' << e << '\n';
            for (const auto& [x, r] : c.rhat_curve) rhat << run << ',' << c.label << ',' << x << ',' << r << '\n';
        }
    }
};

inline void write_return_levels_csv(std::ofstream& out, const std::string& run, const ReturnLevelCurve& c) {
    for (std::size_t j = 0; j < c.periods.size(); ++j)
        out << run << ',' << c.periods[j] << ',' << c.mean[j] << ',' << c.lo[j] << ',' << c.hi[j] << ','
            << c.relative_width[j] << '\n';
}

inline void write_mse_csv(const std::filesystem::path& path, const MseReport& rep) {
    auto out = open_output(path);
    out << "estimator,xi0,mse,bias2,variance,n_ok,n_failed\n";
    for (const auto& r : rep.rows)
        out << r.estimator << ',' << r.xi0 << ',' << r.mse << ',' << r.bias2 << ',' << r.variance << ',' << r.n_ok
            << ',' << r.n_failed << '\n';
}

inline json to_json(const DeclusterReport& r) {
    return {{"rows", r.n_total},
            {"observed", r.n_observed},
            {"in_season", r.n_in_season},
            {"exceedances", r.n_exceedances},
            {"clusters", r.n_clusters}};
}

}  // namespace orthoev
