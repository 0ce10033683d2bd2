#pragma once

// Daily series loading, seasonal filtering and runs declustering.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "orthoev/error.hpp"
#include "orthoev/model.hpp"

namespace orthoev {

using Date = std::chrono::sys_days;

inline std::optional<Date> parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline unsigned month_of(Date d) { return static_cast<unsigned>(std::chrono::year_month_day{d}.month()); }

struct DailySeries {
    std::vector<Date> dates;
    std::vector<double> values;
    std::vector<char> missing;  // 1 where the value is masked

    std::size_t size() const { return dates.size(); }

    void validate() const {
        if (values.size() != dates.size() || missing.size() != dates.size())
            throw domain_error("DailySeries: column lengths differ");
        for (std::size_t i = 1; i < dates.size(); ++i)
            if (!(dates[i - 1] < dates[i])) throw domain_error("DailySeries: dates must be strictly increasing");
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!missing[i] && !std::isfinite(values[i]))
                throw domain_error("DailySeries: unmasked values must be finite");
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

inline const std::string missing_sentinel = "NA";

/// Two columns: ISO-8601 date, value ("NA" masks the entry). An optional
/// header line is recognized when its first field is not a date. Blank lines
/// and lines starting with '#' are skipped.
inline DailySeries parse_daily_csv(std::istream& in) {
    DailySeries s;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto fields = detail::split_csv(t);
        const auto date = fields.empty() ? std::nullopt : parse_date(fields[0]);
        if (first && !date) {
            first = false;
            continue;  // header
        }
        first = false;
        if (fields.size() != 2) throw parse_error("expected 2 columns (date, value)", lineno);
        if (!date) throw parse_error("invalid date '" + fields[0] + "'", lineno);
        if (!s.dates.empty()) {
            if (*date == s.dates.back()) throw parse_error("duplicate date " + fields[0], lineno);
            if (*date < s.dates.back()) throw parse_error("dates not increasing at " + fields[0], lineno);
        }
        s.dates.push_back(*date);
        if (fields[1] == missing_sentinel) {
            s.values.push_back(std::nan(""));
            s.missing.push_back(1);
        } else {
            const auto v = detail::parse_number(fields[1]);
            if (!v) throw parse_error("invalid value '" + fields[1] + "'", lineno);
            s.values.push_back(*v);
            s.missing.push_back(0);
        }
    }
    return s;
}

inline DailySeries load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open " + path);
    return parse_daily_csv(in);
}

struct DeclusterConfig {
    int gap_days = 3;
    std::set<unsigned> season;  // months 1..12; empty = all year
    double threshold_u = 0.0;

    void validate() const {
        if (gap_days < 1) throw config_error("DeclusterConfig: gap_days must be >= 1");
        for (unsigned m : season)
            if (m < 1 || m > 12) throw config_error("DeclusterConfig: months must lie in 1..12");
        if (!std::isfinite(threshold_u)) throw config_error("DeclusterConfig: threshold must be finite");
    }
};

struct DeclusterReport {
    std::size_t n_total = 0;        // rows in the series
    std::size_t n_observed = 0;     // rows with a value
    std::size_t n_in_season = 0;    // observed rows inside the season
    std::size_t n_exceedances = 0;  // in-season values above u
    std::size_t n_clusters = 0;
};

struct DeclusterResult {
    ExceedanceData data;
    std::vector<Date> dates;  // date of each cluster maximum
    DeclusterReport report;
};

/// Season filter, then runs declustering: an exceedance starts a new cluster
/// when at least gap_days calendar days separate it from the previous one.
/// Each cluster is represented by its maximum (first occurrence on ties).
inline DeclusterResult decluster(const DailySeries& s, const DeclusterConfig& cfg, double m = 1.0) {
    s.validate();
    cfg.validate();
    DeclusterResult out;
    out.data.u = cfg.threshold_u;
    out.data.m = m;
    out.report.n_total = s.size();
    std::optional<Date> last;
    std::size_t best = 0;
    bool open = false;
    const auto close = [&]() {
        if (!open) return;
        out.data.xs.push_back(s.values[best]);
        out.dates.push_back(s.dates[best]);
        open = false;
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.missing[i]) continue;
        ++out.report.n_observed;
        if (!cfg.season.empty() && !cfg.season.count(month_of(s.dates[i]))) continue;
        ++out.report.n_in_season;
        if (!(s.values[i] > cfg.threshold_u)) continue;
        ++out.report.n_exceedances;
        if (last && (s.dates[i] - *last).count() >= cfg.gap_days) close();
        if (!open) {
            open = true;
            best = i;
        } else if (s.values[i] > s.values[best]) {
            best = i;
        }
        last = s.dates[i];
    }
    close();
    out.report.n_clusters = out.data.xs.size();
    if (out.data.xs.empty()) throw domain_error("decluster: no exceedances of the threshold");
    if (!(m > 0.0)) throw domain_error("decluster: m must be > 0");
    return out;
}

/// The cluster maxima as a daily series (for re-declustering).
inline DailySeries to_series(const DeclusterResult& r) {
    DailySeries s;
    s.dates = r.dates;
    s.values = r.data.xs;
    s.missing.assign(s.dates.size(), 0);
    return s;
}

}  // namespace orthoev
