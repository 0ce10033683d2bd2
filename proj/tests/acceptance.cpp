// Acceptance runner: `orthoev_acceptance [id...]` prints one PASS/FAIL line
// per criterion and exits nonzero if any selected criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "orthoev/orthoev.hpp"
#include "support.hpp"

using namespace orthoev;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[miss] ";
        }
        detail << what << "; ";
    }
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

double round_sig(double v, int digits) {
    const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(v)))));
    return std::round(v * scale) / scale;
}

bool same_4_sig(double a, double b) { return round_sig(a, 4) == round_sig(b, 4); }

// ---------------------------------------------------------------------------

Outcome intensities() {
    Outcome o;
    struct Case {
        GeneratorSpec g;
        double quoted;  // value stated to 4 significant figures, 0 when none
        double rounded; // nearest integer
    };
    for (const Case& c : {Case{{40, 30, 50, 15, -0.25, 1}, 126.42, 126.0}, Case{{5, 10, 30, 15, 0.7, 1}, 0.0, 239.0},
                          Case{{20, 20, 25, 5, 0.0, 1}, 54.37, 54.0}}) {
        const GeneratorSpec& g = c.g;
        const double oracle = g.xi == 0.0 ? g.m * std::exp(-(g.u - g.mu) / g.sigma)
                                          : g.m * std::pow(1.0 + g.xi * (g.u - g.mu) / g.sigma, -1.0 / g.xi);
        const double r = to_orthogonal(g.params(), g.context()).r;
        o.check(same_4_sig(r, oracle), "xi=" + fmt(g.xi) + " r=" + fmt(r, 7) + " oracle=" + fmt(oracle, 7));
        if (c.quoted > 0.0) o.check(same_4_sig(r, c.quoted), "quoted " + fmt(c.quoted));
        o.check(std::round(r) == c.rounded, "rounds to " + fmt(c.rounded));
    }
    return o;
}

Outcome propriety() {
    Outcome o;
    for (double y : {0.5, 1.0, 5.0}) {
        const auto r = propriety_oracle_jeffreys(y);
        o.check(r.relative_difference() < 0.005,
                "x-u=" + fmt(y) + " numeric=" + fmt(r.numeric) + " analytic=" + fmt(r.analytic) +
                    " rel=" + fmt(r.relative_difference(), 3));
    }
    return o;
}

double pc_mass(const PcPriorConfig& cfg) {
    using boost::math::quadrature::gauss_kronrod;
    const auto dens = [&](double xi) { return std::exp(pc_log_density(xi, cfg)); };
    const auto left = [&](double t) {
        const double xi = -t / (1.0 - t);
        return dens(xi) / ((1.0 - t) * (1.0 - t));
    };
    const auto right = [&](double t) {
        const double xi = 1.0 - 1.0 / (t * t);
        return dens(xi) * 2.0 / (t * t * t);
    };
    return gauss_kronrod<double, 61>::integrate(left, 0.0, 1.0, 25, 1e-13) +
           gauss_kronrod<double, 61>::integrate(right, 1.0, std::numeric_limits<double>::infinity(), 25, 1e-13);
}

Outcome pc_prior() {
    Outcome o;
    struct Row {
        double lambda, lo, hi;
    };
    const Row table[] = {{0.5, -36.8, 0.97}, {1, -9.88, 0.90}, {3, -1.61, 0.61},
                         {5, -0.80, 0.44},   {10, -0.34, 0.25}, {15, -0.22, 0.18}};
    for (const Row& t : table) {
        const double mass = pc_mass({t.lambda, false});
        o.check(std::abs(mass - 1.0) < 1e-6, "lambda=" + fmt(t.lambda) + " mass=" + fmt(mass, 10));
        const auto [lo, hi] = pc_credible_interval(0.95, {t.lambda, false});
        o.check(std::abs(lo - t.lo) <= 0.02, "PC lo " + fmt(lo, 5) + " vs " + fmt(t.lo));
        o.check(std::abs(hi - t.hi) <= 0.02, "PC hi " + fmt(hi, 5) + " vs " + fmt(t.hi));
        const auto [llo, lhi] = pc_credible_interval(0.95, {t.lambda, true});
        const double half = std::log(20.0) / t.lambda;
        o.check(std::abs(llo + half) < 1e-10 && std::abs(lhi - half) < 1e-10, "Laplace +-" + fmt(half, 5));
    }
    return o;
}

Outcome fisher() {
    Outcome o;
    const OrthogonalParams p{50.0, 10.0, 0.2};
    const Eigen::Matrix3d mc = orthoev::testing::mc_fisher_orthogonal(p, 10000, 4);
    const Eigen::Matrix3d ex = fisher_information(p);
    for (int i = 0; i < 3; ++i)
        o.check(std::abs(mc(i, i) / ex(i, i) - 1.0) < 0.05,
                "I" + std::to_string(i) + std::to_string(i) + " mc=" + fmt(mc(i, i)) + " exact=" + fmt(ex(i, i)));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double bound = 0.05 * std::sqrt(ex(i, i) * ex(j, j));
            o.check(std::abs(mc(i, j)) < bound,
                    "I" + std::to_string(i) + std::to_string(j) + " mc=" + fmt(mc(i, j), 3) + " bound=" + fmt(bound, 3));
        }
    return o;
}

Outcome sharkey() {
    Outcome o;
    for (double xi : {-0.4, -0.1, 0.3, 0.7}) {
        const double v = acov_offdiag(1.0 / (1.0 + xi), 1.0, xi, 1.0).sigma_xi;
        o.check(std::abs(v) < 1e-10, "ACov_sx(1/(1+xi)) xi=" + fmt(xi) + " = " + fmt(v, 3));
    }
    for (double xi : {-0.3, 0.3}) o.check(acov_offdiag(0.0, 1.0, xi, 1.0).mu_xi == 0.0, "ACov_mx(0)=0 xi=" + fmt(xi));
    struct Point {
        double mu, sigma, xi, u, m;
    };
    for (const Point& p : {Point{50, 15, 0.3, 30, 40}, Point{25, 5, -0.25, 20, 20}, Point{30, 15, 0.7, 10, 5}}) {
        const Eigen::Matrix3d cov = orthoev::testing::pp_fisher_original(p.mu, p.sigma, p.xi, p.u, p.m).inverse();
        const double x = std::log(to_orthogonal({p.mu, p.sigma, p.xi}, {p.u, p.m}).r / p.m);
        const auto a = acov_offdiag(x, p.sigma, p.xi, p.m);
        const double e1 = a.mu_sigma / cov(0, 1) - 1.0, e2 = a.mu_xi / cov(0, 2) - 1.0, e3 = a.sigma_xi / cov(1, 2) - 1.0;
        o.check(std::abs(e1) < 0.02 && std::abs(e2) < 0.02 && std::abs(e3) < 0.02,
                "inverse-Fisher xi=" + fmt(p.xi) + " rel " + fmt(e1, 2) + "," + fmt(e2, 2) + "," + fmt(e3, 2));
    }
    return o;
}

Outcome mixing() {
    Outcome o;
    for (const char* name : {"compare_xi_negative.json", "compare_xi_zero.json", "compare_xi_positive.json"}) {
        const RunConfig base = load_config(fs::path(ORTHOEV_CONFIG_DIR) / name);
        int wins = 0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            GeneratorSpec g = *base.generator;
            g.seed = seed;
            const ExceedanceData d = generate(g).data;
            SamplerConfig sc = base.sampler;
            sc.seed = seed;
            double orth_ess = 0.0, best_other = 0.0;
            bool orth_ok = false, other_violates = false;
            for (const RunSpec& r : base.runs) {
                DiagnosticsReport rep;
                try {
                    rep = diagnose(sample_posterior(r.param, r.prior, d, sc).chains, base.diagnostics);
                } catch (const error&) {
                    if (r.param.kind != ModelKind::pp_orthogonal) other_violates = true;
                    continue;
                }
                if (r.param.kind == ModelKind::pp_orthogonal) {
                    orth_ess = rep.total_ess();
                    orth_ok = rep.all_below_threshold();
                } else {
                    best_other = std::max(best_other, rep.total_ess());
                    other_violates = other_violates || !rep.all_below_threshold();
                }
            }
            wins += orth_ess > best_other && orth_ok && other_violates;
        }
        o.check(wins >= 8, std::string(name) + " " + std::to_string(wins) + "/10 seeds");
    }
    return o;
}

Outcome mse() {
    Outcome o;
    const RunConfig c = load_config(fs::path(ORTHOEV_CONFIG_DIR) / "mse_parameterizations.json");
    MseConfig mc;
    mc.xi0_grid = c.mse.xi0;
    mc.n_rep = c.mse.replications;
    mc.estimators = c.mse.estimators;
    mc.m = c.mse.m;
    mc.u = c.mse.u;
    mc.sigma = c.mse.sigma;
    mc.expected_count = c.mse.expected_count;
    mc.seed = c.seed;
    mc.sampler = c.sampler;
    const MseReport rep = mse_study(mc);
    for (double xi0 : mc.xi0_grid) {
        const double orth = rep.row("orthogonal", xi0).mse, orig = rep.row("original", xi0).mse;
        o.check(orth <= 0.5 * orig,
                "xi0=" + fmt(xi0) + " MSE orth=" + fmt(orth, 4) + " orig=" + fmt(orig, 4) + " ratio=" + fmt(orth / orig, 3));
    }
    return o;
}

Outcome return_levels() {
    Outcome o;
    const double plug = return_level({2560.8, 919.6, 0.015}, 100.0);
    o.check(std::abs(plug / 6949.0 - 1.0) < 0.01, "plug-in l100=" + fmt(plug) + " vs 6949");

    const fs::path garonne = fs::path(ORTHOEV_DATA_DIR) / "garonne.csv";
    SamplerConfig sc;
    sc.n_draws = 5000;
    sc.n_burnin = 1000;
    sc.seed = 1;
    ExceedanceData d;
    OriginalParams truth = orthoev::testing::garonne_truth;
    std::string source;
    if (fs::exists(garonne)) {
        DeclusterConfig dc;
        dc.threshold_u = orthoev::testing::garonne_u;
        dc.season = {12, 1, 2, 3, 4, 5};
        d = decluster(load_csv(garonne.string()), dc, orthoev::testing::garonne_years).data;
        source = "garonne.csv";
    } else {
        d = orthoev::testing::garonne_fixture().data;
        source = "synthetic fixture";
    }
    o.check(d.n_u() == 182, source + " n_u=" + std::to_string(d.n_u()));
    const auto run = sample_posterior({}, PriorSpec::jeffreys_orthogonal(), d, sc);
    const auto s = summarize(run.chains);
    const double t[3] = {truth.mu, truth.sigma, truth.xi};
    for (int k = 0; k < 3; ++k)
        o.check(std::abs(s[k].mean - t[k]) < 3.0 * s[k].sd,
                s[k].label + " mean=" + fmt(s[k].mean) + " sd=" + fmt(s[k].sd, 3) + " target=" + fmt(t[k]));
    const auto curve = return_level_curve(run.chains, {100.0, 1000.0});
    o.detail << "posterior mean l100=" << fmt(curve.mean[0]) << " l1000=" << fmt(curve.mean[1]) << "; ";
    return o;
}

Outcome properties() {
    Outcome o;
    const std::string cmd = std::string("\"") + ORTHOEV_UNIT_TESTS + "\" --gtest_filter='*Property*' --gtest_brief=1";
    const int status = std::system(cmd.c_str());
    o.check(WIFEXITED(status) && WEXITSTATUS(status) == 0, "unit property suites (*Property*)");
    return o;
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
    {1, {"intensity oracle", intensities}},
    {2, {"Jeffreys propriety quadrature", propriety}},
    {3, {"PC prior normalization and intervals", pc_prior}},
    {4, {"Fisher orthogonality (Monte Carlo)", fisher}},
    {5, {"scaling-factor roots and covariances", sharkey}},
    {6, {"mixing ordering across parameterizations", mixing}},
    {7, {"shape MSE orthogonal vs original", mse}},
    {8, {"return levels and 182-cluster pipeline", return_levels}},
    {9, {"property suites", properties}},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) ids.push_back(std::atoi(argv[i]));
    if (ids.empty())
        for (const auto& [id, _] : criteria) ids.push_back(id);
    bool all = true;
    for (int id : ids) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << id << '\n';
            return 2;
        }
        Outcome out;
        try {
            out = it->second.second();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "exception: " << e.what();
        }
        std::cout << "criterion " << id << " [" << it->second.first << "]: " << (out.pass ? "PASS" : "FAIL") << " -- "
                  << out.detail.str() << std::endl;
        all = all && out.pass;
    }
    return all ? 0 : 1;
}
