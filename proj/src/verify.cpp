#include "guidelab/verify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

#include "guidelab/config.hpp"
#include "guidelab/presets.hpp"

namespace guidelab {

namespace {

std::size_t scaled(std::size_t trials, const VerifyOptions& o) { return o.fast ? std::max<std::size_t>(trials / 10, 1) : trials; }

IdentityReport closed_form(std::string name, double worst, double tol, std::size_t cases) {
    IdentityReport r = make_report(std::move(name), worst, 0.0, 0.0, 0.0, 0.0, cases, tol);
    r.max_abs_error = worst;
    return r;
}

std::vector<IdentityReport> scores(const VerifyOptions& o) {
    const double worst = check_score_finite_differences(1000, o.seed);
    return {closed_form("scores", worst, 1e-5, 1000)};
}

std::vector<IdentityReport> scorematch(const VerifyOptions& o) {
    std::vector<double> s_grid;
    for (int i = 1; i <= 49; ++i) s_grid.push_back(i / 50.0);
    std::vector<Vec> x_grid;
    for (int i = 0; i <= 100; ++i) x_grid.push_back(Vec{-6.0 + 0.12 * i});
    double worst = check_scorematch_identity(presets::symmetric_bimodal(1.0), QuadraticWell{Vec{2.0}, 1.0}, s_grid,
                                             x_grid);

    // Random mixtures and well strengths in one and two dimensions.
    for (std::uint64_t c = 0; c < 100; ++c) {
        Rng rng(o.seed, c, 3);
        const int d = 1 + static_cast<int>(c % 2);
        const int k = 1 + static_cast<int>(rng.uniform() * 4);
        std::vector<double> weights;
        std::vector<double> variances;
        std::vector<Vec> means;
        for (int j = 0; j < k; ++j) {
            weights.push_back(0.1 + rng.uniform());
            variances.push_back(0.3 + 1.7 * rng.uniform());
            Vec m(static_cast<std::size_t>(d));
            for (double& v : m) v = 2.0 * rng.normal();
            means.push_back(m);
        }
        Vec target(static_cast<std::size_t>(d));
        for (double& v : target) v = 2.0 * rng.normal();
        const double beta = 0.05 + 2.0 * rng.uniform();
        std::vector<Vec> xs;
        for (int j = 0; j < 20; ++j) {
            Vec x(static_cast<std::size_t>(d));
            for (double& v : x) v = 3.0 * rng.normal();
            xs.push_back(x);
        }
        const std::vector<double> ss = {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
        worst = std::max(worst, check_scorematch_identity(IsotropicGmm::from_weights(weights, means, variances),
                                                          QuadraticWell{target, beta}, ss, xs));
    }
    return {closed_form("scorematch", worst, 1e-9, 49 * 101 + 100 * 7 * 20)};
}

std::vector<IdentityReport> e_j0(const VerifyOptions& o) {
    return {check_cfg_cost_identity(presets::two_class_mixture(),
                                    CfgCostOptions{scaled(1000000, o), o.seed, o.workers, 1000})};
}

std::vector<IdentityReport> lemma2(const VerifyOptions& o) {
    const auto rm = RewardedModel::make(presets::symmetric_bimodal(1.0), presets::well_at_two(1.0));
    const Schedule s = Schedule::build(2000);
    const double dt = window_length(s, 0.5, 10);
    auto reps = check_lemma2(rm, s, 0.5, dt, {Vec{0.5}, Vec{-0.5}}, Vec{0.0},
                             Lemma2Options{scaled(1000000, o), o.seed, o.workers, true});
    reps[0].name = "lemma2[g=0.5]";
    reps[1].name = "lemma2[g=-0.5]";
    return reps;
}

std::vector<IdentityReport> lemma3(const VerifyOptions& o) {
    const auto rm = RewardedModel::make(presets::symmetric_bimodal(1.0), presets::well_at_two(1.0));
    return {check_lemma3(rm, Schedule::build(16000), 0.3, 0.7, Vec{0.5},
                         Lemma3Options{scaled(100000, o), o.seed, o.workers})};
}

std::vector<IdentityReport> theorem1(const VerifyOptions& o) {
    const auto rm = RewardedModel::make(presets::symmetric_bimodal(1.0), presets::well_at_two(0.25));
    const auto cfg = GuidanceConfig::reward_improve(rm.original, rm.reweighted, 0.1);
    return {check_theorem1(cfg, rm.mean_reward, Schedule::build(2000),
                           Theorem1Options{Vec{0.0}, scaled(100000, o), o.seed, o.workers})};
}

std::vector<IdentityReport> theorem2(const VerifyOptions& o) {
    const auto pair = presets::two_class_mixture();
    const auto cfg = GuidanceConfig::cost_reduce(pair.conditional(), cost_reweighted(pair), 0.5);
    return {check_theorem1(cfg, 1.0 / pair.prior(), Schedule::build(2000),
                           Theorem1Options{Vec{0.0}, scaled(100000, o), o.seed, o.workers})};
}

std::vector<IdentityReport> corollary1(const VerifyOptions& o) {
    const auto pair = presets::two_class_mixture();
    const Schedule s = Schedule::build(2000);
    std::vector<IdentityReport> out;
    for (double w : {0.5, 2.0}) {
        auto r = check_cost_decrease(pair, w, s, SignCheckOptions{scaled(10000, o), o.seed, o.workers});
        r.name = "corollary1[w=" + format_double(w) + "]";
        out.push_back(r);
    }
    return out;
}

std::vector<IdentityReport> corollary2(const VerifyOptions& o) {
    const auto rm = RewardedModel::make(presets::symmetric_bimodal(1.0), presets::well_at_two(1.0));
    const Schedule s = Schedule::build(2000);
    std::vector<IdentityReport> out;
    for (double w : {0.1, 0.5}) {
        auto r = check_reward_increase(rm, w, s, SignCheckOptions{scaled(10000, o), o.seed, o.workers});
        r.name = "corollary2[w=" + format_double(w) + "]";
        out.push_back(r);
    }
    return out;
}

using CheckFn = std::vector<IdentityReport> (*)(const VerifyOptions&);

const std::map<std::string, CheckFn>& registry() {
    static const std::map<std::string, CheckFn> checks = {
        {"scores", scores},         {"scorematch", scorematch}, {"e_j0", e_j0},
        {"lemma2", lemma2},         {"lemma3", lemma3},         {"theorem1", theorem1},
        {"theorem2", theorem2},     {"corollary1", corollary1}, {"corollary2", corollary2},
    };
    return checks;
}

}  // namespace

const std::vector<std::string>& verification_checks() {
    static const std::vector<std::string> names = {"scores",   "scorematch", "e_j0",       "lemma2",    "lemma3",
                                                   "theorem1", "theorem2",   "corollary1", "corollary2"};
    return names;
}

std::vector<IdentityReport> run_check(const std::string& name, const VerifyOptions& opts) {
    const auto it = registry().find(name);
    if (it == registry().end()) throw Error(ErrorCode::UnknownCheck, "no check named '" + name + "'");
    return it->second(opts);
}

std::string report_csv(const std::vector<IdentityReport>& reports) {
    std::string out = "name,lhs,rhs,stderr,z,passed,tol_abs,max_abs_error,trials\n";
    for (const auto& r : reports)
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.name, format_double(r.lhs), format_double(r.rhs),
                           format_double(r.combined_stderr), format_double(r.z_score), r.passed ? "true" : "false",
                           format_double(r.tol_abs), format_double(r.max_abs_error), r.trials);
    return out;
}

std::vector<IdentityReport> run_verification_suite(const std::vector<std::string>& names, const VerifyOptions& opts,
                                                   const std::function<void(const IdentityReport&)>& on_report) {
    const std::vector<std::string>& todo = names.empty() ? verification_checks() : names;
    for (const auto& n : todo)
        if (!registry().count(n)) throw Error(ErrorCode::UnknownCheck, "no check named '" + n + "'");
    std::vector<IdentityReport> out;
    for (const auto& n : todo)
        for (auto& r : run_check(n, opts)) {
            if (on_report) on_report(r);
            out.push_back(std::move(r));
        }
    return out;
}

}  // namespace guidelab
