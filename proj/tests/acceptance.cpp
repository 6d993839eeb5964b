// Acceptance criteria 1-10, one PASS/FAIL line each.
// Usage: acceptance [criterion numbers...]   (all when none are given)
// The lines also go to acceptance_report.txt in the working directory.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "guidelab/config.hpp"
#include "guidelab/metrics.hpp"
#include "guidelab/presets.hpp"
#include "guidelab/runner.hpp"
#include "guidelab/samplers.hpp"
#include "guidelab/verify.hpp"

using namespace guidelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

const fs::path kScratch = fs::temp_directory_path() / "guidelab_acceptance";

ExperimentConfig shipped(const std::string& name, const std::string& out) {
    auto c = load_config(std::string(GUIDELAB_CONFIG_DIR) + "/" + name);
    c.output = (kScratch / out).string();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string describe(const std::vector<IdentityReport>& reps) {
    std::string s;
    for (const auto& r : reps) {
        if (!s.empty()) s += "; ";
        if (r.max_abs_error > 0.0 && r.combined_stderr == 0.0)
            s += fmt::format("{} max_err={:.3g} (tol {:.0e})", r.name, r.max_abs_error, r.tol_abs);
        else
            s += fmt::format("{} lhs={:.6g} rhs={:.6g} z={:.2f}", r.name, r.lhs, r.rhs, r.z_score);
    }
    return s;
}

bool all_passed(const std::vector<IdentityReport>& reps) {
    for (const auto& r : reps)
        if (!r.passed) return false;
    return !reps.empty();
}

// Independent closed forms for the two-class 1-D mixture: every component has
// unit variance, so the noisy components are N(sqrt(t) mu, 1).
struct TwoClassOracle {
    static double mix(double t, double x, std::initializer_list<std::pair<double, double>> comps, double* score) {
        double p = 0.0, dp = 0.0;
        for (auto [w, mu] : comps) {
            const double m = std::sqrt(t) * mu;
            const double phi = w * std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2.0 * M_PI);
            p += phi;
            dp += phi * (m - x);
        }
        if (score) *score = dp / p;
        return p;
    }
    static double unconditional(double t, double x, double* score) {
        return mix(t, x, {{0.5, 0.0}, {0.25, -1.0}, {0.25, 1.0}}, score);
    }
    static double conditional(double t, double x, double* score) {
        return mix(t, x, {{0.5, -1.0}, {0.5, 1.0}}, score);
    }
};

Outcome criterion1() {
    const auto fd = run_check("scores");
    const auto pair = presets::two_class_mixture();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            const double t = 0.01 + 0.98 * i / 49.0;
            const double x = -5.0 + 10.0 * j / 49.0;
            const double xv[] = {x};
            double su = 0.0, sc = 0.0;
            const double pu = TwoClassOracle::unconditional(t, x, &su);
            const double pc = TwoClassOracle::conditional(t, x, &sc);
            worst = std::max(worst, std::abs(pair.unconditional().noisy_score(t, xv)[0] - su));
            worst = std::max(worst, std::abs(pair.conditional().noisy_score(t, xv)[0] - sc));
            worst = std::max(worst, std::abs(pair.log_classifier_prob(t, xv) - std::log(0.5 * pc / pu)));
        }
    const bool ok = all_passed(fd) && worst <= 1e-12;
    return {ok, describe(fd) + fmt::format("; two-class grid max_err={:.3g} (tol 1e-12)", worst)};
}

Outcome from_check(const std::string& name) {
    const auto reps = run_check(name);
    return {all_passed(reps), describe(reps)};
}

Outcome criterion5() {
    const auto a = run_check("theorem1");
    const auto b = run_check("theorem2");
    const bool positive = a[0].lhs > 0 && a[0].rhs > 0 && b[0].lhs > 0 && b[0].rhs > 0;
    return {all_passed(a) && all_passed(b) && positive, describe(a) + "; " + describe(b) + " [cost-sign mirror]"};
}

Outcome criterion6_and_keep(std::string& metrics_out) {
    auto c = shipped("gmm-cfg.cfg", "gmm-cfg");
    c.workers = 1;
    const auto r = run_experiment(c);
    metrics_out = metrics_csv(c, r);
    bool all_below_one = true;
    int inversions = 0;
    bool inversion_ok = true;
    std::string means;
    for (std::size_t i = 0; i < r.classifier_rows.size(); ++i) {
        const auto& row = r.classifier_rows[i];
        all_below_one = all_below_one && row.proportion_improved < 1.0;
        means += fmt::format("{}{:.4f}", i ? "," : "", row.mean_neg_reciprocal);
        if (i == 0) continue;
        const auto& prev = r.classifier_rows[i - 1];
        if (row.mean_neg_reciprocal <= prev.mean_neg_reciprocal) {
            ++inversions;
            const double se = std::hypot(row.mean_neg_reciprocal_stderr, prev.mean_neg_reciprocal_stderr);
            inversion_ok = inversion_ok && prev.mean_neg_reciprocal - row.mean_neg_reciprocal <= 1.96 * se;
        }
    }
    double max_prop = 0.0;
    for (const auto& row : r.classifier_rows) max_prop = std::max(max_prop, row.proportion_improved);
    const bool ok = all_below_one && inversions <= 1 && inversion_ok && r.classifier_rows.size() == 7;
    return {ok, fmt::format("max proportion_improved={:.4f}; mean -1/p over w: {}; inversions={}", max_prop, means,
                            inversions)};
}

Outcome criterion7() {
    auto c = shipped("gmm-reward.cfg", "gmm-reward");
    c.w_grid = {0.0, 1.0, 2.0};
    const auto r = run_experiment(c);
    const double tv = r.reward_rows[0].tv_to_data.value_or(1.0);
    const double f1 = r.reward_rows[1].window_fraction.value_or(0.0);
    const double f2 = r.reward_rows[2].window_fraction.value_or(0.0);
    return {tv <= 0.05 && f1 >= 0.95 && f2 >= 0.95,
            fmt::format("w=0 TV to data={:.4f} (<= 0.05); in [0.5,3]: w=1 {:.4f}, w=2 {:.4f} (>= 0.95)", tv, f1, f2)};
}

Outcome criterion8() {
    auto c = shipped("swissroll-reward.cfg", "swissroll-reward");
    const auto r = run_experiment(c);
    bool monotone = true;
    std::string fr;
    for (std::size_t i = 0; i < r.reward_rows.size(); ++i) {
        const double f = r.reward_rows[i].window_fraction.value_or(0.0);
        fr += fmt::format("{}w={}:{:.3f}", i ? " " : "", format_double(r.reward_rows[i].w), f);
        if (i && f < r.reward_rows[i - 1].window_fraction.value_or(0.0)) monotone = false;
    }
    const double last = r.reward_rows.back().window_fraction.value_or(0.0);
    return {monotone && last >= 0.99, "in-band fraction " + fr};
}

Outcome criterion9() {
    const auto pair = presets::two_class_mixture();
    const std::vector<int> steps = {250, 500, 1000, 2000};
    const double lo[] = {-6.0}, hi[] = {6.0};
    bool ok = true;
    std::string detail;
    for (const auto& [label, cfg] : std::vector<std::pair<std::string, GuidanceConfig>>{
             {"none", GuidanceConfig::unguided(pair.unconditional())}, {"cfg w=2", GuidanceConfig::cfg(pair, 2.0)}}) {
        const auto sweep = refinement_sweep(cfg, steps, 16000, 1.0, 2.0, 100000, 1);
        std::vector<double> tv;
        for (const auto& e : sweep.endpoints) tv.push_back(shifted_histogram_tv(e, sweep.reference, lo, hi, 100, 32));
        for (std::size_t i = 1; i < tv.size(); ++i) ok = ok && tv[i] < tv[i - 1];
        detail += fmt::format("{}{}: TV {:.5f}", detail.empty() ? "" : "; ", label, fmt::join(tv, " > "));
    }
    return {ok, detail};
}

Outcome criterion10(const std::string& single_worker) {
    auto c = shipped("gmm-cfg.cfg", "gmm-cfg-w4");
    c.workers = 4;
    const auto r = run_experiment(c);
    const std::string four = metrics_csv(c, r);
    const bool same_file = slurp(fs::path(c.output) / "metrics.csv") == slurp(kScratch / "gmm-cfg" / "metrics.csv");
    return {four == single_worker && same_file,
            fmt::format("gmm-cfg metrics.csv with 1 and 4 workers: {}", four == single_worker && same_file
                                                                              ? "byte-identical"
                                                                              : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
    auto wanted = [&](int k) { return only.empty() || only.count(k); };

    fs::create_directories(kScratch);
    std::string gmm_cfg_metrics;
    std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, criterion1},
        {2, [] { return from_check("scorematch"); }},
        {3, [] { return from_check("e_j0"); }},
        {4, [] { return from_check("lemma2"); }},
        {5, criterion5},
        {6, [&] { return criterion6_and_keep(gmm_cfg_metrics); }},
        {7, criterion7},
        {8, criterion8},
        {9, criterion9},
        {10,
         [&] {
             if (gmm_cfg_metrics.empty()) criterion6_and_keep(gmm_cfg_metrics);
             return criterion10(gmm_cfg_metrics);
         }},
    };

    std::ofstream report("acceptance_report.txt");
    int failures = 0;
    for (auto& [k, run] : criteria) {
        if (!wanted(k)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::string line =
            fmt::format("criterion {:>2}: {}  {}  [{:.0f} s]\n", k, o.passed ? "PASS" : "FAIL", o.detail, secs);
        fmt::print("{}", line);
        std::fflush(stdout);
        report << line << std::flush;
        failures += !o.passed;
    }
    fs::remove_all(kScratch);
    return failures == 0 ? 0 : 1;
}
