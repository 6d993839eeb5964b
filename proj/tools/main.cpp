#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "guidelab/config.hpp"
#include "guidelab/runner.hpp"
#include "guidelab/verify.hpp"

namespace gl = guidelab;
namespace fs = std::filesystem;

namespace {

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool fast = false;
    std::string out;
    bool record_trajectories = false;
    bool decouple_noise = false;
    int workers = -1;
};

struct VerifyArgs {
    std::vector<std::string> names;
    std::uint64_t seed = 1;
    bool fast = false;
    std::string out = ".";
    int workers = 0;
};

struct ScheduleArgs {
    int steps = gl::Schedule::kDefaultSteps;
    double c0 = gl::Schedule::kDefaultC0;
    double c1 = gl::Schedule::kDefaultC1;
    std::string config;
    std::string out;
};

struct ProbeArgs {
    std::string config;
    std::string which = "base";
    std::string quantity = "score";
    std::vector<double> t = {0.1, 0.5, 0.9};
    double lo = -4.0;
    double hi = 4.0;
    int points = 81;
    std::string out;
};

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    f << text;
    f.close();
    if (!f) throw gl::Error(gl::ErrorCode::IoError, "cannot write '" + path + "'");
}

int cmd_run(const RunArgs& a) {
    gl::ExperimentConfig cfg = gl::load_config(a.config);
    if (a.seed) cfg.master_seed = *a.seed;
    if (a.fast) cfg.trials = std::max<std::size_t>(cfg.trials / 10, 1);
    if (!a.out.empty()) cfg.output = a.out;
    if (a.record_trajectories) cfg.record_trajectories = true;
    if (a.decouple_noise) cfg.decouple_noise = true;
    if (a.workers >= 0) cfg.workers = a.workers;
    cfg.validate();

    const auto result = gl::run_experiment(cfg, [](const std::string& msg) { fmt::print(stderr, "{}\n", msg); });
    std::cout << gl::metrics_csv(cfg, result);
    fmt::print(stderr, "wrote {}\n", result.output_dir);
    return 0;
}

int cmd_verify(const VerifyArgs& a) {
    gl::VerifyOptions opts{a.seed, a.fast, a.workers};
    const auto reports = gl::run_verification_suite(a.names, opts, [](const gl::IdentityReport& r) {
        fmt::print("{:<18} {}  lhs={:.6g} rhs={:.6g} stderr={:.3g} z={:.3f}", r.name, r.passed ? "PASS" : "FAIL",
                   r.lhs, r.rhs, r.combined_stderr, r.z_score);
        if (r.max_abs_error > 0.0) fmt::print(" max_abs_error={:.3g}", r.max_abs_error);
        fmt::print("\n");
        std::fflush(stdout);
    });
    fs::create_directories(a.out);
    const fs::path path = fs::path(a.out) / "verify_report.csv";
    emit(path.string(), gl::report_csv(reports));
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
    fmt::print("{} of {} passed; report in {}\n",
               std::count_if(reports.begin(), reports.end(), [](const auto& r) { return r.passed; }), reports.size(),
               path.string());
    return ok ? 0 : 1;
}

int cmd_schedule(ScheduleArgs a) {
    if (!a.config.empty()) {
        const auto cfg = gl::load_config(a.config);
        a.steps = cfg.steps;
        a.c0 = cfg.c0;
        a.c1 = cfg.c1;
    }
    const auto s = gl::Schedule::build(a.steps, a.c0, a.c1);
    std::string out = "n,alpha_bar,beta,t\n";
    for (int n = 1; n <= s.steps(); ++n)
        out += fmt::format("{},{},{},{}\n", n, gl::format_double(s.alpha_bar(n)), gl::format_double(s.beta(n)),
                           gl::format_double(s.noise_level(n)));
    emit(a.out, out);
    return 0;
}

int cmd_probe(const ProbeArgs& a) {
    gl::ExperimentConfig cfg;
    if (a.config.empty()) {
        cfg.name = "probe";
        cfg.model.type = "two-class-mixture";
        cfg.w_grid = {1.0};
    } else {
        cfg = gl::load_config(a.config);
    }
    const auto e = gl::resolve(cfg);

    gl::Target model = e.base;
    if (a.which == "unconditional" || a.which == "conditional") {
        if (!e.pair) throw gl::Error(gl::ErrorCode::ConfigError, "--which " + a.which + " needs a class pair model");
        model = a.which == "conditional" ? e.pair->conditional() : e.pair->unconditional();
    } else if (a.which == "reweighted") {
        if (!e.rewarded) throw gl::Error(gl::ErrorCode::ConfigError, "--which reweighted needs a reward model");
        model = e.rewarded->reweighted;
    } else if (a.which != "base") {
        throw gl::Error(gl::ErrorCode::ConfigError, "unknown --which '" + a.which + "'");
    }
    if (a.quantity == "classifier_prob" && !e.pair)
        throw gl::Error(gl::ErrorCode::ConfigError, "classifier_prob needs a class pair model");
    if (a.quantity == "reward_posterior" && !e.rewarded)
        throw gl::Error(gl::ErrorCode::ConfigError, "reward_posterior needs a reward model");
    if (a.quantity != "score" && a.quantity != "logpdf" && a.quantity != "classifier_prob" &&
        a.quantity != "reward_posterior")
        throw gl::Error(gl::ErrorCode::ConfigError, "unknown --quantity '" + a.quantity + "'");
    if (a.points < 2) throw gl::Error(gl::ErrorCode::ConfigError, "--points must be >= 2");

    const int d = gl::dim(model);
    if (d > 2) throw gl::Error(gl::ErrorCode::DimensionTooHigh, "probe grids support d <= 2");
    std::string out = "t";
    for (int k = 1; k <= d; ++k) out += ",x_" + std::to_string(k);
    if (a.quantity == "score")
        for (int k = 1; k <= d; ++k) out += ",value_" + std::to_string(k);
    else
        out += ",value";
    out += '\n';

    auto coord = [&](int i) { return a.lo + (a.hi - a.lo) * i / (a.points - 1); };
    const int rows = d == 1 ? a.points : a.points * a.points;
    for (double t : a.t)
        for (int r = 0; r < rows; ++r) {
            gl::Vec x = d == 1 ? gl::Vec{coord(r)} : gl::Vec{coord(r % a.points), coord(r / a.points)};
            out += gl::format_double(t);
            for (double v : x) out += "," + gl::format_double(v);
            if (a.quantity == "score") {
                for (double v : gl::noisy_score(model, t, x)) out += "," + gl::format_double(v);
            } else {
                double v = 0.0;
                if (a.quantity == "logpdf") v = gl::noisy_logpdf(model, t, x);
                if (a.quantity == "classifier_prob") v = e.pair->classifier_prob(t, x);
                if (a.quantity == "reward_posterior") v = e.rewarded->posterior(t, x);
                out += "," + gl::format_double(v);
            }
            out += '\n';
        }
    emit(a.out, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided diffusion sampling experiments on closed-form models"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
    run_cmd->add_option("config", run.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Override the master seed");
    run_cmd->add_flag("--fast", run.fast, "Divide the trial count by 10");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_flag("--record-trajectories", run.record_trajectories, "Write thinned guided trajectories");
    run_cmd->add_flag("--decouple-noise", run.decouple_noise, "Give the guided arm its own step noise");
    run_cmd->add_option("--workers", run.workers, "Worker threads (0 = all cores)");

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "Run identity checks (all when no names are given)");
    verify_cmd->add_option("names", verify.names, "Checks: scores scorematch e_j0 lemma2 lemma3 theorem1 theorem2 "
                                                  "corollary1 corollary2");
    verify_cmd->add_option("--seed", verify.seed, "Master seed");
    verify_cmd->add_flag("--fast", verify.fast, "Divide trial counts by 10");
    verify_cmd->add_option("--out", verify.out, "Directory for verify_report.csv");
    verify_cmd->add_option("--workers", verify.workers, "Worker threads (0 = all cores)");

    ScheduleArgs sched;
    auto* schedule_cmd = app.add_subcommand("schedule", "Noise schedule tools");
    schedule_cmd->require_subcommand(1);
    auto* dump_cmd = schedule_cmd->add_subcommand("dump", "CSV of n, alpha_bar, beta, t (t = 1 - alpha_bar)");
    dump_cmd->add_option("--steps", sched.steps, "Number of steps N");
    dump_cmd->add_option("--c0", sched.c0, "Terminal exponent: alpha_bar_N = N^-c0");
    dump_cmd->add_option("--c1", sched.c1, "Step size constant");
    dump_cmd->add_option("--config", sched.config, "Take N, c0, c1 from an experiment config");
    dump_cmd->add_option("--out", sched.out, "Output file (default stdout)");

    ProbeArgs probe;
    auto* model_cmd = app.add_subcommand("model", "Model tools");
    model_cmd->require_subcommand(1);
    auto* probe_cmd = model_cmd->add_subcommand("probe", "Evaluate a model quantity on a grid");
    probe_cmd->add_option("config", probe.config, "Experiment config (default: the two-class mixture)");
    probe_cmd->add_option("--which", probe.which, "base, conditional, unconditional or reweighted");
    probe_cmd->add_option("--quantity", probe.quantity, "score, logpdf, classifier_prob or reward_posterior");
    probe_cmd->add_option("--t", probe.t, "Signal levels")->delimiter(',');
    probe_cmd->add_option("--lo", probe.lo, "Grid lower bound per axis");
    probe_cmd->add_option("--hi", probe.hi, "Grid upper bound per axis");
    probe_cmd->add_option("--points", probe.points, "Grid points per axis");
    probe_cmd->add_option("--out", probe.out, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run);
        if (verify_cmd->parsed()) return cmd_verify(verify);
        if (dump_cmd->parsed()) return cmd_schedule(sched);
        if (probe_cmd->parsed()) return cmd_probe(probe);
    } catch (const gl::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 0;
}
