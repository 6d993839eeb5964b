#include "guidelab/runner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "guidelab/plots.hpp"
#include "guidelab/presets.hpp"
#include "guidelab/stats.hpp"

namespace guidelab {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kTrajectoryTrials = 64;
constexpr int kTrajectoryPoints = 250;

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
}

std::string samples_csv(const std::vector<Vec>& guided, const std::vector<Vec>& unguided, std::uint64_t seed) {
    const std::size_t d = guided.empty() ? 0 : guided.front().size();
    std::string out = "trial,arm";
    for (std::size_t k = 1; k <= d; ++k) out += ",y_" + std::to_string(k);
    out += ",seed\n";
    auto rows = [&](const std::vector<Vec>& ys, const char* arm) {
        for (std::size_t i = 0; i < ys.size(); ++i) {
            out += std::to_string(i);
            out += ',';
            out += arm;
            for (double v : ys[i]) {
                out += ',';
                out += format_double(v);
            }
            out += ',';
            out += std::to_string(seed);
            out += '\n';
        }
    };
    rows(guided, "guided");
    rows(unguided, "unguided");
    return out;
}

std::string trajectories_csv(const GuidanceConfig& cfg, const Schedule& s, std::size_t trials, std::uint64_t seed,
                             std::uint64_t arm) {
    const int d = cfg.dim();
    const int stride = std::max(1, s.steps() / kTrajectoryPoints);
    std::string out = "trial,n,t";
    for (int k = 1; k <= d; ++k) out += ",y_" + std::to_string(k);
    out += '\n';
    for (std::size_t i = 0; i < trials; ++i) {
        const RandomStream shared(seed, i, 0);
        Vec y(static_cast<std::size_t>(d));
        shared.normals(RandomStream::kInit, 0, y);
        const StepObserver observer = [&](int n, std::span<const double> yn) {
            if (n != s.steps() && n != 1 && n % stride != 0) return;
            out += fmt::format("{},{},{}", i, n, format_double(s.signal_level(n)));
            for (double v : yn) out += "," + format_double(v);
            out += '\n';
        };
        ReverseOptions opts;
        opts.observer = &observer;
        reverse_steps(cfg, s, arm == 0 ? shared : RandomStream(seed, i, arm), y, opts);
    }
    return out;
}

std::vector<double> reward_values(const RewardSpec& r, const std::vector<Vec>& ys) {
    std::vector<double> out(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out[i] = reward_value(r, ys[i]);
    return out;
}

std::optional<IsotropicGmm> data_density(const ResolvedExperiment& e) {
    if (e.pair) return e.pair->conditional();
    if (const auto* g = std::get_if<IsotropicGmm>(&e.base)) return *g;
    return std::nullopt;
}

bool all_positive(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

void write_plots(const fs::path& dir, const ExperimentConfig& cfg, const ResolvedExperiment& e,
                 const ExperimentResult& result, const std::vector<std::vector<Vec>>& guided,
                 const std::vector<Vec>& unguided) {
    fs::create_directories(dir);
    const int d = e.unguided.dim();
    const bool log_w = all_positive(cfg.w_grid);

    if (!result.classifier_rows.empty()) {
        plots::Series prop{"", {}, {}, {}};
        plots::Series neg{"", {}, {}, {}};
        for (const auto& row : result.classifier_rows) {
            prop.x.push_back(row.w);
            prop.y.push_back(row.proportion_improved);
            prop.y_err.push_back(1.96 * row.proportion_improved_stderr);
            neg.x.push_back(row.w);
            neg.y.push_back(row.mean_neg_reciprocal);
            neg.y_err.push_back(1.96 * row.mean_neg_reciprocal_stderr);
        }
        const std::vector<plots::Panel> panels = {
            {"Proportion with improved p(c | Y)", "guidance scale w", "proportion", log_w, true, false, {prop}},
            {"Average of -1 / p(c | Y)", "guidance scale w", "mean", log_w, true, false, {neg}},
        };
        write_file(dir / "classifier_metrics.svg", plots::render(panels));
    }

    if (!result.reward_rows.empty()) {
        plots::Series gain{"", {}, {}, {}};
        plots::Series window{"", {}, {}, {}};
        for (const auto& row : result.reward_rows) {
            gain.x.push_back(row.w);
            gain.y.push_back(row.mean_reward);
            gain.y_err.push_back(1.96 * row.mean_reward_stderr);
            if (row.window_fraction) {
                window.x.push_back(row.w);
                window.y.push_back(*row.window_fraction);
                window.y_err.push_back(1.96 * row.window_fraction_stderr.value_or(0.0));
            }
        }
        std::vector<plots::Panel> panels = {
            {"Mean reward r(Y)", "guidance scale w", "mean", log_w, true, false, {gain}}};
        if (!window.x.empty())
            panels.push_back({"Fraction inside the window", "guidance scale w", "fraction", log_w, true, false, {window}});
        write_file(dir / "reward_metrics.svg", plots::render(panels));
    }

    if (d == 1) {
        plots::Panel p{"Endpoint densities", "y", "density", false, false, false, {}};
        const int bins = std::min(cfg.metrics.tv_bins, 120);
        if (const auto density = data_density(e))
            p.series.push_back(plots::gmm_density_series("data", *density, 1.0, cfg.metrics.tv_lo, cfg.metrics.tv_hi, 241));
        for (std::size_t j = 0; j < guided.size(); ++j)
            p.series.push_back(plots::density_series("w=" + format_double(cfg.w_grid[j]), guided[j],
                                                     cfg.metrics.tv_lo, cfg.metrics.tv_hi, bins));
        write_file(dir / "densities.svg", plots::render({p}, 640, 400));
    } else if (d == 2) {
        std::vector<plots::Panel> panels;
        panels.push_back({"unguided", "y_1", "y_2", false, false, true, {plots::scatter_series("", unguided)}});
        for (std::size_t j = 0; j < guided.size(); ++j)
            panels.push_back({"w = " + format_double(cfg.w_grid[j]), "y_1", "y_2", false, false, true,
                              {plots::scatter_series("", guided[j])}});
        write_file(dir / "scatter.svg", plots::render(panels, 320, 320));
    }
}

}  // namespace

GuidanceConfig ResolvedExperiment::guided(double w) const {
    switch (mode) {
        case GuidanceMode::Cfg: return GuidanceConfig::cfg(*pair, w);
        case GuidanceMode::ClassifierGuidance: return GuidanceConfig::classifier_guidance(*pair, w);
        case GuidanceMode::CostReduce:
            return GuidanceConfig::cost_reduce(pair->conditional(), cost_reweighted(*pair), w);
        case GuidanceMode::RewardImprove:
            return GuidanceConfig::reward_improve(rewarded->original, rewarded->reweighted, w);
        default: throw Error(ErrorCode::ConfigError, std::string("mode ") + to_string(mode) + " is not a guided mode");
    }
}

ResolvedExperiment resolve(const ExperimentConfig& c) {
    c.validate();
    std::optional<ClassPair> pair;
    if (c.model.type == "two-class-mixture") pair = presets::two_class_mixture();
    if (c.model.type == "class-pair")
        pair = ClassPair(c.model.unconditional.build(), c.model.conditional.build(), c.model.prior);

    auto schedule = Schedule::build(c.steps, c.c0, c.c1);
    if (pair)
        return ResolvedExperiment{c.mode, pair, std::nullopt, std::nullopt, Target{pair->conditional()},
                                  GuidanceConfig::conditional(*pair), std::move(schedule)};

    Target base = c.model.type == "swissroll" ? Target{presets::generate_swissroll(c.model.points, c.model.cloud_seed)}
                                              : Target{c.model.mixture.build()};
    const RewardSpec spec = c.reward.build();
    auto rm = RewardedModel::make(base, spec);
    auto unguided = GuidanceConfig::unguided(base);
    return ResolvedExperiment{c.mode, std::nullopt, spec, std::move(rm), std::move(base), std::move(unguided),
                              std::move(schedule)};
}

std::string metrics_csv(const ExperimentConfig& cfg, const ExperimentResult& r) {
    const std::string name = csv_field(cfg.name);
    std::string out;
    if (!r.classifier_rows.empty()) {
        out = "experiment,w,n_trials,proportion_improved,proportion_improved_stderr,mean_neg_reciprocal,"
              "mean_neg_reciprocal_stderr\n";
        for (const auto& row : r.classifier_rows)
            out += fmt::format("{},{},{},{},{},{},{}\n", name, format_double(row.w), row.n_trials,
                               format_double(row.proportion_improved), format_double(row.proportion_improved_stderr),
                               format_double(row.mean_neg_reciprocal), format_double(row.mean_neg_reciprocal_stderr));
    } else {
        out = "experiment,w,n_trials,mean_reward,mean_reward_stderr,reward_gain,reward_gain_stderr,window_fraction,"
              "window_fraction_stderr,tv_to_data,tv_to_unguided\n";
        for (const auto& row : r.reward_rows)
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", name, format_double(row.w), row.n_trials,
                               format_double(row.mean_reward), format_double(row.mean_reward_stderr),
                               format_double(row.reward_gain), format_double(row.reward_gain_stderr),
                               cell(row.window_fraction), cell(row.window_fraction_stderr), cell(row.tv_to_data),
                               cell(row.tv_to_unguided));
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::function<void(const std::string&)>& progress) {
    const ResolvedExperiment e = resolve(cfg);
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };

    ExperimentResult result;
    result.output_dir = cfg.output.empty() ? (fs::path("runs") / cfg.name).string() : cfg.output;
    const fs::path dir(result.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
    write_file(dir / "config.snapshot", snapshot(cfg));

    auto tagged = [&](const std::string& where, auto&& body) {
        try {
            return body();
        } catch (const Error& err) {
            throw Error(err.code(), "experiment " + cfg.name + ", " + where + ": " + err.detail());
        }
    };

    const std::uint64_t guided_arm = cfg.decouple_noise ? 1 : 0;
    say(fmt::format("{}: unguided arm, {} trials, N = {}", cfg.name, cfg.trials, cfg.steps));
    const std::vector<Vec> unguided = tagged("unguided arm", [&] {
        return sample_endpoints(e.unguided, e.schedule, cfg.trials, cfg.master_seed, cfg.workers, 0);
    });

    const int d = e.unguided.dim();
    const Vec box_lo(static_cast<std::size_t>(d), cfg.metrics.tv_lo);
    const Vec box_hi(static_cast<std::size_t>(d), cfg.metrics.tv_hi);
    const auto density = data_density(e);
    std::optional<std::vector<double>> unguided_reward;
    if (e.reward) unguided_reward = reward_values(*e.reward, unguided);

    std::vector<std::vector<Vec>> guided_all;
    for (double w : cfg.w_grid) {
        const std::string where = "w = " + format_double(w);
        say(fmt::format("{}: {}", cfg.name, where));
        std::vector<Vec> guided;
        if (w == 0.0 && guided_arm == 0)
            guided = unguided;  // every guided mode collapses to its base sampler at w = 0
        else
            guided = tagged(where, [&] {
                return sample_endpoints(e.guided(w), e.schedule, cfg.trials, cfg.master_seed, cfg.workers, guided_arm);
            });

        write_file(dir / ("samples_w=" + format_double(w) + ".csv"), samples_csv(guided, unguided, cfg.master_seed));
        if (cfg.record_trajectories)
            write_file(dir / ("trajectories_w=" + format_double(w) + ".csv"),
                       tagged(where, [&] {
                           return trajectories_csv(e.guided(w), e.schedule, std::min(cfg.trials, kTrajectoryTrials),
                                                   cfg.master_seed, guided_arm);
                       }));

        if (e.pair) {
            PairedBatch batch;
            batch.guided = guided;
            batch.unguided = unguided;
            batch.master_seed = cfg.master_seed;
            result.classifier_rows.push_back(classifier_metrics(batch, *e.pair, w, cfg.metrics.classifier_level));
        } else {
            RewardRow row;
            row.w = w;
            row.n_trials = guided.size();
            const auto r = reward_values(*e.reward, guided);
            const auto m = estimate_mean(r);
            row.mean_reward = m.mean;
            row.mean_reward_stderr = m.std_error;
            std::vector<double> diff(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) diff[i] = r[i] - (*unguided_reward)[i];
            const auto g = estimate_mean(diff);
            row.reward_gain = g.mean;
            row.reward_gain_stderr = g.std_error;
            if (cfg.metrics.has_window) {
                const auto f = window_fraction(guided, cfg.metrics.window_axis, cfg.metrics.window_lo,
                                               cfg.metrics.window_hi);
                row.window_fraction = f.value;
                row.window_fraction_stderr = f.std_error;
            }
            if (d == 1 && density)
                row.tv_to_data = histogram_tv_to_gmm(guided, *density, 1.0, cfg.metrics.tv_lo, cfg.metrics.tv_hi,
                                                     cfg.metrics.tv_bins);
            if (d <= 2) row.tv_to_unguided = histogram_tv(guided, unguided, box_lo, box_hi, cfg.metrics.tv_bins);
            result.reward_rows.push_back(row);
        }
        guided_all.push_back(std::move(guided));
    }

    write_file(dir / "metrics.csv", metrics_csv(cfg, result));
    write_plots(dir / "plots", cfg, e, result, guided_all, unguided);
    return result;
}

}  // namespace guidelab
