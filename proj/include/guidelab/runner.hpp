#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "guidelab/config.hpp"
#include "guidelab/metrics.hpp"
#include "guidelab/reward.hpp"

namespace guidelab {

/// Models and samplers resolved from a config.
struct ResolvedExperiment {
    GuidanceMode mode;
    std::optional<ClassPair> pair;
    std::optional<RewardSpec> reward;
    std::optional<RewardedModel> rewarded;
    Target base;
    GuidanceConfig unguided;
    Schedule schedule;

    GuidanceConfig guided(double w) const;
};

ResolvedExperiment resolve(const ExperimentConfig& c);

// Per-w row of a reward experiment; optional fields are written as empty cells.
struct RewardRow {
    double w = 0.0;
    std::size_t n_trials = 0;
    double mean_reward = 0.0;  // mean of r(Y^w) over the guided arm
    double mean_reward_stderr = 0.0;
    double reward_gain = 0.0;  // paired mean of r(Y^w) - r(Y^0)
    double reward_gain_stderr = 0.0;
    std::optional<double> window_fraction;
    std::optional<double> window_fraction_stderr;
    std::optional<double> tv_to_data;      // 1-D mixtures only
    std::optional<double> tv_to_unguided;  // d <= 2
};

struct ExperimentResult {
    std::string output_dir;
    std::vector<MetricRow> classifier_rows;  // class-pair experiments
    std::vector<RewardRow> reward_rows;      // reward experiments
};

/// Runs every w of the grid and writes config.snapshot, metrics.csv,
/// samples_w=<w>.csv, plots/*.svg and, when requested, trajectories_w=<w>.csv
/// into cfg.output (default: runs/<name>). The unguided arm is sampled once and
/// shared by all w.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const std::string&)>& progress = {});

// metrics.csv contents for a finished result (also used by the determinism checks).
std::string metrics_csv(const ExperimentConfig& cfg, const ExperimentResult& r);

}  // namespace guidelab
