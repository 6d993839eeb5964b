#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guidelab/models.hpp"
#include "guidelab/reward.hpp"
#include "guidelab/samplers.hpp"

namespace guidelab {

/// Model section. `type` is one of
///   two-class-mixture   built-in 1-D class pair (target class 1)
///   class-pair          unconditional / conditional mixtures from their own sections, plus `prior`
///   gmm                 isotropic mixture from weights / means / variances
///   swissroll           uniform cloud from the spiral generator (points, seed)
struct MixtureSpec {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<double> variances;

    IsotropicGmm build() const;
};

struct ModelSpec {
    std::string type = "gmm";
    MixtureSpec mixture;        // gmm
    MixtureSpec unconditional;  // class-pair
    MixtureSpec conditional;    // class-pair
    double prior = 0.5;         // class-pair
    int points = 1000;          // swissroll
    std::uint64_t cloud_seed = 2024;

    bool is_class_pair() const { return type == "two-class-mixture" || type == "class-pair"; }
};

/// Reward section; `type` is none, quadratic-well or band.
struct RewardConfig {
    std::string type = "none";
    Vec target;
    double beta = 1.0;
    int axis = 0;
    double lo = 0.0;
    double hi = 1.0;
    double height = 1.0;

    RewardSpec build() const;
};

struct MetricsConfig {
    bool has_window = false;
    int window_axis = 0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    int tv_bins = 200;
    double tv_lo = -6.0;
    double tv_hi = 6.0;
    double classifier_level = 1.0;
};

struct ExperimentConfig {
    std::string name;
    ModelSpec model;
    RewardConfig reward;
    GuidanceMode mode = GuidanceMode::Cfg;
    std::vector<double> w_grid;
    int steps = 4000;
    double c0 = 1.0;
    double c1 = 2.0;
    std::size_t trials = 10000;
    std::uint64_t master_seed = 1;
    std::string output;
    bool record_trajectories = false;
    bool decouple_noise = false;
    int workers = 0;
    MetricsConfig metrics;

    // Throws ConfigError on anything the samplers or metrics would reject.
    void validate() const;
};

/// Parses the INI-style text format: `[section]` headers, `key = value` lines,
/// `#` or `;` comments at line start. Lists are comma separated; mixture means
/// separate components with `|` (e.g. `means = -1 | 1`).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Fully resolved config in the same format. The output directory and worker
// count are left out: results never depend on them, and a run's files must not either.
std::string snapshot(const ExperimentConfig& c);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace guidelab
