#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guidelab/models.hpp"
#include "guidelab/reward.hpp"
#include "guidelab/samplers.hpp"
#include "guidelab/schedule.hpp"

namespace guidelab {

/// Outcome of one identity check. For Monte-Carlo checks `passed` means
/// |lhs - rhs| <= tol_abs + z_max * combined_stderr, where combined_stderr is the
/// standard error of the per-trial difference when both sides come from the same
/// trials, and sqrt(lhs_stderr^2 + rhs_stderr^2) otherwise. Closed-form checks
/// put their worst discrepancy in max_abs_error.
struct IdentityReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double lhs_stderr = 0.0;
    double rhs_stderr = 0.0;
    double combined_stderr = 0.0;
    double z_score = 0.0;
    double tol_abs = 0.0;
    double max_abs_error = 0.0;
    std::size_t trials = 0;
    bool passed = false;
};

IdentityReport make_report(std::string name, double lhs, double rhs, double lhs_stderr, double rhs_stderr,
                           double combined_stderr, std::size_t trials, double tol_abs = 0.0, double z_max = 3.0);

// Perturbation window [t, t + dt] for `steps` sampler steps starting at the step nearest t.
double window_length(const Schedule& s, double t, int steps);

struct Lemma2Options {
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    int workers = 0;
    bool richardson = true;  // also run the half window and extrapolate to dt -> 0
};

/// Finite-window estimate of the directional derivative of the expected
/// early-stopped reward when the constant drift g is added on [t, t + dt],
/// against (r_{1-t}(y) / t) <g, grad log p^{r-wt} - grad log p> at y.
/// t is snapped to the nearest step; dt must cover a whole number of steps
/// (an even number with Richardson extrapolation).
IdentityReport check_lemma2(const RewardedModel& rm, const Schedule& s, double t, double dt, const Vec& g,
                            const Vec& y, const Lemma2Options& opts = {});

// Several directions at once; all arms share the unperturbed run and the step noise.
std::vector<IdentityReport> check_lemma2(const RewardedModel& rm, const Schedule& s, double t, double dt,
                                         const std::vector<Vec>& directions, const Vec& y,
                                         const Lemma2Options& opts = {});

struct Theorem1Options {
    std::optional<Vec> y0;  // empty: Y_N ~ N(0, I) per trial
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    int workers = 0;
};

/// Paired endpoint gap E r_delta(Y^w) - E r_delta(Y) (reversed for CostReduce)
/// against the accumulated sum_n (abar_{n-1} - abar_n) (w / abar_n) r_{1-abar_n}(Y^w_n) ||ds||^2
/// along the guided trajectories. cfg must be RewardImprove or CostReduce; for a
/// cost, `mean_value` is E[J(X_0)] and r_t is the matching cost posterior.
IdentityReport check_theorem1(const GuidanceConfig& cfg, double mean_value, const Schedule& s,
                              const Theorem1Options& opts = {});

struct Lemma3Options {
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    int workers = 0;
};

/// r_{1-tau}(y) in closed form against the Monte-Carlo mean of r_{1-t}(Y_t) with
/// Y_t simulated from Y_tau = y by the unguided sampler on `fine`. Both levels
/// snap to the nearest step. tol_abs = (160 / N) * |lhs|.
IdentityReport check_lemma3(const RewardedModel& rm, const Schedule& fine, double tau, double t, const Vec& y,
                            const Lemma3Options& opts = {});

/// Max abs gap between closed-form noisy scores and central finite differences
/// of the noisy log-density over `cases` random (model, t, x) draws; models
/// alternate between random isotropic mixtures (d <= 3) and point clouds (d <= 2).
double check_score_finite_differences(std::size_t cases, std::uint64_t seed);

// Signal level of the denoiser convention x_s = sqrt(1 - s) x0 + sqrt(s) eps.
inline double denoiser_signal_level(double s) { return 1.0 - s; }

/// Max over the grid of |(x - sqrt(1-s) E[x0 | x_s = x]) / sqrt(s) + sqrt(s) grad log p_s(x)|
/// for the well-reweighted mixture, s in the denoiser convention.
double check_scorematch_identity(const IsotropicGmm& gmm, const QuadraticWell& well, std::span<const double> s_grid,
                                 const std::vector<Vec>& x_grid);

struct CfgCostOptions {
    std::size_t trials = 1000000;
    std::uint64_t seed = 1;
    int workers = 0;
    int drift_points = 1000;
};

/// Monte-Carlo E[1 / p(c | X_0)] with X_0 from the conditional law against 1 / p(c),
/// plus the drift identity CFG == CostReduce(conditional, unconditional) on a grid
/// of (step, x) pairs for w in {0.5, 2}; the drift discrepancy lands in max_abs_error
/// and must stay below 1e-12.
IdentityReport check_cfg_cost_identity(const ClassPair& pair, const CfgCostOptions& opts = {});

struct SignCheckOptions {
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    int workers = 0;
};

/// CFG at scale w lowers the paired mean of 1 / p(c | X_delta = Y_1) below the
/// conditional sampler's by at least 3 standard errors. lhs = guided, rhs = unguided.
IdentityReport check_cost_decrease(const ClassPair& pair, double w, const Schedule& s,
                                   const SignCheckOptions& opts = {});

/// Reward guidance at scale w raises the paired mean of r_delta(Y_1) above the
/// unguided sampler's by at least 3 standard errors. lhs = guided, rhs = unguided.
IdentityReport check_reward_increase(const RewardedModel& rm, double w, const Schedule& s,
                                     const SignCheckOptions& opts = {});

}  // namespace guidelab
