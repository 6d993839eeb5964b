#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "guidelab/models.hpp"
#include "guidelab/rng.hpp"
#include "guidelab/schedule.hpp"

namespace guidelab {

enum class GuidanceMode { None, Conditional, ClassifierGuidance, Cfg, RewardImprove, CostReduce };

const char* to_string(GuidanceMode mode);
GuidanceMode parse_guidance_mode(const std::string& name);

/// Drift recipe for the discrete reverse sampler. Score sources per mode:
///   None                base
///   Conditional         pair (conditional score)
///   ClassifierGuidance  pair: s(x|c) + w * grad log p(c|x), gradient taken as s(x|c) - s(x)
///   Cfg                 pair: (1 + w) s(x|c) - w s(x)
///   RewardImprove       base, reweighted: (1 - w) s(x) + w s^{r-wt}(x)
///   CostReduce          base, reweighted: (1 + w) s(x) - w s^{J-wt}(x)
struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::None;
    double w = 0.0;
    std::optional<Target> base;
    std::optional<Target> reweighted;
    std::optional<ClassPair> pair;
    // Set by the factories when base and reweighted are point clouds on the same
    // atoms; both scores then come from one pass over the atoms.
    std::shared_ptr<const Vec> shared_support_ratio;

    static GuidanceConfig unguided(Target base);
    static GuidanceConfig conditional(ClassPair pair);
    static GuidanceConfig classifier_guidance(ClassPair pair, double w);
    static GuidanceConfig cfg(ClassPair pair, double w);
    static GuidanceConfig reward_improve(Target base, Target reweighted, double w);
    static GuidanceConfig cost_reduce(Target base, Target reweighted, double w);

    GuidanceConfig with_scale(double scale) const;
    void validate() const;
    int dim() const;
};

// Effective score at signal level t (step n uses t = alpha_bar_n).
void effective_score(const GuidanceConfig& cfg, double t, std::span<const double> x, std::span<double> out);
Vec effective_score(const GuidanceConfig& cfg, const Schedule& s, int n, std::span<const double> x);

// Exact draw of X = sqrt(t) X0 + sqrt(1 - t) Z.
Vec forward_sample(const Target& model, double t, Rng& rng);

// Constant drift added to the effective score on steps first_step >= n >= last_step.
struct StepPerturbation {
    int first_step = 0;
    int last_step = 0;
    Vec drift;
};

// Called with (n, Y_n) before step n is applied and once more with (stop, Y_stop).
using StepObserver = std::function<void(int n, std::span<const double> y)>;

struct ReverseOptions {
    int start_step = 0;  // 0 means N
    int stop_step = 1;
    const StepPerturbation* perturbation = nullptr;
    const StepObserver* observer = nullptr;
};

/// Runs Y_{n-1} = (Y_n + beta_n s_n(Y_n)) / sqrt(1 - beta_n) + sqrt(beta_n) Z_n for
/// n = start..stop+1 in place. Z_n is drawn from `noise` at address (kStepNoise, n).
/// Throws NonFinite (with the step index) if a coordinate leaves [-1e6, 1e6].
void reverse_steps(const GuidanceConfig& cfg, const Schedule& s, const RandomStream& noise, std::span<double> y,
                   const ReverseOptions& opts = {});

// Full run from Y_N (init, or N(0, I) drawn from `stream` at kInit) down to Y_1.
Vec reverse_sample(const GuidanceConfig& cfg, const Schedule& s, const RandomStream& stream,
                   const std::optional<Vec>& init = std::nullopt);

// Same sampler on the refined schedule with k * N steps (c0, c1 kept).
Vec fine_reference_sample(const GuidanceConfig& cfg, int refinement, const Schedule& base, const RandomStream& stream,
                          const std::optional<Vec>& init = std::nullopt);

struct PairOptions {
    bool decouple_noise = false;
    int workers = 0;
    std::optional<Vec> fixed_init;
};

/// Guided and unguided endpoints with common random numbers: trial i of both arms
/// uses the initialization of stream (seed, i, 0); per-step noise is shared too
/// unless decouple_noise, in which case the guided arm draws from (seed, i, 1).
struct PairedBatch {
    std::vector<Vec> guided;
    std::vector<Vec> unguided;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> trial_ids;
    std::string schedule_id;
    std::string config_id;

    std::size_t size() const { return guided.size(); }
};

PairedBatch paired_sample(const GuidanceConfig& guided, const GuidanceConfig& unguided, const Schedule& s,
                          std::size_t trials, std::uint64_t master_seed, const PairOptions& opts = {});

// Single-arm endpoints; trial i uses stream (seed, i, arm). With arm 0 this
// reproduces either arm of paired_sample under shared noise.
std::vector<Vec> sample_endpoints(const GuidanceConfig& cfg, const Schedule& s, std::size_t trials,
                                  std::uint64_t master_seed, int workers = 0, std::uint64_t arm = 0);

/// Endpoints of the same sampler run on several schedules that share one Brownian
/// path per trial. The reverse-SDE noise over a step is a Brownian increment in
/// log-time u = log(alpha_bar), so every schedule is driven by the same path:
/// Z_n = (W(u_{n-1}) - W(u_n)) / sqrt(u_{n-1} - u_n), which is exactly N(0, I) and
/// independent across steps. The finest schedule (the reference) starts from
/// Y ~ N(0, I); a coarser schedule starts later in log-time and takes the
/// reference state at that moment as its Y_N, so the sweep isolates the
/// discretization error of each schedule.
struct RefinementSweep {
    std::vector<int> steps;
    int reference_steps = 0;
    std::vector<std::vector<Vec>> endpoints;  // [schedule][trial]
    std::vector<Vec> reference;
};

RefinementSweep refinement_sweep(const GuidanceConfig& cfg, const std::vector<int>& steps, int reference_steps,
                                 double c0, double c1, std::size_t trials, std::uint64_t master_seed,
                                 int workers = 0);

std::string schedule_id(const Schedule& s);

}  // namespace guidelab
