#include "guidelab/samplers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "guidelab/parallel.hpp"

namespace guidelab {

namespace {

constexpr double kBlowUpBound = 1e6;

// Stack storage for small dimensions, heap beyond.
class Scratch {
public:
    explicit Scratch(std::size_t n) : n_(n) {
        if (n_ > small_.size()) heap_.resize(n_);
    }
    std::span<double> span() { return {n_ > small_.size() ? heap_.data() : small_.data(), n_}; }

private:
    std::size_t n_;
    std::array<double, 8> small_{};
    std::vector<double> heap_;
};

const Target& need(const std::optional<Target>& m, const char* what) {
    require(m.has_value(), ErrorCode::InvalidArgument, std::string("guidance config is missing ") + what);
    return *m;
}

const ClassPair& need(const std::optional<ClassPair>& p) {
    require(p.has_value(), ErrorCode::InvalidArgument, "guidance config is missing the class pair");
    return *p;
}

// out = a * s(x) + b * s_reweighted(x)
void combine_base_reweighted(const GuidanceConfig& cfg, double a, double b, double t, std::span<const double> x,
                             std::span<double> out) {
    if (cfg.shared_support_ratio) {
        Scratch tmp(x.size());
        auto second = tmp.span();
        std::get<PointCloud>(*cfg.base).noisy_score_pair(*cfg.shared_support_ratio, t, x, out, second);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * second[i];
        return;
    }
    Scratch tmp(x.size());
    auto second = tmp.span();
    noisy_score(*cfg.base, t, x, out);
    noisy_score(*cfg.reweighted, t, x, second);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * second[i];
}

// out = a * s1(x) + b * s2(x)
template <class F1, class F2>
void combine(F1&& s1, F2&& s2, double a, double b, std::span<const double> x, std::span<double> out) {
    Scratch tmp(x.size());
    auto second = tmp.span();
    s1(out);
    s2(second);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * out[i] + b * second[i];
}

}  // namespace

const char* to_string(GuidanceMode mode) {
    switch (mode) {
        case GuidanceMode::None: return "none";
        case GuidanceMode::Conditional: return "conditional";
        case GuidanceMode::ClassifierGuidance: return "classifier-guidance";
        case GuidanceMode::Cfg: return "cfg";
        case GuidanceMode::RewardImprove: return "reward-improve";
        case GuidanceMode::CostReduce: return "cost-reduce";
    }
    return "none";
}

GuidanceMode parse_guidance_mode(const std::string& name) {
    for (auto m : {GuidanceMode::None, GuidanceMode::Conditional, GuidanceMode::ClassifierGuidance, GuidanceMode::Cfg,
                   GuidanceMode::RewardImprove, GuidanceMode::CostReduce}) {
        if (name == to_string(m)) return m;
    }
    throw Error(ErrorCode::ConfigError, "unknown guidance mode '" + name + "'");
}

GuidanceConfig GuidanceConfig::unguided(Target base) {
    GuidanceConfig c;
    c.mode = GuidanceMode::None;
    c.base = std::move(base);
    return c;
}

GuidanceConfig GuidanceConfig::conditional(ClassPair pair) {
    GuidanceConfig c;
    c.mode = GuidanceMode::Conditional;
    c.pair = std::move(pair);
    return c;
}

GuidanceConfig GuidanceConfig::classifier_guidance(ClassPair pair, double w) {
    GuidanceConfig c = conditional(std::move(pair));
    c.mode = GuidanceMode::ClassifierGuidance;
    c.w = w;
    return c;
}

GuidanceConfig GuidanceConfig::cfg(ClassPair pair, double w) {
    GuidanceConfig c = conditional(std::move(pair));
    c.mode = GuidanceMode::Cfg;
    c.w = w;
    return c;
}

GuidanceConfig GuidanceConfig::reward_improve(Target base, Target reweighted, double w) {
    GuidanceConfig c;
    c.mode = GuidanceMode::RewardImprove;
    c.w = w;
    const auto* a = std::get_if<PointCloud>(&base);
    const auto* b = std::get_if<PointCloud>(&reweighted);
    if (a && b && a->same_support(*b)) c.shared_support_ratio = std::make_shared<const Vec>(a->weight_ratio(*b));
    c.base = std::move(base);
    c.reweighted = std::move(reweighted);
    return c;
}

GuidanceConfig GuidanceConfig::cost_reduce(Target base, Target reweighted, double w) {
    GuidanceConfig c = reward_improve(std::move(base), std::move(reweighted), w);
    c.mode = GuidanceMode::CostReduce;
    return c;
}

GuidanceConfig GuidanceConfig::with_scale(double scale) const {
    GuidanceConfig c = *this;
    c.w = scale;
    return c;
}

void GuidanceConfig::validate() const {
    require(w >= 0.0 && std::isfinite(w), ErrorCode::InvalidArgument, "guidance scale must be non-negative");
    switch (mode) {
        case GuidanceMode::None: need(base, "the base model"); break;
        case GuidanceMode::Conditional:
        case GuidanceMode::ClassifierGuidance:
        case GuidanceMode::Cfg: need(pair); break;
        case GuidanceMode::RewardImprove:
        case GuidanceMode::CostReduce:
            require(guidelab::dim(need(base, "the base model")) == guidelab::dim(need(reweighted, "the reweighted model")),
                    ErrorCode::InvalidArgument, "base and reweighted models differ in dimension");
            break;
    }
}

int GuidanceConfig::dim() const {
    if (pair) return pair->dim();
    return guidelab::dim(need(base, "the base model"));
}

void effective_score(const GuidanceConfig& cfg, double t, std::span<const double> x, std::span<double> out) {
    switch (cfg.mode) {
        case GuidanceMode::None: noisy_score(*cfg.base, t, x, out); return;
        case GuidanceMode::Conditional: cfg.pair->conditional().noisy_score(t, x, out); return;
        case GuidanceMode::ClassifierGuidance: {
            // s(x|c) + w (s(x|c) - s(x)), with the classifier gradient from Bayes' rule
            Scratch tmp(x.size());
            auto uncond = tmp.span();
            cfg.pair->conditional().noisy_score(t, x, out);
            cfg.pair->unconditional().noisy_score(t, x, uncond);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += cfg.w * (out[i] - uncond[i]);
            return;
        }
        case GuidanceMode::Cfg:
            combine([&](std::span<double> o) { cfg.pair->conditional().noisy_score(t, x, o); },
                    [&](std::span<double> o) { cfg.pair->unconditional().noisy_score(t, x, o); }, 1.0 + cfg.w,
                    -cfg.w, x, out);
            return;
        case GuidanceMode::RewardImprove:
            if (cfg.w == 0.0) {
                noisy_score(*cfg.base, t, x, out);
                return;
            }
            combine_base_reweighted(cfg, 1.0 - cfg.w, cfg.w, t, x, out);
            return;
        case GuidanceMode::CostReduce:
            if (cfg.w == 0.0) {
                noisy_score(*cfg.base, t, x, out);
                return;
            }
            combine_base_reweighted(cfg, 1.0 + cfg.w, -cfg.w, t, x, out);
            return;
    }
}

Vec effective_score(const GuidanceConfig& cfg, const Schedule& s, int n, std::span<const double> x) {
    Vec out(x.size());
    effective_score(cfg, s.signal_level(n), x, out);
    return out;
}

Vec forward_sample(const Target& model, double t, Rng& rng) {
    Vec out(static_cast<std::size_t>(dim(model)));
    sample(model, t, rng, out);
    return out;
}

void reverse_steps(const GuidanceConfig& cfg, const Schedule& s, const RandomStream& noise, std::span<double> y,
                   const ReverseOptions& opts) {
    const int start = opts.start_step == 0 ? s.steps() : opts.start_step;
    require(start >= 1 && start <= s.steps() && opts.stop_step >= 1 && opts.stop_step <= start,
            ErrorCode::IndexOutOfRange, "invalid reverse step range");
    require(y.size() == static_cast<std::size_t>(cfg.dim()), ErrorCode::InvalidArgument,
            "state dimension does not match the guidance config");

    Scratch score_buf(y.size()), noise_buf(y.size());
    auto score = score_buf.span();
    auto z = noise_buf.span();
    const auto alpha_bar = s.alpha_bars();
    const auto beta = s.betas();

    for (int n = start; n > opts.stop_step; --n) {
        if (opts.observer) (*opts.observer)(n, y);
        const std::size_t idx = static_cast<std::size_t>(n - 1);
        const double b = beta[idx];
        effective_score(cfg, alpha_bar[idx], y, score);
        if (opts.perturbation && n <= opts.perturbation->first_step && n >= opts.perturbation->last_step) {
            for (std::size_t i = 0; i < y.size(); ++i) score[i] += opts.perturbation->drift[i];
        }
        noise.normals(RandomStream::kStepNoise, static_cast<std::uint64_t>(n), z);
        const double inv_root = 1.0 / std::sqrt(1.0 - b);
        const double root_b = std::sqrt(b);
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = (y[i] + b * score[i]) * inv_root + root_b * z[i];
            if (!(std::abs(y[i]) <= kBlowUpBound)) {
                throw Error(ErrorCode::NonFinite, "iterate left the finite range at step " + std::to_string(n) +
                                                      " (mode " + to_string(cfg.mode) +
                                                      ", w = " + std::to_string(cfg.w) + ")");
            }
        }
    }
    if (opts.observer) (*opts.observer)(opts.stop_step, y);
}

Vec reverse_sample(const GuidanceConfig& cfg, const Schedule& s, const RandomStream& stream,
                   const std::optional<Vec>& init) {
    Vec y(static_cast<std::size_t>(cfg.dim()));
    if (init) {
        require(init->size() == y.size(), ErrorCode::InvalidArgument, "init dimension mismatch");
        y = *init;
    } else {
        stream.normals(RandomStream::kInit, 0, y);
    }
    reverse_steps(cfg, s, stream, y);
    return y;
}

Vec fine_reference_sample(const GuidanceConfig& cfg, int refinement, const Schedule& base,
                          const RandomStream& stream, const std::optional<Vec>& init) {
    require(refinement >= 1, ErrorCode::InvalidArgument, "refinement factor must be >= 1");
    if (refinement == 1) return reverse_sample(cfg, base, stream, init);
    const Schedule fine = Schedule::build(refinement * base.steps(), base.c0(), base.c1());
    return reverse_sample(cfg, fine, stream, init);
}

std::string schedule_id(const Schedule& s) {
    std::ostringstream os;
    os << "N=" << s.steps() << ",c0=" << s.c0() << ",c1=" << s.c1();
    return os.str();
}

namespace {

// Tags sampler errors with the trial that raised them.
template <class F>
void in_trial(std::size_t trial, F&& body) {
    try {
        body();
    } catch (const Error& e) {
        throw Error(e.code(), e.detail() + " (trial " + std::to_string(trial) + ")");
    }
}

}  // namespace

PairedBatch paired_sample(const GuidanceConfig& guided, const GuidanceConfig& unguided, const Schedule& s,
                          std::size_t trials, std::uint64_t master_seed, const PairOptions& opts) {
    guided.validate();
    unguided.validate();
    require(guided.dim() == unguided.dim(), ErrorCode::InvalidArgument, "paired arms differ in dimension");

    PairedBatch batch;
    batch.guided.resize(trials);
    batch.unguided.resize(trials);
    batch.trial_ids.resize(trials);
    batch.master_seed = master_seed;
    batch.schedule_id = schedule_id(s);
    batch.config_id = std::string(to_string(guided.mode)) + ":w=" + std::to_string(guided.w) + "|" +
                      to_string(unguided.mode) + ":w=" + std::to_string(unguided.w);

    parallel_for(trials, opts.workers, [&](std::size_t i) {
        const RandomStream shared(master_seed, i, 0);
        Vec init(static_cast<std::size_t>(guided.dim()));
        if (opts.fixed_init)
            init = *opts.fixed_init;
        else
            shared.normals(RandomStream::kInit, 0, init);

        Vec y0 = init;
        Vec yw = init;
        in_trial(i, [&] {
            reverse_steps(unguided, s, shared, y0);
            if (opts.decouple_noise)
                reverse_steps(guided, s, RandomStream(master_seed, i, 1), yw);
            else
                reverse_steps(guided, s, shared, yw);
        });
        batch.guided[i] = std::move(yw);
        batch.unguided[i] = std::move(y0);
        batch.trial_ids[i] = i;
    });
    return batch;
}

std::vector<Vec> sample_endpoints(const GuidanceConfig& cfg, const Schedule& s, std::size_t trials,
                                  std::uint64_t master_seed, int workers, std::uint64_t arm) {
    cfg.validate();
    std::vector<Vec> out(trials);
    parallel_for(trials, workers, [&](std::size_t i) {
        const RandomStream shared(master_seed, i, 0);
        Vec y(static_cast<std::size_t>(cfg.dim()));
        shared.normals(RandomStream::kInit, 0, y);
        in_trial(i, [&] {
            if (arm == 0)
                reverse_steps(cfg, s, shared, y);
            else
                reverse_steps(cfg, s, RandomStream(master_seed, i, arm), y);
        });
        out[i] = std::move(y);
    });
    return out;
}

RefinementSweep refinement_sweep(const GuidanceConfig& cfg, const std::vector<int>& steps, int reference_steps,
                                 double c0, double c1, std::size_t trials, std::uint64_t master_seed, int workers) {
    cfg.validate();
    std::vector<Schedule> schedules;
    for (int n : steps) schedules.push_back(Schedule::build(n, c0, c1));
    schedules.push_back(Schedule::build(reference_steps, c0, c1));

    // Grid events (log alpha_bar, schedule, step) in ascending log-time.
    struct Event {
        double u;
        std::size_t schedule;
        int step;
    };
    std::vector<Event> events;
    for (std::size_t j = 0; j < schedules.size(); ++j) {
        for (int n = schedules[j].steps(); n >= 1; --n) events.push_back({std::log(schedules[j].alpha_bar(n)), j, n});
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.u < b.u; });

    const std::size_t d = static_cast<std::size_t>(cfg.dim());
    const std::size_t m = schedules.size();
    RefinementSweep out;
    out.steps = steps;
    out.reference_steps = reference_steps;
    out.endpoints.assign(steps.size(), std::vector<Vec>(trials));
    out.reference.resize(trials);

    parallel_for(trials, workers, [&](std::size_t trial) {
        const RandomStream stream(master_seed, trial, 0);
        Vec init(d);
        stream.normals(RandomStream::kInit, 0, init);
        std::vector<Vec> state(m, init);
        std::vector<Vec> w_last(m, Vec(d, 0.0));
        Vec w(d, 0.0), inc(d), score(d);
        double u_prev = events.front().u;

        for (std::size_t k = 0; k < events.size(); ++k) {
            const Event& e = events[k];
            const double du = e.u - u_prev;
            if (du > 0.0) {
                stream.normals(RandomStream::kBrownianPath, k, inc);
                const double sd = std::sqrt(du);
                for (std::size_t i = 0; i < d; ++i) w[i] += sd * inc[i];
            }
            u_prev = e.u;
            const Schedule& s = schedules[e.schedule];
            if (e.step == s.steps() && e.schedule + 1 < m) {
                // Coarser grids start later; they pick up the reference state there.
                state[e.schedule] = state.back();
            } else if (e.step < s.steps()) {
                // completes step e.step + 1: alpha_bar_{n} -> alpha_bar_{n-1}
                const int n = e.step + 1;
                Vec& y = state[e.schedule];
                const double b = s.beta(n);
                const double step_du = e.u - std::log(s.alpha_bar(n));
                effective_score(cfg, s.alpha_bar(n), y, score);
                const double inv_root = 1.0 / std::sqrt(1.0 - b);
                const double root_b = std::sqrt(b);
                const double inv_sd = 1.0 / std::sqrt(step_du);
                for (std::size_t i = 0; i < d; ++i) {
                    const double z = (w[i] - w_last[e.schedule][i]) * inv_sd;
                    y[i] = (y[i] + b * score[i]) * inv_root + root_b * z;
                    if (!(std::abs(y[i]) <= kBlowUpBound)) [[unlikely]]
                        throw Error(ErrorCode::NonFinite, "iterate left the finite range at step " + std::to_string(n));
                }
            }
            w_last[e.schedule] = w;
        }
        for (std::size_t j = 0; j < steps.size(); ++j) out.endpoints[j][trial] = std::move(state[j]);
        out.reference[trial] = std::move(state.back());
    });
    return out;
}

}  // namespace guidelab
