#include "guidelab/theory.hpp"

#include <cmath>
#include <limits>

#include "guidelab/parallel.hpp"
#include "guidelab/stats.hpp"

namespace guidelab {

namespace {

double score_gap_sq(const Target& base, const Target& reweighted, double t, std::span<const double> y, Vec& a,
                    Vec& b) {
    noisy_score(base, t, y, a);
    noisy_score(reweighted, t, y, b);
    return squared_distance(a, b);
}

Vec difference(std::span<const double> a, std::span<const double> b) {
    Vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

}  // namespace

IdentityReport make_report(std::string name, double lhs, double rhs, double lhs_stderr, double rhs_stderr,
                           double combined_stderr, std::size_t trials, double tol_abs, double z_max) {
    IdentityReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.lhs_stderr = lhs_stderr;
    r.rhs_stderr = rhs_stderr;
    r.combined_stderr = combined_stderr;
    r.trials = trials;
    r.tol_abs = tol_abs;
    const double gap = std::abs(lhs - rhs);
    if (combined_stderr > 0.0)
        r.z_score = gap / combined_stderr;
    else
        r.z_score = gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.passed = std::isfinite(gap) && gap <= tol_abs + z_max * combined_stderr;
    return r;
}

double window_length(const Schedule& s, double t, int steps) {
    const int n0 = s.nearest_step(t);
    require(steps >= 1 && n0 - steps >= 1, ErrorCode::ConfigError, "perturbation window runs past the last step");
    return s.alpha_bar(n0 - steps) - s.alpha_bar(n0);
}

std::vector<IdentityReport> check_lemma2(const RewardedModel& rm, const Schedule& s, double t, double dt,
                                         const std::vector<Vec>& directions, const Vec& y,
                                         const Lemma2Options& opts) {
    const std::size_t d = static_cast<std::size_t>(dim(rm.original));
    require(!directions.empty(), ErrorCode::InvalidArgument, "need at least one direction");
    for (const Vec& g : directions)
        require(g.size() == d, ErrorCode::InvalidArgument, "g must match the model dimension");
    require(y.size() == d, ErrorCode::InvalidArgument, "y must match the model dimension");
    require(t > 0.0 && dt > 0.0 && t + dt < 1.0 - s.early_stopping(), ErrorCode::InvalidArgument,
            "need 0 < t < t + dt < 1 - delta");

    const int n0 = s.nearest_step(t);
    const double t0 = s.alpha_bar(n0);
    int k = 0;
    while (n0 - k > 1 && s.alpha_bar(n0 - k) - t0 < dt * (1.0 - 1e-9)) ++k;
    require(k >= 1 && std::abs((s.alpha_bar(n0 - k) - t0) - dt) <= 1e-9 * dt, ErrorCode::ConfigError,
            "dt does not span a whole number of schedule steps");
    require(!opts.richardson || k % 2 == 0, ErrorCode::ConfigError,
            "Richardson extrapolation needs an even number of window steps");

    // Arm 0 is unperturbed; direction j uses arm 1 + 2j (full window) and 2 + 2j (half window).
    const std::size_t n_dir = directions.size();
    const std::size_t arms = 1 + 2 * n_dir;
    std::vector<int> last_step(arms, n0 + 1);
    for (std::size_t j = 0; j < n_dir; ++j) {
        last_step[1 + 2 * j] = n0 - k + 1;
        last_step[2 + 2 * j] = n0 - k / 2 + 1;
    }
    const double h1 = s.alpha_bar(n0 - k) - t0;
    const double h2 = s.alpha_bar(n0 - k / 2) - t0;
    const double t_end = s.alpha_bar(1);
    const auto alpha_bar = s.alpha_bars();
    const auto beta = s.betas();

    std::vector<std::vector<double>> est(n_dir, std::vector<double>(opts.trials));
    parallel_for(opts.trials, opts.workers, [&](std::size_t i) {
        const RandomStream stream(opts.seed, i, 0);
        std::vector<Vec> state(arms, y);
        Vec z(d), score(d);
        for (int n = n0; n > 1; --n) {
            const auto idx = static_cast<std::size_t>(n - 1);
            const double b = beta[idx];
            const double inv_root = 1.0 / std::sqrt(1.0 - b);
            const double root_b = std::sqrt(b);
            stream.normals(RandomStream::kStepNoise, static_cast<std::uint64_t>(n), z);
            for (std::size_t a = 0; a < arms; ++a) {
                Vec& ya = state[a];
                noisy_score(rm.original, alpha_bar[idx], ya, score);
                if (a > 0 && n >= last_step[a]) {
                    const Vec& g = directions[(a - 1) / 2];
                    for (std::size_t c = 0; c < d; ++c) score[c] += g[c];
                }
                for (std::size_t c = 0; c < d; ++c) ya[c] = (ya[c] + b * score[c]) * inv_root + root_b * z[c];
            }
        }
        const double r0 = rm.posterior(t_end, state[0]);
        for (std::size_t j = 0; j < n_dir; ++j) {
            const double l1 = (rm.posterior(t_end, state[1 + 2 * j]) - r0) / h1;
            const double l2 = (rm.posterior(t_end, state[2 + 2 * j]) - r0) / h2;
            est[j][i] = opts.richardson ? (h1 * l2 - h2 * l1) / (h1 - h2) : l1;
        }
    });

    const Vec ds = difference(noisy_score(rm.reweighted, t0, y), noisy_score(rm.original, t0, y));
    const double scale = rm.posterior(t0, y) / t0;
    std::vector<IdentityReport> out;
    for (std::size_t j = 0; j < n_dir; ++j) {
        const double rhs = scale * dot(ds, directions[j]);
        const MeanEstimate lhs = estimate_mean(est[j]);
        out.push_back(make_report("lemma2", lhs.mean, rhs, lhs.std_error, 0.0, lhs.std_error, opts.trials));
    }
    return out;
}

IdentityReport check_lemma2(const RewardedModel& rm, const Schedule& s, double t, double dt, const Vec& g,
                            const Vec& y, const Lemma2Options& opts) {
    return check_lemma2(rm, s, t, dt, std::vector<Vec>{g}, y, opts).front();
}

IdentityReport check_theorem1(const GuidanceConfig& cfg, double mean_value, const Schedule& s,
                              const Theorem1Options& opts) {
    cfg.validate();
    require(cfg.mode == GuidanceMode::RewardImprove || cfg.mode == GuidanceMode::CostReduce,
            ErrorCode::InvalidArgument, "the identity needs a RewardImprove or CostReduce config");
    const Target& base = *cfg.base;
    const Target& reweighted = *cfg.reweighted;
    const std::size_t d = static_cast<std::size_t>(cfg.dim());
    require(!opts.y0 || opts.y0->size() == d, ErrorCode::InvalidArgument, "y0 dimension mismatch");
    const bool cost = cfg.mode == GuidanceMode::CostReduce;
    const auto unguided = cfg.with_scale(0.0);
    const double t_end = s.alpha_bar(1);
    const double w = cfg.w;
    auto posterior = [&](double t, std::span<const double> y) {
        return reward_posterior(base, reweighted, mean_value, t, y);
    };

    std::vector<double> lhs(opts.trials), rhs(opts.trials);
    parallel_for(opts.trials, opts.workers, [&](std::size_t i) {
        const RandomStream stream(opts.seed, i, 0);
        Vec init(d);
        if (opts.y0)
            init = *opts.y0;
        else
            stream.normals(RandomStream::kInit, 0, init);

        Vec y = init;
        reverse_steps(unguided, s, stream, y);
        const double r_plain = posterior(t_end, y);

        CompensatedSum integral;
        Vec a(d), b(d);
        const StepObserver accumulate = [&](int n, std::span<const double> yn) {
            if (n < 2 || w == 0.0) return;
            const double tn = s.alpha_bar(n);
            const double term = (s.alpha_bar(n - 1) - tn) * (w / tn) * posterior(tn, yn) *
                                score_gap_sq(base, reweighted, tn, yn, a, b);
            integral.add(term);
        };
        ReverseOptions ro;
        ro.observer = &accumulate;
        Vec yw = init;
        reverse_steps(cfg, s, stream, yw, ro);
        const double r_guided = posterior(t_end, yw);

        lhs[i] = cost ? r_plain - r_guided : r_guided - r_plain;
        rhs[i] = integral.value();
    });

    const MeanEstimate l = estimate_mean(lhs);
    const MeanEstimate r = estimate_mean(rhs);
    std::vector<double> diff(opts.trials);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = lhs[i] - rhs[i];
    const MeanEstimate dd = estimate_mean(diff);
    IdentityReport rep = make_report(cost ? "theorem2" : "theorem1", l.mean, r.mean, l.std_error, r.std_error,
                                     dd.std_error, opts.trials);
    if (w > 0.0) rep.passed = rep.passed && l.mean > 0.0 && r.mean > 0.0;
    return rep;
}

IdentityReport check_lemma3(const RewardedModel& rm, const Schedule& fine, double tau, double t, const Vec& y,
                            const Lemma3Options& opts) {
    require(tau >= fine.early_stopping() - 1e-15 && tau <= t && t <= 1.0, ErrorCode::InvalidArgument,
            "need delta <= tau <= t <= 1");
    require(y.size() == static_cast<std::size_t>(dim(rm.original)), ErrorCode::InvalidArgument,
            "y must match the model dimension");
    const int n_tau = fine.nearest_step(tau);
    const int n_t = fine.nearest_step(t);
    const double lhs = rm.posterior(fine.alpha_bar(n_tau), y);
    const double tol = 160.0 / fine.steps() * std::abs(lhs);
    if (n_tau == n_t) return make_report("lemma3", lhs, lhs, 0.0, 0.0, 0.0, opts.trials, tol);

    const auto cfg = GuidanceConfig::unguided(rm.original);
    const double t_end = fine.alpha_bar(n_t);
    std::vector<double> vals(opts.trials);
    parallel_for(opts.trials, opts.workers, [&](std::size_t i) {
        ReverseOptions ro;
        ro.start_step = n_tau;
        ro.stop_step = n_t;
        Vec yy = y;
        reverse_steps(cfg, fine, RandomStream(opts.seed, i, 0), yy, ro);
        vals[i] = rm.posterior(t_end, yy);
    });
    const MeanEstimate r = estimate_mean(vals);
    return make_report("lemma3", lhs, r.mean, 0.0, r.std_error, r.std_error, opts.trials, tol);
}

double check_score_finite_differences(std::size_t cases, std::uint64_t seed) {
    constexpr double h = 1e-5;
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        Rng rng(seed, c, 0);
        const bool cloud = c % 2 == 1;
        const int d = 1 + static_cast<int>(rng.uniform() * (cloud ? 2 : 3));
        const int k = cloud ? 3 + static_cast<int>(rng.uniform() * 18) : 1 + static_cast<int>(rng.uniform() * 4);
        auto point = [&] {
            Vec v(static_cast<std::size_t>(d));
            for (double& x : v) x = 2.0 * rng.normal();
            return v;
        };
        std::vector<Vec> pts;
        std::vector<double> weights;
        std::vector<double> variances;
        for (int j = 0; j < k; ++j) {
            pts.push_back(point());
            weights.push_back(0.1 + rng.uniform());
            variances.push_back(0.3 + 1.7 * rng.uniform());
        }
        const Target m = cloud ? Target{PointCloud::uniform(pts)}
                               : Target{IsotropicGmm::from_weights(weights, pts, variances)};
        const double t = cloud ? 0.05 + 0.85 * rng.uniform() : rng.uniform();
        Vec x = point();
        const Vec score = noisy_score(m, t, x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double x_i = x[i];
            x[i] = x_i + h;
            const double up = noisy_logpdf(m, t, x);
            x[i] = x_i - h;
            const double down = noisy_logpdf(m, t, x);
            x[i] = x_i;
            worst = std::max(worst, std::abs((up - down) / (2.0 * h) - score[i]));
        }
    }
    return worst;
}

double check_scorematch_identity(const IsotropicGmm& gmm, const QuadraticWell& well, std::span<const double> s_grid,
                                 const std::vector<Vec>& x_grid) {
    const IsotropicGmm rw = reweight_gmm(gmm, well);
    double worst = 0.0;
    for (double s : s_grid) {
        require(s > 0.0 && s < 1.0, ErrorCode::InvalidArgument, "denoiser times must lie in (0, 1)");
        const double t = denoiser_signal_level(s);
        for (const Vec& x : x_grid) {
            const Vec x0 = rw.posterior_mean(t, x);
            const Vec score = rw.noisy_score(t, x);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double eps_hat = (x[i] - std::sqrt(1.0 - s) * x0[i]) / std::sqrt(s);
                worst = std::max(worst, std::abs(eps_hat + std::sqrt(s) * score[i]));
            }
        }
    }
    return worst;
}

IdentityReport check_cfg_cost_identity(const ClassPair& pair, const CfgCostOptions& opts) {
    require(pair.prior() > 0.0, ErrorCode::InvalidArgument, "prior must be positive");
    const std::size_t d = static_cast<std::size_t>(pair.dim());
    std::vector<double> vals(opts.trials);
    parallel_for(opts.trials, opts.workers, [&](std::size_t i) {
        Rng rng(RandomStream(opts.seed, i, 0));
        Vec x(d);
        pair.conditional().sample(1.0, rng, x);
        vals[i] = 1.0 / pair.classifier_prob(1.0, x);
    });
    const MeanEstimate m = estimate_mean(vals);
    IdentityReport rep = make_report("e_j0", m.mean, 1.0 / pair.prior(), m.std_error, 0.0, m.std_error, opts.trials,
                                     1e-12 / pair.prior());  // roundoff floor when every draw agrees

    const Schedule s = Schedule::build();
    const RandomStream grid(opts.seed, 0, 7);
    double worst = 0.0;
    for (double w : {0.5, 2.0}) {
        const auto cfg = GuidanceConfig::cfg(pair, w);
        const auto mirror = GuidanceConfig::cost_reduce(pair.conditional(), cost_reweighted(pair), w);
        for (int j = 0; j < opts.drift_points; ++j) {
            const int n = 1 + static_cast<int>(static_cast<long long>(j) * s.steps() / opts.drift_points);
            Vec x(d);
            grid.normals(RandomStream::kSequential, static_cast<std::uint64_t>(j), x);
            for (double& v : x) v *= 3.0;
            const Vec a = effective_score(cfg, s, n, x);
            const Vec b = effective_score(mirror, s, n, x);
            for (std::size_t i = 0; i < d; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        }
    }
    rep.max_abs_error = worst;
    rep.passed = rep.passed && worst <= 1e-12;
    return rep;
}

namespace {

IdentityReport sign_report(std::string name, const std::vector<double>& guided, const std::vector<double>& plain,
                           bool lower_is_better) {
    std::vector<double> gain(guided.size());
    for (std::size_t i = 0; i < gain.size(); ++i)
        gain[i] = lower_is_better ? plain[i] - guided[i] : guided[i] - plain[i];
    const MeanEstimate g = estimate_mean(guided);
    const MeanEstimate p = estimate_mean(plain);
    const MeanEstimate dg = estimate_mean(gain);
    IdentityReport rep;
    rep.name = std::move(name);
    rep.lhs = g.mean;
    rep.rhs = p.mean;
    rep.lhs_stderr = g.std_error;
    rep.rhs_stderr = p.std_error;
    rep.combined_stderr = dg.std_error;
    rep.trials = guided.size();
    rep.z_score = dg.std_error > 0.0 ? dg.mean / dg.std_error : 0.0;
    rep.passed = rep.z_score >= 3.0;
    return rep;
}

}  // namespace

IdentityReport check_cost_decrease(const ClassPair& pair, double w, const Schedule& s, const SignCheckOptions& opts) {
    const auto batch = paired_sample(GuidanceConfig::cfg(pair, w), GuidanceConfig::conditional(pair), s, opts.trials,
                                     opts.seed, PairOptions{false, opts.workers, std::nullopt});
    const double t_end = s.alpha_bar(1);
    std::vector<double> guided(batch.size()), plain(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        guided[i] = 1.0 / pair.classifier_prob(t_end, batch.guided[i]);
        plain[i] = 1.0 / pair.classifier_prob(t_end, batch.unguided[i]);
    }
    return sign_report("corollary1", guided, plain, true);
}

IdentityReport check_reward_increase(const RewardedModel& rm, double w, const Schedule& s,
                                     const SignCheckOptions& opts) {
    const auto cfg = GuidanceConfig::reward_improve(rm.original, rm.reweighted, w);
    const auto batch = paired_sample(cfg, cfg.with_scale(0.0), s, opts.trials, opts.seed,
                                     PairOptions{false, opts.workers, std::nullopt});
    const double t_end = s.alpha_bar(1);
    std::vector<double> guided(batch.size()), plain(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        guided[i] = rm.posterior(t_end, batch.guided[i]);
        plain[i] = rm.posterior(t_end, batch.unguided[i]);
    }
    return sign_report("corollary2", guided, plain, false);
}

}  // namespace guidelab
