#include "guidelab/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace guidelab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::size_t kSmallMixture = 16;

std::span<double> scratch(std::size_t n) {
    thread_local std::vector<double> buffer;
    if (buffer.size() < n) buffer.resize(n);
    return {buffer.data(), n};
}

// Normalizes logits in place into probabilities; returns the log normalizer
// (NaN when not requested).
double softmax_in_place(std::span<double> logits, bool want_normalizer = true) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logits) m = std::max(m, v);
    double s = 0.0;
    for (double& v : logits) {
        // Terms below e^-50 relative to the largest are under 1e-21 of the
        // total and cannot move a double-precision sum; skip the exp.
        const double z = v - m;
        v = z < -50.0 ? 0.0 : std::exp(z);
        s += v;
    }
    const double inv = 1.0 / s;
    for (double& v : logits) v *= inv;
    return want_normalizer ? m + std::log(s) : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> normalize_log_weights(std::vector<double> log_weights) {
    const double z = log_sum_exp(log_weights);
    require(std::isfinite(z), ErrorCode::InvalidArgument, "log-weights do not define a distribution");
    for (double& lw : log_weights) lw -= z;
    return log_weights;
}

std::vector<double> cumulative(std::span<const double> log_weights) {
    std::vector<double> c(log_weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        acc += std::exp(log_weights[i]);
        c[i] = acc;
    }
    return c;
}

std::size_t pick(std::span<const double> cumulative_weights, double u) {
    const double target = u * cumulative_weights.back();
    const auto it = std::upper_bound(cumulative_weights.begin(), cumulative_weights.end(), target);
    return std::min(static_cast<std::size_t>(it - cumulative_weights.begin()), cumulative_weights.size() - 1);
}

[[noreturn, gnu::cold, gnu::noinline]] void bad_signal(double t, const char* range) {
    throw Error(ErrorCode::DegenerateTime, std::string("signal level must lie in ") + range + ", got " + std::to_string(t));
}

[[noreturn, gnu::cold, gnu::noinline]] void bad_dim(std::size_t got, int want) {
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: got " + std::to_string(got) + ", expected " + std::to_string(want));
}

inline void check_signal(double t) {
    if (!(t >= 0.0 && t <= 1.0)) [[unlikely]]
        bad_signal(t, "[0, 1]");
}

inline void check_open_signal(double t) {
    if (!(t > 0.0 && t < 1.0)) [[unlikely]]
        bad_signal(t, "(0, 1) for point clouds");
}

inline void check_dim(std::size_t got, int want) {
    if (got != static_cast<std::size_t>(want)) [[unlikely]]
        bad_dim(got, want);
}

// D > 0 fixes the dimension at compile time; D = 0 reads it from x.
template <int D>
void fill_atom_logits(const double* p, std::span<const double> log_weights, std::span<const double> x,
                      double root_t, double inv_two_var, std::span<double> logits) {
    const std::size_t d = D > 0 ? static_cast<std::size_t>(D) : x.size();
    for (std::size_t i = 0; i < log_weights.size(); ++i, p += d) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double r = x[j] - root_t * p[j];
            sq += r * r;
        }
        logits[i] = log_weights[i] - sq * inv_two_var;
    }
}

// Accumulates sum_i post_i * p_i and sum_i post_i * ratio_i * p_i; returns sum_i post_i * ratio_i.
template <int D>
double accumulate_pair(const double* p, std::span<const double> post, std::span<const double> ratio,
                       std::span<double> out, std::span<double> out_tilted) {
    const std::size_t d = D > 0 ? static_cast<std::size_t>(D) : out.size();
    double mass = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i, p += d) {
        if (post[i] == 0.0) continue;
        const double q = post[i] * ratio[i];
        mass += q;
        for (std::size_t j = 0; j < d; ++j) {
            out[j] += post[i] * p[j];
            out_tilted[j] += q * p[j];
        }
    }
    return mass;
}

}  // namespace

// ---------------------------------------------------------------------------
// IsotropicGmm

IsotropicGmm::IsotropicGmm(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    require(!components_.empty(), ErrorCode::InvalidArgument, "mixture needs at least one component");
    dim_ = static_cast<int>(components_.front().mean.size());
    require(dim_ >= 1, ErrorCode::InvalidArgument, "dimension must be positive");

    std::vector<double> lw;
    lw.reserve(components_.size());
    for (const auto& c : components_) {
        check_dim(c.mean.size(), dim_);
        require(c.variance > 0.0 && std::isfinite(c.variance), ErrorCode::InvalidArgument,
                "component variance must be positive");
        for (double m : c.mean) require(std::isfinite(m), ErrorCode::InvalidArgument, "component mean not finite");
        lw.push_back(c.log_weight);
    }
    lw = normalize_log_weights(std::move(lw));
    equal_variances_ = true;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        components_[k].log_weight = lw[k];
        if (components_[k].variance != components_.front().variance) equal_variances_ = false;
    }
    cumulative_weights_ = cumulative(lw);
}

IsotropicGmm IsotropicGmm::from_weights(std::span<const double> weights, const std::vector<Vec>& means,
                                        std::span<const double> variances) {
    require(weights.size() == means.size() && weights.size() == variances.size(), ErrorCode::InvalidArgument,
            "weights, means and variances must have equal length");
    std::vector<GaussianComponent> comps;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        require(weights[k] > 0.0, ErrorCode::InvalidArgument, "mixture weights must be positive");
        comps.push_back({std::log(weights[k]), means[k], variances[k]});
    }
    return IsotropicGmm(std::move(comps));
}

IsotropicGmm IsotropicGmm::standard_normal(int dim) {
    return IsotropicGmm({{0.0, Vec(static_cast<std::size_t>(dim), 0.0), 1.0}});
}

double IsotropicGmm::component_logits(double t, std::span<const double> x, std::span<double> logits,
                                      bool want_normalizer) const {
    check_signal(t);
    check_dim(x.size(), dim_);
    const double root_t = std::sqrt(t);
    const double half_d = 0.5 * dim_;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double v = t * c.variance + 1.0 - t;
        require(v > 0.0, ErrorCode::DegenerateTime, "non-positive marginal variance");
        double sq = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double r = x[i] - root_t * c.mean[i];
            sq += r * r;
        }
        logits[k] = c.log_weight - 0.5 * sq / v;
        if (!equal_variances_) logits[k] -= half_d * std::log(v);
    }
    double lse = softmax_in_place(logits, want_normalizer);
    if (!want_normalizer) return lse;
    if (equal_variances_) lse -= half_d * std::log(t * components_.front().variance + 1.0 - t);
    return lse - half_d * kLog2Pi;
}

double IsotropicGmm::noisy_logpdf(double t, std::span<const double> x) const {
    return component_logits(t, x, scratch(components_.size()));
}

void IsotropicGmm::noisy_score(double t, std::span<const double> x, std::span<double> out) const {
    if (dim_ == 1 && equal_variances_ && components_.size() <= kSmallMixture) {
        check_signal(t);
        check_dim(x.size(), 1);
        check_dim(out.size(), 1);
        // One pass: out = (sqrt(t) E[mu | x] - x) / v.
        const double root_t = std::sqrt(t);
        const double v = t * components_.front().variance + 1.0 - t;
        const double half_inv_v = 0.5 / v;
        std::array<double, kSmallMixture> logits;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < components_.size(); ++k) {
            const double r = x[0] - root_t * components_[k].mean[0];
            logits[k] = components_[k].log_weight - r * r * half_inv_v;
            m = std::max(m, logits[k]);
        }
        double mass = 0.0, first = 0.0;
        for (std::size_t k = 0; k < components_.size(); ++k) {
            const double z = logits[k] - m;
            const double e = z < -50.0 ? 0.0 : std::exp(z);
            mass += e;
            first += e * components_[k].mean[0];
        }
        out[0] = (root_t * first / mass - x[0]) / v;
        return;
    }
    auto resp = scratch(components_.size());
    component_logits(t, x, resp, false);
    check_dim(out.size(), dim_);
    const double root_t = std::sqrt(t);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double scale = resp[k] / (t * c.variance + 1.0 - t);
        if (scale == 0.0) continue;
        for (int i = 0; i < dim_; ++i) out[i] += scale * (root_t * c.mean[i] - x[i]);
    }
}

Vec IsotropicGmm::noisy_score(double t, std::span<const double> x) const {
    Vec out(static_cast<std::size_t>(dim_));
    noisy_score(t, x, out);
    return out;
}

Vec IsotropicGmm::posterior_mean(double t, std::span<const double> x) const {
    auto resp = scratch(components_.size());
    component_logits(t, x, resp, false);
    const double root_t = std::sqrt(t);
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double scale = resp[k] / (t * c.variance + 1.0 - t);
        for (int i = 0; i < dim_; ++i) out[i] += scale * (c.mean[i] * (1.0 - t) + root_t * c.variance * x[i]);
    }
    return out;
}

Vec IsotropicGmm::responsibilities(double t, std::span<const double> x) const {
    Vec resp(components_.size());
    component_logits(t, x, resp, false);
    return resp;
}

void IsotropicGmm::sample(double t, Rng& rng, std::span<double> out) const {
    check_signal(t);
    check_dim(out.size(), dim_);
    const auto& c = components_[pick(cumulative_weights_, rng.uniform())];
    const double root_t = std::sqrt(t);
    const double sd = std::sqrt(t * c.variance + 1.0 - t);
    for (int i = 0; i < dim_; ++i) out[i] = root_t * c.mean[i] + sd * rng.normal();
}

Vec IsotropicGmm::mean() const {
    Vec m(static_cast<std::size_t>(dim_), 0.0);
    for (const auto& c : components_) {
        const double w = std::exp(c.log_weight);
        for (int i = 0; i < dim_; ++i) m[i] += w * c.mean[i];
    }
    return m;
}

// ---------------------------------------------------------------------------
// PointCloud

PointCloud::PointCloud(int dim, std::vector<double> points, std::vector<double> log_weights)
    : dim_(dim), points_(std::move(points)) {
    require(dim_ >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
    require(!log_weights.empty(), ErrorCode::InvalidArgument, "point cloud needs at least one point");
    require(points_.size() == log_weights.size() * static_cast<std::size_t>(dim_), ErrorCode::InvalidArgument,
            "points and weights disagree in length");
    for (double p : points_) require(std::isfinite(p), ErrorCode::InvalidArgument, "point coordinate not finite");
    log_weights_ = normalize_log_weights(std::move(log_weights));
    cumulative_weights_ = cumulative(log_weights_);
}

PointCloud PointCloud::uniform(const std::vector<Vec>& points) {
    require(!points.empty(), ErrorCode::InvalidArgument, "point cloud needs at least one point");
    const int d = static_cast<int>(points.front().size());
    std::vector<double> flat;
    flat.reserve(points.size() * points.front().size());
    for (const auto& p : points) {
        check_dim(p.size(), d);
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return PointCloud(d, std::move(flat), std::vector<double>(points.size(), 0.0));
}

double PointCloud::atom_logits(double t, std::span<const double> x, std::span<double> logits,
                               bool want_normalizer) const {
    check_open_signal(t);
    check_dim(x.size(), dim_);
    const double root_t = std::sqrt(t);
    const double inv_two_var = 0.5 / (1.0 - t);
    switch (dim_) {
        case 1: fill_atom_logits<1>(points_.data(), log_weights_, x, root_t, inv_two_var, logits); break;
        case 2: fill_atom_logits<2>(points_.data(), log_weights_, x, root_t, inv_two_var, logits); break;
        default: fill_atom_logits<0>(points_.data(), log_weights_, x, root_t, inv_two_var, logits); break;
    }
    return softmax_in_place(logits, want_normalizer);
}

double PointCloud::noisy_logpdf(double t, std::span<const double> x) const {
    const double lse = atom_logits(t, x, scratch(log_weights_.size()));
    return lse - 0.5 * dim_ * (kLog2Pi + std::log(1.0 - t));
}

void PointCloud::noisy_score(double t, std::span<const double> x, std::span<double> out) const {
    auto post = scratch(log_weights_.size());
    atom_logits(t, x, post, false);
    check_dim(out.size(), dim_);
    std::fill(out.begin(), out.end(), 0.0);
    const double* p = points_.data();
    for (std::size_t i = 0; i < log_weights_.size(); ++i, p += dim_) {
        if (post[i] == 0.0) continue;
        for (int j = 0; j < dim_; ++j) out[j] += post[i] * p[j];
    }
    const double root_t = std::sqrt(t);
    const double inv = 1.0 / (1.0 - t);
    for (int j = 0; j < dim_; ++j) out[j] = (root_t * out[j] - x[j]) * inv;
}

Vec PointCloud::noisy_score(double t, std::span<const double> x) const {
    Vec out(static_cast<std::size_t>(dim_));
    noisy_score(t, x, out);
    return out;
}

Vec PointCloud::weight_ratio(const PointCloud& tilted) const {
    require(same_support(tilted), ErrorCode::InvalidArgument, "weight ratio needs clouds on the same atoms");
    Vec ratio(log_weights_.size());
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ratio.size(); ++i) {
        ratio[i] = tilted.log_weights_[i] - log_weights_[i];
        shift = std::max(shift, ratio[i]);
    }
    for (double& r : ratio) r = std::exp(r - shift);
    return ratio;
}

void PointCloud::noisy_score_pair(std::span<const double> ratio, double t, std::span<const double> x,
                                  std::span<double> out, std::span<double> out_tilted) const {
    check_dim(out.size(), dim_);
    check_dim(out_tilted.size(), dim_);
    require(ratio.size() == log_weights_.size(), ErrorCode::InvalidArgument, "one weight ratio per atom");
    // The tilted posterior is the base posterior times the weight ratio.
    auto post = scratch(log_weights_.size());
    atom_logits(t, x, post, false);
    std::fill(out.begin(), out.end(), 0.0);
    std::fill(out_tilted.begin(), out_tilted.end(), 0.0);
    double mass = 0.0;
    switch (dim_) {
        case 1: mass = accumulate_pair<1>(points_.data(), post, ratio, out, out_tilted); break;
        case 2: mass = accumulate_pair<2>(points_.data(), post, ratio, out, out_tilted); break;
        default: mass = accumulate_pair<0>(points_.data(), post, ratio, out, out_tilted); break;
    }
    const double root_t = std::sqrt(t);
    const double inv = 1.0 / (1.0 - t);
    for (int j = 0; j < dim_; ++j) {
        out[j] = (root_t * out[j] - x[j]) * inv;
        out_tilted[j] = (root_t * out_tilted[j] / mass - x[j]) * inv;
    }
}

Vec PointCloud::posterior_mean(double t, std::span<const double> x) const {
    auto post = scratch(log_weights_.size());
    atom_logits(t, x, post, false);
    Vec out(static_cast<std::size_t>(dim_), 0.0);
    const double* p = points_.data();
    for (std::size_t i = 0; i < log_weights_.size(); ++i, p += dim_) {
        for (int j = 0; j < dim_; ++j) out[j] += post[i] * p[j];
    }
    return out;
}

void PointCloud::sample(double t, Rng& rng, std::span<double> out) const {
    check_signal(t);
    check_dim(out.size(), dim_);
    const auto s = point(pick(cumulative_weights_, rng.uniform()));
    const double root_t = std::sqrt(t);
    const double sd = std::sqrt(1.0 - t);
    for (int j = 0; j < dim_; ++j) {
        out[j] = root_t * s[j];
        if (sd > 0.0) out[j] += sd * rng.normal();
    }
}

// ---------------------------------------------------------------------------
// Target dispatch

int dim(const Target& m) {
    return std::visit([](const auto& model) { return model.dim(); }, m);
}

double noisy_logpdf(const Target& m, double t, std::span<const double> x) {
    return std::visit([&](const auto& model) { return model.noisy_logpdf(t, x); }, m);
}

void noisy_score(const Target& m, double t, std::span<const double> x, std::span<double> out) {
    std::visit([&](const auto& model) { model.noisy_score(t, x, out); }, m);
}

Vec noisy_score(const Target& m, double t, std::span<const double> x) {
    Vec out(x.size());
    noisy_score(m, t, x, out);
    return out;
}

void sample(const Target& m, double t, Rng& rng, std::span<double> out) {
    std::visit([&](const auto& model) { model.sample(t, rng, out); }, m);
}

// ---------------------------------------------------------------------------
// ClassPair

namespace {

void check_pair_consistency(const IsotropicGmm& unconditional, const IsotropicGmm& conditional,
                            const IsotropicGmm& complement, double prior) {
    const int d = unconditional.dim();
    const Vec center = unconditional.mean();
    double max_sd = 0.0;
    for (const auto* m : {&unconditional, &conditional, &complement}) {
        for (const auto& c : m->components()) {
            max_sd = std::max(max_sd, std::sqrt(c.variance));
            double dist = std::sqrt(squared_distance(c.mean, center));
            max_sd = std::max(max_sd, dist);
        }
    }
    const double half_width = 6.0 * max_sd;
    constexpr int kProbe = 101;
    Vec x = center;
    for (int axis = 0; axis < d; ++axis) {
        for (int i = 0; i < kProbe; ++i) {
            x = center;
            x[axis] += -half_width + 2.0 * half_width * i / (kProbe - 1);
            const double lhs = std::exp(unconditional.noisy_logpdf(1.0, x));
            const double rhs = prior * std::exp(conditional.noisy_logpdf(1.0, x)) +
                               (1.0 - prior) * std::exp(complement.noisy_logpdf(1.0, x));
            require(std::abs(lhs - rhs) <= 1e-8, ErrorCode::InvalidArgument,
                    "class pair is inconsistent: unconditional density differs from the prior-weighted mixture");
        }
    }
}

}  // namespace

ClassPair::ClassPair(IsotropicGmm unconditional, IsotropicGmm conditional, double prior,
                     std::optional<IsotropicGmm> complement)
    : unconditional_(std::move(unconditional)), conditional_(std::move(conditional)), prior_(prior) {
    require(unconditional_.dim() == conditional_.dim(), ErrorCode::InvalidArgument, "class pair dimensions differ");
    require(prior_ > 0.0 && prior_ < 1.0, ErrorCode::InvalidArgument, "prior must lie in (0, 1)");
    if (complement) {
        require(complement->dim() == unconditional_.dim(), ErrorCode::InvalidArgument,
                "complement dimension differs");
        check_pair_consistency(unconditional_, conditional_, *complement, prior_);
    }
}

double ClassPair::log_classifier_prob(double t, std::span<const double> x) const {
    return std::log(prior_) + conditional_.noisy_logpdf(t, x) - unconditional_.noisy_logpdf(t, x);
}

double ClassPair::classifier_prob(double t, std::span<const double> x) const {
    return std::min(1.0, std::exp(log_classifier_prob(t, x)));
}

}  // namespace guidelab
