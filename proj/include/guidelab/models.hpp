#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "guidelab/common.hpp"
#include "guidelab/rng.hpp"

namespace guidelab {

// Time convention (library-wide)
// ------------------------------
// Every model operation takes the signal level t in [0, 1]: the noisy variable
// is X = sqrt(t) * X0 + sqrt(1 - t) * Z, so t = 1 is clean data and t = 0 is pure
// noise. A component N(mu, s2 I) therefore maps to N(sqrt(t) mu, (t s2 + 1 - t) I).
//
//   sampler step n          ->  t = alpha_bar_n
//   reverse-SDE time tau    ->  t = tau           (Y_tau ~ X_{1-tau})
//   forward noise level l   ->  t = 1 - l
//   denoiser time s (x_s = sqrt(1-s) x0 + sqrt(s) eps)  ->  t = 1 - s

struct GaussianComponent {
    double log_weight;
    Vec mean;
    double variance;
};

/// Mixture of isotropic Gaussians. Log-weights are normalized on construction.
class IsotropicGmm {
public:
    explicit IsotropicGmm(std::vector<GaussianComponent> components);

    static IsotropicGmm from_weights(std::span<const double> weights, const std::vector<Vec>& means,
                                     std::span<const double> variances);
    static IsotropicGmm standard_normal(int dim);

    int dim() const { return dim_; }
    std::size_t size() const { return components_.size(); }
    const std::vector<GaussianComponent>& components() const { return components_; }

    double noisy_logpdf(double t, std::span<const double> x) const;
    void noisy_score(double t, std::span<const double> x, std::span<double> out) const;
    Vec noisy_score(double t, std::span<const double> x) const;
    // E[X0 | X = x] at signal level t.
    Vec posterior_mean(double t, std::span<const double> x) const;
    // Component responsibilities at signal level t.
    Vec responsibilities(double t, std::span<const double> x) const;
    void sample(double t, Rng& rng, std::span<double> out) const;

    Vec mean() const;

private:
    // Fills `logits` with responsibilities at (t, x); returns the log density
    // when want_normalizer, NaN otherwise.
    double component_logits(double t, std::span<const double> x, std::span<double> logits,
                            bool want_normalizer = true) const;

    int dim_;
    std::vector<GaussianComponent> components_;
    std::vector<double> cumulative_weights_;
    bool equal_variances_;
};

/// Finitely supported weighted distribution. Points are stored row-major.
class PointCloud {
public:
    PointCloud(int dim, std::vector<double> points, std::vector<double> log_weights);

    static PointCloud uniform(const std::vector<Vec>& points);

    int dim() const { return dim_; }
    std::size_t size() const { return log_weights_.size(); }
    std::span<const double> point(std::size_t i) const {
        return {points_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    double log_weight(std::size_t i) const { return log_weights_[i]; }
    std::span<const double> log_weights() const { return log_weights_; }

    // t must lie strictly inside (0, 1).
    double noisy_logpdf(double t, std::span<const double> x) const;
    void noisy_score(double t, std::span<const double> x, std::span<double> out) const;
    Vec noisy_score(double t, std::span<const double> x) const;
    Vec posterior_mean(double t, std::span<const double> x) const;
    // exp(log w_tilted - log w) per atom, scaled so the largest factor is 1.
    // Requires same_support(tilted).
    Vec weight_ratio(const PointCloud& tilted) const;
    /// Scores of this cloud and of the cloud with weights w_i * ratio_i in one
    /// pass over the atoms.
    void noisy_score_pair(std::span<const double> ratio, double t, std::span<const double> x, std::span<double> out,
                          std::span<double> out_tilted) const;
    bool same_support(const PointCloud& other) const { return dim_ == other.dim_ && points_ == other.points_; }
    // t in [0, 1]; t = 1 returns atoms exactly.
    void sample(double t, Rng& rng, std::span<double> out) const;

private:
    double atom_logits(double t, std::span<const double> x, std::span<double> logits,
                       bool want_normalizer = true) const;

    int dim_;
    std::vector<double> points_;
    std::vector<double> log_weights_;
    std::vector<double> cumulative_weights_;
};

using Target = std::variant<IsotropicGmm, PointCloud>;

int dim(const Target& m);
double noisy_logpdf(const Target& m, double t, std::span<const double> x);
void noisy_score(const Target& m, double t, std::span<const double> x, std::span<double> out);
Vec noisy_score(const Target& m, double t, std::span<const double> x);
void sample(const Target& m, double t, Rng& rng, std::span<double> out);

/// Unconditional model, class-conditional model for the target class, and the
/// prior p(c). An optional complement (the law given "not c") enables the
/// mixture consistency check p = p(c) p_c + (1 - p(c)) p_rest.
class ClassPair {
public:
    ClassPair(IsotropicGmm unconditional, IsotropicGmm conditional, double prior,
              std::optional<IsotropicGmm> complement = std::nullopt);

    const IsotropicGmm& unconditional() const { return unconditional_; }
    const IsotropicGmm& conditional() const { return conditional_; }
    double prior() const { return prior_; }
    int dim() const { return unconditional_.dim(); }

    // p(c | X = x) at signal level t.
    double classifier_prob(double t, std::span<const double> x) const;
    double log_classifier_prob(double t, std::span<const double> x) const;

private:
    IsotropicGmm unconditional_;
    IsotropicGmm conditional_;
    double prior_;
};

}  // namespace guidelab
