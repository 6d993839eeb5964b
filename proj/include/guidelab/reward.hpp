#pragma once

#include <variant>

#include "guidelab/models.hpp"

namespace guidelab {

// r_ext(x) = -||x - target||^2
struct QuadraticWell {
    Vec target;
    double beta = 1.0;
};

// r_ext(x) = height * 1(lo <= x[axis] <= hi)
struct IndicatorBand {
    int axis = 0;
    double lo = 0.0;
    double hi = 1.0;
    double height = 1.0;
    double beta = 1.0;
};

// J(x) = 1 / p(c | X_0 = x)
struct ReciprocalClassifierCost {
    ClassPair pair;
};

enum class RewardSign { Reward, Cost };

/// Positive reward (or cost) r(x) = scale * exp(beta * r_ext(x)); for the
/// reciprocal-classifier kind r(x) = scale / p(c | X_0 = x). Positivity holds by
/// construction. `log_scale` only rescales r and leaves every reweighted
/// distribution unchanged.
struct RewardSpec {
    std::variant<QuadraticWell, IndicatorBand, ReciprocalClassifierCost> kind;
    RewardSign sign = RewardSign::Reward;
    double log_scale = 0.0;

    void validate(int dim) const;
};

double log_reward_value(const RewardSpec& r, std::span<const double> x);
double reward_value(const RewardSpec& r, std::span<const double> x);

// Exact r-reweighted mixture: each component is multiplied by the Gaussian-shaped
// reward and renormalized.
IsotropicGmm reweight_gmm(const IsotropicGmm& m, const QuadraticWell& well);
// Atom weights multiplied by r(s_i) and renormalized.
PointCloud reweight_pointcloud(const PointCloud& c, const RewardSpec& r);
// Cost-reweighting the conditional law by 1/p(c|x) gives back the unconditional law.
IsotropicGmm cost_reweighted(const ClassPair& pair);

// Dispatches on the model family. GMM x IndicatorBand is Unsupported; GMM x
// ReciprocalClassifierCost is supported only for the pair's own conditional.
Target reweight(const Target& m, const RewardSpec& r);

// E[r(X_0)] under the model, exact.
double mean_reward(const Target& m, const RewardSpec& r);

// r_{1-t}(y) = E[r(X_0) | X = y] at signal level t, via the density ratio
// mean_reward * p^{r-wt}_t(y) / p_t(y).
double log_reward_posterior(const Target& model, const Target& reweighted, double mean_reward, double t,
                            std::span<const double> y);
double reward_posterior(const Target& model, const Target& reweighted, double mean_reward, double t,
                        std::span<const double> y);

/// Original model, its reweighted counterpart and E[r(X_0)], bundled for the
/// samplers and identity checks.
struct RewardedModel {
    Target original;
    Target reweighted;
    double mean_reward;

    static RewardedModel make(const Target& model, const RewardSpec& r);

    double posterior(double t, std::span<const double> y) const {
        return reward_posterior(original, reweighted, mean_reward, t, y);
    }
};

}  // namespace guidelab
