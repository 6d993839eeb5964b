#include "guidelab/reward.hpp"

#include <cmath>
#include <string>

namespace guidelab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool same_mixture(const IsotropicGmm& a, const IsotropicGmm& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto& ca = a.components()[k];
        const auto& cb = b.components()[k];
        if (std::abs(ca.log_weight - cb.log_weight) > 1e-12 || ca.variance != cb.variance || ca.mean != cb.mean)
            return false;
    }
    return true;
}

}  // namespace

void RewardSpec::validate(int dim) const {
    require(std::isfinite(log_scale), ErrorCode::InvalidArgument, "reward log_scale must be finite");
    std::visit(overloaded{
                   [&](const QuadraticWell& q) {
                       require(q.beta >= 0.0 && std::isfinite(q.beta), ErrorCode::InvalidArgument,
                               "QuadraticWell beta must be non-negative");
                       require(q.target.size() == static_cast<std::size_t>(dim), ErrorCode::InvalidArgument,
                               "QuadraticWell target dimension mismatch");
                   },
                   [&](const IndicatorBand& b) {
                       require(b.beta >= 0.0 && std::isfinite(b.beta), ErrorCode::InvalidArgument,
                               "IndicatorBand beta must be non-negative");
                       require(b.lo < b.hi, ErrorCode::InvalidArgument, "IndicatorBand needs lo < hi");
                       require(b.height > 0.0, ErrorCode::InvalidArgument, "IndicatorBand height must be positive");
                       require(b.axis >= 0 && b.axis < dim, ErrorCode::InvalidArgument,
                               "IndicatorBand axis out of range");
                   },
                   [&](const ReciprocalClassifierCost& c) {
                       require(c.pair.dim() == dim, ErrorCode::InvalidArgument,
                               "classifier cost dimension mismatch");
                   },
               },
               kind);
}

double log_reward_value(const RewardSpec& r, std::span<const double> x) {
    const double core = std::visit(
        overloaded{
            [&](const QuadraticWell& q) { return -q.beta * squared_distance(x, q.target); },
            [&](const IndicatorBand& b) {
                const double v = x[static_cast<std::size_t>(b.axis)];
                return (v >= b.lo && v <= b.hi) ? b.beta * b.height : 0.0;
            },
            [&](const ReciprocalClassifierCost& c) { return -c.pair.log_classifier_prob(1.0, x); },
        },
        r.kind);
    return core + r.log_scale;
}

double reward_value(const RewardSpec& r, std::span<const double> x) { return std::exp(log_reward_value(r, x)); }

IsotropicGmm reweight_gmm(const IsotropicGmm& m, const QuadraticWell& well) {
    require(well.target.size() == static_cast<std::size_t>(m.dim()), ErrorCode::InvalidArgument,
            "QuadraticWell target dimension mismatch");
    const double half_d = 0.5 * m.dim();
    std::vector<GaussianComponent> out;
    out.reserve(m.size());
    for (const auto& c : m.components()) {
        const double shrink = 1.0 + 2.0 * well.beta * c.variance;
        Vec mean(c.mean.size());
        for (std::size_t i = 0; i < mean.size(); ++i)
            mean[i] = (c.mean[i] + 2.0 * well.beta * c.variance * well.target[i]) / shrink;
        const double log_norm = -half_d * std::log(shrink) - well.beta * squared_distance(c.mean, well.target) / shrink;
        out.push_back({c.log_weight + log_norm, std::move(mean), c.variance / shrink});
    }
    return IsotropicGmm(std::move(out));
}

PointCloud reweight_pointcloud(const PointCloud& c, const RewardSpec& r) {
    r.validate(c.dim());
    std::vector<double> lw(c.size());
    std::vector<double> pts;
    pts.reserve(c.size() * static_cast<std::size_t>(c.dim()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto p = c.point(i);
        lw[i] = c.log_weight(i) + log_reward_value(r, p);
        pts.insert(pts.end(), p.begin(), p.end());
    }
    return PointCloud(c.dim(), std::move(pts), std::move(lw));
}

IsotropicGmm cost_reweighted(const ClassPair& pair) { return pair.unconditional(); }

Target reweight(const Target& m, const RewardSpec& r) {
    r.validate(dim(m));
    if (const auto* cloud = std::get_if<PointCloud>(&m)) return reweight_pointcloud(*cloud, r);
    const auto& gmm = std::get<IsotropicGmm>(m);
    return std::visit(overloaded{
                          [&](const QuadraticWell& q) -> Target { return reweight_gmm(gmm, q); },
                          [&](const IndicatorBand&) -> Target {
                              throw Error(ErrorCode::Unsupported,
                                          "IndicatorBand reweighting of a Gaussian mixture has no closed form");
                          },
                          [&](const ReciprocalClassifierCost& c) -> Target {
                              require(same_mixture(gmm, c.pair.conditional()), ErrorCode::Unsupported,
                                      "classifier-cost reweighting is exact only for the pair's conditional");
                              return cost_reweighted(c.pair);
                          },
                      },
                      r.kind);
}

double mean_reward(const Target& m, const RewardSpec& r) {
    r.validate(dim(m));
    if (const auto* cloud = std::get_if<PointCloud>(&m)) {
        std::vector<double> terms(cloud->size());
        for (std::size_t i = 0; i < cloud->size(); ++i)
            terms[i] = cloud->log_weight(i) + log_reward_value(r, cloud->point(i));
        return std::exp(log_sum_exp(terms));
    }
    const auto& gmm = std::get<IsotropicGmm>(m);
    return std::visit(
        overloaded{
            [&](const QuadraticWell& q) {
                const double half_d = 0.5 * gmm.dim();
                std::vector<double> terms;
                for (const auto& c : gmm.components()) {
                    const double shrink = 1.0 + 2.0 * q.beta * c.variance;
                    terms.push_back(c.log_weight - half_d * std::log(shrink) -
                                    q.beta * squared_distance(c.mean, q.target) / shrink);
                }
                return std::exp(log_sum_exp(terms) + r.log_scale);
            },
            [&](const IndicatorBand&) -> double {
                throw Error(ErrorCode::Unsupported, "IndicatorBand mean reward of a Gaussian mixture has no closed form");
            },
            [&](const ReciprocalClassifierCost& c) -> double {
                require(same_mixture(gmm, c.pair.conditional()), ErrorCode::Unsupported,
                        "classifier-cost mean is exact only under the pair's conditional");
                return std::exp(r.log_scale) / c.pair.prior();
            },
        },
        r.kind);
}

double log_reward_posterior(const Target& model, const Target& reweighted, double mean_reward, double t,
                            std::span<const double> y) {
    require(mean_reward > 0.0, ErrorCode::InvalidArgument, "mean reward must be positive");
    return std::log(mean_reward) + noisy_logpdf(reweighted, t, y) - noisy_logpdf(model, t, y);
}

double reward_posterior(const Target& model, const Target& reweighted, double mean_reward, double t,
                        std::span<const double> y) {
    return std::exp(log_reward_posterior(model, reweighted, mean_reward, t, y));
}

RewardedModel RewardedModel::make(const Target& model, const RewardSpec& r) {
    return {model, reweight(model, r), guidelab::mean_reward(model, r)};
}

}  // namespace guidelab
