#include "guidelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "guidelab/stats.hpp"

namespace guidelab {

namespace {

// Cell index on the grid: 0 = low overflow, 1..cells = interior, cells + 1 = high overflow.
class Grid {
public:
    Grid(std::span<const double> lo, std::span<const double> hi, int bins) : lo_(lo), hi_(hi), bins_(bins) {
        require(lo.size() == hi.size(), ErrorCode::InvalidArgument, "grid bounds differ in dimension");
        require(!lo.empty(), ErrorCode::InvalidArgument, "grid needs at least one axis");
        require(lo.size() <= 2, ErrorCode::DimensionTooHigh, "histogram TV supports d <= 2");
        require(bins >= 1, ErrorCode::InvalidArgument, "need at least one bin per axis");
        for (std::size_t k = 0; k < lo.size(); ++k)
            require(hi[k] > lo[k], ErrorCode::InvalidArgument, "grid upper bound must exceed lower bound");
        cells_ = 1;
        for (std::size_t k = 0; k < lo.size(); ++k) cells_ *= static_cast<std::size_t>(bins);
    }

    std::size_t size() const { return cells_ + 2; }

    std::size_t index(std::span<const double> x) const {
        require(x.size() == lo_.size(), ErrorCode::InvalidArgument, "sample dimension does not match the grid");
        for (std::size_t k = 0; k < x.size(); ++k)
            if (x[k] < lo_[k]) return 0;
        for (std::size_t k = 0; k < x.size(); ++k)
            if (!(x[k] < hi_[k])) return cells_ + 1;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            auto b = static_cast<std::size_t>((x[k] - lo_[k]) / (hi_[k] - lo_[k]) * bins_);
            b = std::min(b, static_cast<std::size_t>(bins_ - 1));
            idx = idx * static_cast<std::size_t>(bins_) + b;
        }
        return idx + 1;
    }

private:
    std::span<const double> lo_, hi_;
    int bins_;
    std::size_t cells_;
};

std::vector<double> frequencies(const std::vector<Vec>& samples, const Grid& grid) {
    require(!samples.empty(), ErrorCode::EmptyBatch, "histogram of an empty sample");
    std::vector<double> counts(grid.size(), 0.0);
    for (const Vec& x : samples) counts[grid.index(x)] += 1.0;
    for (double& c : counts) c /= static_cast<double>(samples.size());
    return counts;
}

double half_l1(const std::vector<double>& p, const std::vector<double>& q) {
    CompensatedSum s;
    for (std::size_t i = 0; i < p.size(); ++i) s.add(std::abs(p[i] - q[i]));
    return std::min(1.0, 0.5 * s.value());
}

}  // namespace

MetricRow classifier_metrics(const PairedBatch& batch, const ClassPair& pair, double w, double t_eval) {
    require(batch.size() > 0, ErrorCode::EmptyBatch, "classifier metrics of an empty batch");
    require(batch.unguided.size() == batch.size(), ErrorCode::InvalidArgument, "arms differ in size");
    const std::size_t n = batch.size();
    std::vector<double> improved(n), neg_recip(n);
    for (std::size_t i = 0; i < n; ++i) {
        require(batch.guided[i].size() == static_cast<std::size_t>(pair.dim()), ErrorCode::InvalidArgument,
                "endpoint dimension does not match the class pair");
        const double pg = pair.classifier_prob(t_eval, batch.guided[i]);
        const double pu = pair.classifier_prob(t_eval, batch.unguided[i]);
        improved[i] = pg >= pu ? 1.0 : 0.0;
        neg_recip[i] = -1.0 / pg;
    }
    const MeanEstimate imp = estimate_mean(improved);
    const MeanEstimate nr = estimate_mean(neg_recip);
    MetricRow row;
    row.w = w;
    row.n_trials = n;
    row.proportion_improved = imp.mean;
    row.proportion_improved_stderr = std::sqrt(imp.mean * (1.0 - imp.mean) / static_cast<double>(n));
    row.mean_neg_reciprocal = nr.mean;
    row.mean_neg_reciprocal_stderr = nr.std_error;
    return row;
}

Proportion window_fraction(const std::vector<Vec>& samples, int axis, double lo, double hi) {
    require(!samples.empty(), ErrorCode::EmptyBatch, "window fraction of an empty sample");
    std::size_t hits = 0;
    for (const Vec& x : samples) {
        require(axis >= 0 && static_cast<std::size_t>(axis) < x.size(), ErrorCode::InvalidArgument,
                "window axis out of range");
        const double v = x[static_cast<std::size_t>(axis)];
        if (v >= lo && v <= hi) ++hits;
    }
    const double n = static_cast<double>(samples.size());
    const double p = static_cast<double>(hits) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

double histogram_tv(const std::vector<Vec>& a, const std::vector<Vec>& b, std::span<const double> lo,
                    std::span<const double> hi, int bins) {
    const Grid grid(lo, hi, bins);
    return half_l1(frequencies(a, grid), frequencies(b, grid));
}

double shifted_histogram_tv(const std::vector<Vec>& a, const std::vector<Vec>& b, std::span<const double> lo,
                            std::span<const double> hi, int bins, int shifts) {
    require(shifts >= 1, ErrorCode::InvalidArgument, "need at least one grid shift");
    require(lo.size() == hi.size(), ErrorCode::InvalidArgument, "grid bounds differ in dimension");
    CompensatedSum total;
    Vec l(lo.begin(), lo.end()), h(hi.begin(), hi.end());
    for (int k = 0; k < shifts; ++k) {
        for (std::size_t i = 0; i < l.size(); ++i) {
            const double offset = (hi[i] - lo[i]) / bins * k / shifts;
            l[i] = lo[i] - offset;
            h[i] = hi[i] - offset;
        }
        total.add(histogram_tv(a, b, l, h, bins));
    }
    return total.value() / shifts;
}

std::vector<double> gmm_bin_masses(const IsotropicGmm& m, double t, double lo, double hi, int bins) {
    require(m.dim() == 1, ErrorCode::DimensionTooHigh, "exact bin masses are 1-D only");
    require(hi > lo && bins >= 1, ErrorCode::InvalidArgument, "invalid histogram grid");
    require(t >= 0.0 && t <= 1.0, ErrorCode::DegenerateTime, "signal level must lie in [0, 1]");
    // Upper-tail mass beyond each edge, accumulated over components.
    std::vector<double> tail(static_cast<std::size_t>(bins) + 1, 0.0);
    for (const auto& c : m.components()) {
        const double weight = std::exp(c.log_weight);
        const double mu = std::sqrt(t) * c.mean[0];
        const double sd = std::sqrt(t * c.variance + 1.0 - t);
        for (int k = 0; k <= bins; ++k) {
            const double edge = lo + (hi - lo) * k / bins;
            tail[static_cast<std::size_t>(k)] += weight * 0.5 * std::erfc((edge - mu) / (sd * std::sqrt(2.0)));
        }
    }
    std::vector<double> mass(static_cast<std::size_t>(bins) + 2);
    mass.front() = 1.0 - tail.front();
    for (int k = 0; k < bins; ++k) {
        const auto i = static_cast<std::size_t>(k);
        mass[i + 1] = std::max(0.0, tail[i] - tail[i + 1]);
    }
    mass.back() = tail.back();
    return mass;
}

double histogram_tv_to_gmm(const std::vector<Vec>& samples, const IsotropicGmm& m, double t, double lo, double hi,
                           int bins) {
    const double l[] = {lo};
    const double h[] = {hi};
    const Grid grid(l, h, bins);
    return half_l1(frequencies(samples, grid), gmm_bin_masses(m, t, lo, hi, bins));
}

TailRatio tail_relative_error(const PairedBatch& batch, const std::function<double(std::span<const double>)>& cost,
                              double tv) {
    const std::size_t n = batch.size();
    require(n > 0, ErrorCode::EmptyBatch, "tail ratio of an empty batch");
    std::vector<double> jg(n), gain(n);
    for (std::size_t i = 0; i < n; ++i) {
        jg[i] = cost(batch.guided[i]);
        gain[i] = cost(batch.unguided[i]) - jg[i];
    }
    const MeanEstimate den = estimate_mean(gain);
    if (!(den.mean > 0.0) || den.mean - 1.96 * den.std_error <= 0.0)
        throw Error(ErrorCode::Undefined, "guided arm shows no significant cost reduction");

    TailRatio out;
    if (tv <= 0.0) {
        out.tau = std::numeric_limits<double>::infinity();
    } else if (tv >= 1.0) {
        out.tau = -std::numeric_limits<double>::infinity();
    } else {
        std::vector<double> sorted = jg;
        const auto m = static_cast<std::size_t>(std::floor(tv * static_cast<double>(n)));
        // (m + 1)-th largest value
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(),
                         std::greater<>());
        out.tau = sorted[m];
    }
    std::vector<double> tail(n);
    for (std::size_t i = 0; i < n; ++i) tail[i] = jg[i] > out.tau ? jg[i] : 0.0;
    const MeanEstimate num = estimate_mean(tail);
    out.numerator = num.mean;
    out.denominator = den.mean;
    out.denominator_stderr = den.std_error;
    out.ratio = num.mean / den.mean;
    const double cov = sample_covariance(tail, gain);
    const double var = num.variance - 2.0 * out.ratio * cov + out.ratio * out.ratio * den.variance;
    out.ratio_stderr = std::sqrt(std::max(0.0, var) / static_cast<double>(n)) / den.mean;
    return out;
}

}  // namespace guidelab
