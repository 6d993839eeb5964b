#pragma once

#include <functional>
#include <span>
#include <vector>

#include "guidelab/models.hpp"
#include "guidelab/samplers.hpp"

namespace guidelab {

/// Per-w classifier statistics of a paired batch. Ties count as improved.
struct MetricRow {
    double w = 0.0;
    double proportion_improved = 0.0;
    double proportion_improved_stderr = 0.0;
    double mean_neg_reciprocal = 0.0;  // mean over the guided arm of -1 / p(c | Y)
    double mean_neg_reciprocal_stderr = 0.0;
    std::size_t n_trials = 0;
};

// Classifier evaluated at signal level t_eval (1 = clean data).
MetricRow classifier_metrics(const PairedBatch& batch, const ClassPair& pair, double w, double t_eval = 1.0);

struct Proportion {
    double value = 0.0;
    double std_error = 0.0;
};

// Fraction of samples with lo <= x[axis] <= hi.
Proportion window_fraction(const std::vector<Vec>& samples, int axis, double lo, double hi);

/// Half the L1 distance between the two binned empirical laws on a common grid
/// of `bins` cells per axis over [lo, hi]; everything outside the box is pooled
/// into two overflow cells (any coordinate below lo, else any above hi). d must
/// be 1 or 2.
double histogram_tv(const std::vector<Vec>& a, const std::vector<Vec>& b, std::span<const double> lo,
                    std::span<const double> hi, int bins);

/// histogram_tv averaged over `shifts` grids, the k-th moved down by k / shifts of
/// a cell on every axis. For closely coupled samples a single grid's value
/// depends on which pairs straddle its edges; averaging over offsets removes
/// most of that jitter.
double shifted_histogram_tv(const std::vector<Vec>& a, const std::vector<Vec>& b, std::span<const double> lo,
                            std::span<const double> hi, int bins, int shifts);

// Exact cell masses of a 1-D mixture at signal level t on the histogram grid
// above: [underflow, bins..., overflow].
std::vector<double> gmm_bin_masses(const IsotropicGmm& m, double t, double lo, double hi, int bins);

// Histogram TV of 1-D samples against the exact mixture cell masses.
double histogram_tv_to_gmm(const std::vector<Vec>& samples, const IsotropicGmm& m, double t, double lo, double hi,
                           int bins);

struct TailRatio {
    double ratio = 0.0;
    double ratio_stderr = 0.0;
    double tau = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    double denominator_stderr = 0.0;
};

/// E[J 1(J > tau)] over the guided arm divided by E[J unguided] - E[J guided],
/// with tau the smallest guided value whose empirical exceedance frequency is at
/// most tv. Throws Undefined if the denominator is not positive or its 95% CI
/// covers 0. The stderr comes from the delta method on paired trials.
TailRatio tail_relative_error(const PairedBatch& batch, const std::function<double(std::span<const double>)>& cost,
                              double tv);

}  // namespace guidelab
