#pragma once

// Shared oracle utilities for the test suites.  These stay independent of
// the implementation paths they are used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mibench/distributions.hpp"
#include "mibench/linalg.hpp"

namespace testutil {

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        stat = std::max(stat, std::abs(f - (static_cast<double>(i) + 1.0) / n));
        stat = std::max(stat, std::abs(f - static_cast<double>(i) / n));
    }
    return stat;
}

struct MonteCarloMean {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean of pmi over fresh joint samples, with its standard error.
inline MonteCarloMean pmi_monte_carlo(const mibench::JointDistribution& dist,
                                      mibench::RngStream& rng, int n_samples) {
    const int m = dist.dim_x();
    const int n = dist.dim_y();
    double sum = 0.0, sum_sq = 0.0;
    const int chunk = 4096;
    int remaining = n_samples;
    while (remaining > 0) {
        const int take = std::min(chunk, remaining);
        const mibench::RowMatrix rows = dist.sample(rng, take);
        for (int i = 0; i < take; ++i) {
            const mibench::Vector x = rows.row(i).head(m);
            const mibench::Vector y = rows.row(i).tail(n);
            const double v = dist.pmi(x, y);
            sum += v;
            sum_sq += v * v;
        }
        remaining -= take;
    }
    MonteCarloMean out;
    out.mean = sum / n_samples;
    const double var = std::max(0.0, sum_sq / n_samples - out.mean * out.mean);
    out.std_error = std::sqrt(var / n_samples);
    return out;
}

// Empirical covariance (denominator N) of row-major samples.
inline mibench::Matrix empirical_covariance(const mibench::RowMatrix& rows) {
    const auto n = static_cast<double>(rows.rows());
    mibench::Matrix centered = rows;
    const mibench::Vector mean = rows.colwise().mean();
    centered.rowwise() -= mean.transpose();
    return centered.transpose() * centered / n;
}

}  // namespace testutil
