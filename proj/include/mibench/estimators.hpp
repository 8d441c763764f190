#pragma once

// Classical (non-neural) mutual information estimators: model-based CCA,
// the KSG-1/KSG-2 neighbor estimators, an equal-width histogram plug-in,
// and a leave-one-out Gaussian-KDE entropy sum with nearest-neighbor
// bandwidths.  All values are in nats.

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "mibench/neighbors.hpp"
#include "mibench/sample.hpp"
#include "mibench/special.hpp"

namespace mibench {

// ---------------------------------------------------------------------------
// Model-based estimator via canonical correlations

inline EstimateResult estimate_cca(const Sample& s) {
    s.validate();
    const int m = s.dim_x, n = s.dim_y;
    const int N = s.n_points();
    if (N <= m + n) {
        throw std::invalid_argument("estimate_cca: requires N > dim_x + dim_y");
    }
    EstimateResult result;
    result.estimator_id = "cca";

    RowMatrix centered = s.values;
    centered.rowwise() -= s.values.colwise().mean();
    const Matrix cov = centered.transpose() * centered / double(N - 1);

    bool deg_x = false, deg_y = false;
    const Matrix wx = sym_inv_sqrt(cov.topLeftCorner(m, m), 1e-12, &deg_x);
    const Matrix wy = sym_inv_sqrt(cov.bottomRightCorner(n, n), 1e-12, &deg_y);
    if (deg_x || deg_y) result.add_flag(flags::degenerate_input);

    const Vector rho = singular_values(wx * cov.topRightCorner(m, n) * wy);
    double value = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
        double r = rho[i];
        if (r > 1.0 - 1e-9) {
            r = 1.0 - 1e-9;
            result.add_flag(flags::clipped);
        }
        value -= 0.5 * std::log1p(-r * r);
    }
    result.value = value;
    return result;
}

// ---------------------------------------------------------------------------
// KSG neighbor estimators

namespace detail {

struct KsgIndexes {
    NeighborIndex joint;
    NeighborIndex x;
    NeighborIndex y;
};

inline KsgIndexes build_ksg_indexes(const Sample& s, Metric block_metric) {
    // With max-norm blocks the joint metric max(D_X, D_Y) is the max-norm
    // over all coordinates, so one index over the full rows serves.
    if (block_metric != Metric::chebyshev) {
        throw std::invalid_argument("ksg: only max-norm block metrics are supported");
    }
    return KsgIndexes{NeighborIndex(s.values, Metric::chebyshev),
                      NeighborIndex(s.x_block(), Metric::chebyshev),
                      NeighborIndex(s.y_block(), Metric::chebyshev)};
}

}  // namespace detail

// KSG-1: psi(k) + psi(N) - mean_i[ psi(n_x,i + 1) + psi(n_y,i + 1) ] with
// strict-inequality block counts at the joint k-th neighbor radius.
inline EstimateResult estimate_ksg1(const Sample& s, int k = 10) {
    s.validate();
    const int N = s.n_points();
    if (k < 1 || k >= N) {
        throw std::invalid_argument("estimate_ksg1: requires 1 <= k < N");
    }
    const auto idx = detail::build_ksg_indexes(s, Metric::chebyshev);
    double mean_terms = 0.0;
    int zero_radius = 0;
    for (int i = 0; i < N; ++i) {
        const double radius = idx.joint.kth_distance(i, k);
        long n_x = 0, n_y = 0;
        if (radius > 0.0) {
            n_x = idx.x.range_count(i, radius, /*strict=*/true);
            n_y = idx.y.range_count(i, radius, /*strict=*/true);
        } else {
            ++zero_radius;  // duplicated points; strict count at radius 0 is empty
        }
        mean_terms += digamma(double(n_x + 1)) + digamma(double(n_y + 1));
    }
    mean_terms /= N;
    EstimateResult result;
    result.estimator_id = "ksg-1";
    result.value = digamma(double(k)) + digamma(double(N)) - mean_terms;
    if (zero_radius > N / 100) result.add_flag(flags::degenerate_input);
    return result;
}

// KSG-2: per-block radii taken from the k nearest joint neighbors, inclusive
// counts, and the -1/k correction.
inline EstimateResult estimate_ksg2(const Sample& s, int k = 10) {
    s.validate();
    const int N = s.n_points();
    if (k < 1 || k >= N) {
        throw std::invalid_argument("estimate_ksg2: requires 1 <= k < N");
    }
    const auto idx = detail::build_ksg_indexes(s, Metric::chebyshev);
    const int m = s.dim_x, n = s.dim_y;
    double mean_terms = 0.0;
    int zero_radius = 0;
    for (int i = 0; i < N; ++i) {
        const double radius = idx.joint.kth_distance(i, k);
        // Block projections of the joint neighborhood: the tightest block
        // radii still containing all k neighbors.
        double rx = 0.0, ry = 0.0;
        for (int j = 0; j < N; ++j) {
            if (j == i) continue;
            double dx = 0.0, dy = 0.0;
            for (int c = 0; c < m; ++c) dx = std::max(dx, std::abs(s.values(i, c) - s.values(j, c)));
            for (int c = 0; c < n; ++c)
                dy = std::max(dy, std::abs(s.values(i, m + c) - s.values(j, m + c)));
            if (std::max(dx, dy) <= radius) {
                rx = std::max(rx, dx);
                ry = std::max(ry, dy);
            }
        }
        long n_x = k, n_y = k;
        if (rx > 0.0) n_x = idx.x.range_count(i, rx, /*strict=*/false);
        if (ry > 0.0) n_y = idx.y.range_count(i, ry, /*strict=*/false);
        if (radius <= 0.0) ++zero_radius;
        mean_terms += digamma(double(n_x)) + digamma(double(n_y));
    }
    mean_terms /= N;
    EstimateResult result;
    result.estimator_id = "ksg-2";
    result.value = digamma(double(k)) - 1.0 / k + digamma(double(N)) - mean_terms;
    if (zero_radius > N / 100) result.add_flag(flags::degenerate_input);
    return result;
}

// ---------------------------------------------------------------------------
// Equal-width histogram plug-in

inline EstimateResult estimate_histogram(const Sample& s, int bins_per_dim = 10) {
    s.validate();
    const int N = s.n_points();
    if (bins_per_dim < 1 || N < bins_per_dim) {
        throw std::invalid_argument("estimate_histogram: requires N >= bins_per_dim >= 1");
    }
    if (bins_per_dim > 120) {
        throw std::invalid_argument("estimate_histogram: bins_per_dim must be <= 120");
    }
    EstimateResult result;
    result.estimator_id = "histogram";

    const int d = s.dim_x + s.dim_y;
    std::vector<double> lo(d), width(d);
    std::vector<bool> keep(d, true);
    for (int c = 0; c < d; ++c) {
        lo[c] = s.values.col(c).minCoeff();
        const double hi = s.values.col(c).maxCoeff();
        width[c] = hi - lo[c];
        if (!(width[c] > 0.0)) {
            keep[c] = false;  // constant dimension carries no information
            result.add_flag(flags::degenerate_input);
        }
    }

    auto cell_of = [&](int row, int col_begin, int col_end) {
        std::string key;
        key.reserve(static_cast<std::size_t>(col_end - col_begin));
        for (int c = col_begin; c < col_end; ++c) {
            if (!keep[c]) continue;
            int b = static_cast<int>((s.values(row, c) - lo[c]) / width[c] * bins_per_dim);
            b = std::clamp(b, 0, bins_per_dim - 1);
            key.push_back(static_cast<char>(b));
        }
        return key;
    };

    std::unordered_map<std::string, int> joint_counts, x_counts, y_counts;
    for (int i = 0; i < N; ++i) {
        std::string kx = cell_of(i, 0, s.dim_x);
        std::string ky = cell_of(i, s.dim_x, d);
        ++joint_counts[kx + '\x7f' + ky];
        ++x_counts[kx];
        ++y_counts[ky];
    }

    double mi = 0.0;
    for (const auto& [key, count] : joint_counts) {
        const auto split = key.find('\x7f');
        const int cx = x_counts.at(key.substr(0, split));
        const int cy = y_counts.at(key.substr(split + 1));
        const double p = double(count) / N;
        mi += p * std::log(double(count) * N / (double(cx) * double(cy)));
    }
    result.value = mi;
    return result;
}

// ---------------------------------------------------------------------------
// Leave-one-out Gaussian KDE entropy sum (LNN-style local bandwidths)

inline EstimateResult estimate_kde(const Sample& s, int neighbors_for_bandwidth = 5) {
    s.validate();
    const int N = s.n_points();
    if (neighbors_for_bandwidth < 1 || N <= neighbors_for_bandwidth) {
        throw std::invalid_argument("estimate_kde: requires N > neighbors_for_bandwidth >= 1");
    }
    EstimateResult result;
    result.estimator_id = "kde-lnn-style";

    const int m = s.dim_x, n = s.dim_y;
    const NeighborIndex joint(s.values, Metric::euclidean);

    std::vector<double> bandwidth(N);
    for (int i = 0; i < N; ++i) {
        double h = joint.kth_distance(i, neighbors_for_bandwidth);
        if (h < 1e-12) {
            h = 1e-12;
            result.add_flag(flags::clipped);
        }
        bandwidth[i] = h;
    }

    const double log_2pi = std::log(2.0 * M_PI);
    double h_x = 0.0, h_y = 0.0, h_xy = 0.0;
    for (int i = 0; i < N; ++i) {
        const double inv_2h2 = 1.0 / (2.0 * bandwidth[i] * bandwidth[i]);
        double sum_x = 0.0, sum_y = 0.0, sum_xy = 0.0;
        const double* ri = s.values.row(i).data();
        for (int j = 0; j < N; ++j) {
            if (j == i) continue;
            const double* rj = s.values.row(j).data();
            double rx2 = 0.0, ry2 = 0.0;
            for (int c = 0; c < m; ++c) {
                const double diff = ri[c] - rj[c];
                rx2 += diff * diff;
            }
            for (int c = m; c < m + n; ++c) {
                const double diff = ri[c] - rj[c];
                ry2 += diff * diff;
            }
            sum_x += std::exp(-rx2 * inv_2h2);
            sum_y += std::exp(-ry2 * inv_2h2);
            sum_xy += std::exp(-(rx2 + ry2) * inv_2h2);
        }
        const double log_h = std::log(bandwidth[i]);
        const double log_norm = std::log(double(N - 1));
        h_x -= std::log(sum_x) - log_norm - 0.5 * m * log_2pi - m * log_h;
        h_y -= std::log(sum_y) - log_norm - 0.5 * n * log_2pi - n * log_h;
        h_xy -= std::log(sum_xy) - log_norm - 0.5 * (m + n) * log_2pi - (m + n) * log_h;
    }
    result.value = (h_x + h_y - h_xy) / N;
    if (!std::isfinite(result.value)) {
        result.value = 0.0;
        result.add_flag(flags::non_finite_guarded);
    }
    return result;
}

}  // namespace mibench
