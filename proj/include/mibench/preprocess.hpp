#pragma once

// Per-dimension preprocessing fitted on the full sample: standardization,
// rank-based uniformization, and gaussianization of the margins.

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mibench/sample.hpp"
#include "mibench/special.hpp"

namespace mibench {

enum class Preprocess { none, standardize, uniformize_margins, gaussianize_margins };

inline const char* preprocess_name(Preprocess p) {
    switch (p) {
        case Preprocess::none: return "none";
        case Preprocess::standardize: return "standardize";
        case Preprocess::uniformize_margins: return "uniformize-margins";
        case Preprocess::gaussianize_margins: return "gaussianize-margins";
    }
    return "?";
}

inline Preprocess preprocess_from_name(const std::string& name) {
    if (name == "none") return Preprocess::none;
    if (name == "standardize") return Preprocess::standardize;
    if (name == "uniformize-margins") return Preprocess::uniformize_margins;
    if (name == "gaussianize-margins") return Preprocess::gaussianize_margins;
    throw std::invalid_argument("unknown preprocessing strategy: " + name);
}

struct PreprocessResult {
    Sample sample;
    std::vector<std::string> flags;
};

namespace detail {

// Ranks mapped to r/(N+1); ties share their average rank.
inline void uniformize_column(RowMatrix& values, int col) {
    const int n = static_cast<int>(values.rows());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values(a, col) < values(b, col); });
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && values(order[j + 1], col) == values(order[i], col)) ++j;
        const double avg_rank = 0.5 * double(i + 1 + j + 1);
        for (int t = i; t <= j; ++t) values(order[t], col) = avg_rank / double(n + 1);
        i = j + 1;
    }
}

}  // namespace detail

inline PreprocessResult preprocess(const Sample& s, Preprocess strategy) {
    s.validate();
    PreprocessResult out{s, {}};
    if (strategy == Preprocess::none) return out;

    RowMatrix& values = out.sample.values;
    const int n = s.n_points();
    const int d = s.dim_x + s.dim_y;

    if (strategy == Preprocess::standardize) {
        for (int c = 0; c < d; ++c) {
            const double mean = values.col(c).mean();
            const double var = (values.col(c).array() - mean).square().sum() / n;
            const double sd = std::sqrt(var);
            if (sd > 0.0) {
                values.col(c) = (values.col(c).array() - mean) / sd;
            } else {
                out.flags.push_back(flags::degenerate_input);  // left unscaled
            }
        }
        return out;
    }

    for (int c = 0; c < d; ++c) detail::uniformize_column(values, c);
    if (strategy == Preprocess::gaussianize_margins) {
        for (int c = 0; c < d; ++c)
            for (int r = 0; r < n; ++r) values(r, c) = normal_quantile(values(r, c));
    }
    return out;
}

}  // namespace mibench
