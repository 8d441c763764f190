#pragma once

// The estimator-facing sample container and result record.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "mibench/linalg.hpp"

namespace mibench {

namespace flags {
inline constexpr const char* degenerate_input = "degenerate-input";
inline constexpr const char* clipped = "clipped";
inline constexpr const char* non_finite_guarded = "non-finite-guarded";
inline constexpr const char* non_convergence = "non-convergence";
inline constexpr const char* overfitting = "overfitting";
inline constexpr const char* run_failed = "run-failed";
}  // namespace flags

// N rows of (X1..Xm, Y1..Yn), the X block first.
struct Sample {
    int dim_x = 0;
    int dim_y = 0;
    RowMatrix values;

    Sample() = default;
    Sample(int m, int n, RowMatrix rows) : dim_x(m), dim_y(n), values(std::move(rows)) {
        validate();
    }

    int n_points() const { return static_cast<int>(values.rows()); }

    void validate() const {
        if (dim_x < 1 || dim_y < 1) {
            throw std::invalid_argument("Sample: block dims must be >= 1");
        }
        if (values.cols() != dim_x + dim_y) {
            throw std::invalid_argument("Sample: column count does not match dims");
        }
        if (values.rows() < 2) {
            throw std::invalid_argument("Sample: needs at least 2 rows");
        }
        if (!values.allFinite()) {
            throw std::invalid_argument("Sample: values must be finite");
        }
    }

    auto x_block() const { return values.leftCols(dim_x); }
    auto y_block() const { return values.rightCols(dim_y); }
};

struct EstimateResult {
    double value = 0.0;  // nats
    std::string estimator_id;
    std::vector<std::string> flags;

    void add_flag(const std::string& flag) {
        if (!has_flag(flag)) {
            flags.push_back(flag);
            std::sort(flags.begin(), flags.end());
        }
    }
    bool has_flag(const std::string& flag) const {
        return std::find(flags.begin(), flags.end(), flag) != flags.end();
    }
};

}  // namespace mibench
