#pragma once

// Dense linear algebra used by the distribution and estimator layers.
// Eigen supplies the factorizations; this header fixes the library's matrix
// types, the SPD jitter policy, and a pseudo-inverse square root for
// whitening nearly rank-deficient covariance blocks.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mibench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Samples are stored row-major: one observation per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class FactorizationError : public std::runtime_error {
public:
    explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

inline void require_square_symmetric(const Matrix& m, const char* who) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(who) + ": matrix must be square");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument(std::string(who) + ": matrix must be symmetric");
    }
}

// Lower Cholesky factor of an SPD matrix.  On failure a single retry adds
// 1e-12 * trace/dim to the diagonal to absorb roundoff at near-singular
// corners of parameter sweeps; a second failure throws.
inline Matrix cholesky_lower(const Matrix& m) {
    require_square_symmetric(m, "cholesky_lower");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    const double jitter = 1e-12 * m.trace() / static_cast<double>(m.rows());
    Matrix jittered = m;
    jittered.diagonal().array() += jitter;
    Eigen::LLT<Matrix> retry(jittered);
    if (retry.info() == Eigen::Success) {
        return retry.matrixL();
    }
    throw FactorizationError("cholesky_lower: matrix is not positive definite");
}

inline double log_det_spd(const Matrix& m) {
    const Matrix lower = cholesky_lower(m);
    return 2.0 * lower.diagonal().array().log().sum();
}

struct SvdResult {
    Matrix u;
    Vector singular_values;  // nonincreasing, nonnegative
    Matrix v;
};

inline SvdResult svd(const Matrix& m) {
    if (!m.allFinite()) {
        throw std::invalid_argument("svd: matrix must have finite entries");
    }
    Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

inline Vector singular_values(const Matrix& m) { return svd(m).singular_values; }

// Symmetric pseudo-inverse square root of a PSD matrix.  Eigenvalues at or
// below rank_tol * max_eigenvalue are treated as zero; *degenerate reports
// whether any were dropped.
inline Matrix sym_inv_sqrt(const Matrix& m, double rank_tol, bool* degenerate = nullptr) {
    require_square_symmetric(m, "sym_inv_sqrt");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success) {
        throw FactorizationError("sym_inv_sqrt: eigendecomposition failed");
    }
    const Vector& vals = eig.eigenvalues();
    const double cutoff = rank_tol * std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
    Vector inv_sqrt(vals.size());
    bool dropped = false;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals[i] > cutoff) {
            inv_sqrt[i] = 1.0 / std::sqrt(vals[i]);
        } else {
            inv_sqrt[i] = 0.0;
            dropped = true;
        }
    }
    if (degenerate) *degenerate = dropped;
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace mibench
