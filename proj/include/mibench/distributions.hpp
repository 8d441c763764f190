#pragma once

// Base joint distributions with exactly known mutual information (in nats):
// multivariate normal (including the latent-factor covariance family),
// multivariate Student, and the uniform additive-noise pair.  Ground-truth
// MI is computed once at construction and stored; transformed distributions
// inherit it bit-exactly.

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>

#include "mibench/linalg.hpp"
#include "mibench/rng.hpp"
#include "mibench/special.hpp"

namespace mibench {

class JointDistribution {
public:
    virtual ~JointDistribution() = default;
    virtual int dim_x() const = 0;
    virtual int dim_y() const = 0;
    virtual double mi_true() const = 0;
    // Draws n i.i.d. rows laid out as (X1..Xm, Y1..Yn).
    virtual RowMatrix sample(RngStream& rng, int n) const = 0;
    virtual bool has_pmi() const { return false; }
    virtual double pmi(const Vector& x, const Vector& y) const {
        (void)x;
        (void)y;
        throw std::logic_error("pmi: no tractable density for this distribution");
    }
};

// ---------------------------------------------------------------------------
// Covariance constructions

struct LatentCovarianceParams {
    int m = 1;
    int n = 1;
    int k = 0;  // number of strongly interacting pairs, k <= min(m, n)
    double alpha = 0.0;
    double beta_x = 0.0;
    double beta_y = 0.0;
    double lambda = 0.0;
    double eps_x = 1.0;
    double eps_y = 1.0;
    double eta_x = 0.0;
    double eta_y = 0.0;
};

// Closed-form covariance of the latent-factor family.  Entries:
//   Cov(X_i, X_j) = a^2 + bx^2 + 1[i=j] (ex^2 + l^2 1[i<=K] + etax^2 1[i>K])
//   Cov(Y_i, Y_j) = a^2 + by^2 + 1[i=j] (ey^2 + l^2 1[i<=K] + etay^2 1[i>K])
//   Cov(X_i, Y_j) = a^2 + l^2 1[i=j] 1[i<=K]
inline Matrix covariance_from_latents(const LatentCovarianceParams& p) {
    if (p.m < 1 || p.n < 1) {
        throw std::invalid_argument("covariance_from_latents: dims must be >= 1");
    }
    if (p.k < 0 || p.k > std::min(p.m, p.n)) {
        throw std::invalid_argument("covariance_from_latents: requires 0 <= K <= min(m, n)");
    }
    for (double v : {p.alpha, p.beta_x, p.beta_y, p.lambda, p.eps_x, p.eps_y, p.eta_x, p.eta_y}) {
        if (v < 0.0 || !std::isfinite(v)) {
            throw std::invalid_argument("covariance_from_latents: parameters must be nonnegative");
        }
    }
    const double a2 = p.alpha * p.alpha;
    const double bx2 = p.beta_x * p.beta_x;
    const double by2 = p.beta_y * p.beta_y;
    const double l2 = p.lambda * p.lambda;
    const double ex2 = p.eps_x * p.eps_x;
    const double ey2 = p.eps_y * p.eps_y;
    const double etax2 = p.eta_x * p.eta_x;
    const double etay2 = p.eta_y * p.eta_y;

    const int d = p.m + p.n;
    Matrix cov(d, d);
    for (int i = 0; i < p.m; ++i) {
        for (int j = 0; j < p.m; ++j) {
            double v = a2 + bx2;
            if (i == j) v += ex2 + (i < p.k ? l2 : etax2);
            cov(i, j) = v;
        }
    }
    for (int i = 0; i < p.n; ++i) {
        for (int j = 0; j < p.n; ++j) {
            double v = a2 + by2;
            if (i == j) v += ey2 + (i < p.k ? l2 : etay2);
            cov(p.m + i, p.m + j) = v;
        }
    }
    for (int i = 0; i < p.m; ++i) {
        for (int j = 0; j < p.n; ++j) {
            const double v = a2 + ((i == j && i < p.k) ? l2 : 0.0);
            cov(i, p.m + j) = v;
            cov(p.m + j, i) = v;
        }
    }
    cholesky_lower(cov);  // SPD check; throws FactorizationError otherwise
    return cov;
}

// Unit-diagonal matrix with every off-diagonal correlation equal to rho.
inline Matrix dense_correlation(int dim, double rho) {
    Matrix c = Matrix::Constant(dim, dim, rho);
    c.diagonal().setOnes();
    return c;
}

// Identity plus Cor(X_i, Y_i) = rho for i < pairs; all other cross terms 0.
inline Matrix pair_correlation(int m, int n, double rho, int pairs) {
    if (pairs > std::min(m, n)) {
        throw std::invalid_argument("pair_correlation: pairs must be <= min(m, n)");
    }
    Matrix c = Matrix::Identity(m + n, m + n);
    for (int i = 0; i < pairs; ++i) {
        c(i, m + i) = rho;
        c(m + i, i) = rho;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Gaussian mutual information, two algebraic routes

inline double gaussian_mi(const Matrix& cov, int m, int n) {
    if (cov.rows() != m + n) {
        throw std::invalid_argument("gaussian_mi: dims do not match covariance");
    }
    const double ld_x = log_det_spd(cov.topLeftCorner(m, m));
    const double ld_y = log_det_spd(cov.bottomRightCorner(n, n));
    const double ld = log_det_spd(cov);
    return 0.5 * (ld_x + ld_y - ld);
}

// Same quantity through canonical correlations of the population covariance.
inline double gaussian_mi_cca(const Matrix& cov, int m, int n) {
    if (cov.rows() != m + n) {
        throw std::invalid_argument("gaussian_mi_cca: dims do not match covariance");
    }
    const Matrix wx = sym_inv_sqrt(cov.topLeftCorner(m, m), 1e-13);
    const Matrix wy = sym_inv_sqrt(cov.bottomRightCorner(n, n), 1e-13);
    const Vector rho = singular_values(wx * cov.topRightCorner(m, n) * wy);
    double mi = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
        const double r = std::min(rho[i], 1.0 - 1e-15);
        mi -= 0.5 * std::log1p(-r * r);
    }
    return mi;
}

// ---------------------------------------------------------------------------
// Student correction term

// c(nu, m, n) = f(nu) + f(nu+m+n) - f(nu+m) - f(nu+n),
// f(x) = ln Gamma(x/2) - (x/2) digamma(x/2).  Always positive.
inline double student_correction(int nu, int m, int n) {
    if (nu < 1 || m < 1 || n < 1) {
        throw std::invalid_argument("student_correction: requires nu, m, n >= 1");
    }
    auto f = [](double x) { return ln_gamma(0.5 * x) - 0.5 * x * digamma(0.5 * x); };
    return f(nu) + f(nu + m + n) - f(nu + m) - f(nu + n);
}

// ---------------------------------------------------------------------------
// Joint laws

namespace detail {

struct GaussianDensity {
    Eigen::LLT<Matrix> llt;
    double log_det = 0.0;

    explicit GaussianDensity(const Matrix& cov) : llt(cov) {
        if (llt.info() != Eigen::Success) {
            throw FactorizationError("GaussianDensity: covariance not SPD");
        }
        log_det = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    }

    double quad_form(const Vector& v) const { return v.dot(llt.solve(v)); }
};

}  // namespace detail

class GaussianJoint : public JointDistribution {
public:
    GaussianJoint(Matrix covariance, int m, int n)
        : cov_(std::move(covariance)),
          m_(m),
          n_(n),
          joint_(cov_),
          marg_x_(cov_.topLeftCorner(m, m)),
          marg_y_(cov_.bottomRightCorner(n, n)) {
        require_square_symmetric(cov_, "GaussianJoint");
        if (cov_.rows() != m + n) {
            throw std::invalid_argument("GaussianJoint: dims do not match covariance");
        }
        chol_ = cholesky_lower(cov_);
        mi_ = gaussian_mi(cov_, m, n);
    }

    int dim_x() const override { return m_; }
    int dim_y() const override { return n_; }
    double mi_true() const override { return mi_; }
    const Matrix& covariance() const { return cov_; }

    RowMatrix sample(RngStream& rng, int n) const override {
        const int d = m_ + n_;
        RowMatrix out(n, d);
        Vector g(d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) g[j] = rng.standard_normal();
            out.row(i) = (chol_ * g).transpose();
        }
        return out;
    }

    bool has_pmi() const override { return true; }

    double pmi(const Vector& x, const Vector& y) const override {
        Vector z(m_ + n_);
        z << x, y;
        const double quad = joint_.quad_form(z) - marg_x_.quad_form(x) - marg_y_.quad_form(y);
        const double log_dets = joint_.log_det - marg_x_.log_det - marg_y_.log_det;
        return -0.5 * (log_dets + quad);
    }

private:
    Matrix cov_;
    int m_, n_;
    detail::GaussianDensity joint_, marg_x_, marg_y_;
    Matrix chol_;
    double mi_ = 0.0;
};

class StudentJoint : public JointDistribution {
public:
    StudentJoint(Matrix dispersion, int m, int n, int nu)
        : disp_(std::move(dispersion)),
          m_(m),
          n_(n),
          nu_(nu),
          joint_(disp_),
          marg_x_(disp_.topLeftCorner(m, m)),
          marg_y_(disp_.bottomRightCorner(n, n)) {
        require_square_symmetric(disp_, "StudentJoint");
        if (disp_.rows() != m + n) {
            throw std::invalid_argument("StudentJoint: dims do not match dispersion");
        }
        if (nu < 1) throw std::invalid_argument("StudentJoint: requires nu >= 1");
        chol_ = cholesky_lower(disp_);
        mi_ = gaussian_mi(disp_, m, n) + student_correction(nu, m, n);
    }

    int dim_x() const override { return m_; }
    int dim_y() const override { return n_; }
    int dof() const { return nu_; }
    double mi_true() const override { return mi_; }
    const Matrix& dispersion() const { return disp_; }

    RowMatrix sample(RngStream& rng, int n) const override {
        const int d = m_ + n_;
        RowMatrix out(n, d);
        Vector g(d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) g[j] = rng.standard_normal();
            const double u = rng.chi_square(nu_);
            out.row(i) = (std::sqrt(nu_ / u) * (chol_ * g)).transpose();
        }
        return out;
    }

    bool has_pmi() const override { return true; }

    double pmi(const Vector& x, const Vector& y) const override {
        Vector z(m_ + n_);
        z << x, y;
        return log_density(joint_, m_ + n_, z) - log_density(marg_x_, m_, x) -
               log_density(marg_y_, n_, y);
    }

private:
    double log_density(const detail::GaussianDensity& dens, int dim, const Vector& v) const {
        const double nu = nu_;
        return ln_gamma(0.5 * (nu + dim)) - ln_gamma(0.5 * nu) -
               0.5 * dim * std::log(nu * M_PI) - 0.5 * dens.log_det -
               0.5 * (nu + dim) * std::log1p(dens.quad_form(v) / nu);
    }

    Matrix disp_;
    int m_, n_, nu_;
    detail::GaussianDensity joint_, marg_x_, marg_y_;
    Matrix chol_;
    double mi_ = 0.0;
};

// MI of (X, X + N) with X ~ Uniform(0,1), N ~ Uniform(-eps, eps).
inline double additive_noise_mi(double epsilon) {
    if (!(epsilon > 0.0)) {
        throw std::domain_error("additive_noise_mi: requires epsilon > 0");
    }
    return epsilon <= 0.5 ? epsilon - std::log(2.0 * epsilon) : 1.0 / (4.0 * epsilon);
}

class AdditiveNoiseJoint : public JointDistribution {
public:
    explicit AdditiveNoiseJoint(double epsilon)
        : epsilon_(epsilon), mi_(additive_noise_mi(epsilon)) {}

    int dim_x() const override { return 1; }
    int dim_y() const override { return 1; }
    double epsilon() const { return epsilon_; }
    double mi_true() const override { return mi_; }

    RowMatrix sample(RngStream& rng, int n) const override {
        RowMatrix out(n, 2);
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform01();
            out(i, 0) = x;
            out(i, 1) = x + epsilon_ * (2.0 * rng.uniform01() - 1.0);
        }
        return out;
    }

private:
    double epsilon_;
    double mi_;
};

// ---------------------------------------------------------------------------
// Parameter solving

// Bisection for the parameter of a strictly monotone MI family.  Returns a
// parameter whose MI is within 1e-9 nats of the target.
inline double solve_parameter_for_mi(const std::function<double(double)>& mi_of_param,
                                     double target, double lo, double hi,
                                     double tol_nats = 1e-9, int max_iter = 200) {
    double f_lo = mi_of_param(lo);
    double f_hi = mi_of_param(hi);
    const bool increasing = f_hi >= f_lo;
    auto within = [&](double f) { return std::abs(f - target) <= tol_nats; };
    if (within(f_lo)) return lo;
    if (within(f_hi)) return hi;
    const double f_min = std::min(f_lo, f_hi);
    const double f_max = std::max(f_lo, f_hi);
    if (target < f_min || target > f_max) {
        throw std::invalid_argument("solve_parameter_for_mi: target MI outside bracket range");
    }
    double a = lo, b = hi;
    for (int i = 0; i < max_iter; ++i) {
        const double mid = 0.5 * (a + b);
        const double f_mid = mi_of_param(mid);
        if (within(f_mid)) return mid;
        const bool go_right = increasing ? (f_mid < target) : (f_mid > target);
        if (go_right) {
            a = mid;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

// Correlation of a bivariate normal with the requested MI.  Closed-form
// inverse of mi = -log(1 - rho^2) / 2.
inline double bivariate_rho_for_mi(double mi) {
    if (mi < 0.0) throw std::invalid_argument("bivariate_rho_for_mi: mi must be >= 0");
    return std::sqrt(-std::expm1(-2.0 * mi));
}

}  // namespace mibench
