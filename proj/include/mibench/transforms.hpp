#pragma once

// Injective, MI-preserving maps applied per block (X or Y, never mixing the
// two): axis-wise scalar maps, the norm-preserving spiral, and the Swiss-roll
// embedding.  A TransformedDistribution copies its ground-truth MI bit-exactly
// from the base distribution.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "mibench/distributions.hpp"
#include "mibench/special.hpp"

namespace mibench {

using Json = nlohmann::json;

enum class InjectivityCertificate { strictly_monotone, constraint_verified };

// A scalar injective map applied elementwise to every coordinate of a block.
class AxisMap {
public:
    AxisMap(std::string name, Json params, InjectivityCertificate certificate,
            std::function<double(double)> forward)
        : name_(std::move(name)),
          params_(std::move(params)),
          certificate_(certificate),
          forward_(std::move(forward)) {}

    const std::string& name() const { return name_; }
    const Json& params() const { return params_; }
    InjectivityCertificate certificate() const { return certificate_; }
    double operator()(double x) const { return forward_(x); }

private:
    std::string name_;
    Json params_;
    InjectivityCertificate certificate_;
    std::function<double(double)> forward_;
};

inline AxisMap axis_map_normal_cdf() {
    return AxisMap("normal-cdf", Json::object(), InjectivityCertificate::strictly_monotone,
                   [](double x) { return normal_cdf(x); });
}

// x -> |x|^k sgn x; k = 3/2 is the half-cube map, k = 1 the identity
// (returned bit-exactly so sweep endpoints coincide with their base task).
inline AxisMap axis_map_power(double k) {
    if (!(k >= 1.0)) {
        throw std::invalid_argument("axis_map_power: requires k >= 1");
    }
    return AxisMap("power", Json{{"k", k}}, InjectivityCertificate::strictly_monotone,
                   [k](double x) {
                       if (k == 1.0) return x;
                       return std::pow(std::abs(x), k) * (x < 0.0 ? -1.0 : x > 0.0 ? 1.0 : 0.0);
                   });
}

inline AxisMap axis_map_half_cube() { return axis_map_power(1.5); }

inline AxisMap axis_map_asinh() {
    return AxisMap("asinh", Json::object(), InjectivityCertificate::strictly_monotone,
                   [](double x) { return std::asinh(x); });
}

// x -> x + sum_i a_i sin(w_i x + phi_i); injective iff sum |a_i w_i| < 1.
inline AxisMap axis_map_wiggly(std::vector<double> amplitudes,
                               std::vector<double> frequencies,
                               std::vector<double> phases) {
    if (amplitudes.size() != frequencies.size() || amplitudes.size() != phases.size()) {
        throw std::invalid_argument("axis_map_wiggly: parameter lists must have equal length");
    }
    double lipschitz = 0.0;
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        lipschitz += std::abs(amplitudes[i] * frequencies[i]);
    }
    if (!(lipschitz < 1.0)) {
        throw std::invalid_argument("axis_map_wiggly: requires sum |a_i w_i| < 1");
    }
    Json params{{"amplitudes", amplitudes}, {"frequencies", frequencies}, {"phases", phases}};
    return AxisMap("wiggly", std::move(params), InjectivityCertificate::constraint_verified,
                   [a = std::move(amplitudes), w = std::move(frequencies),
                    p = std::move(phases)](double x) {
                       double out = x;
                       for (std::size_t i = 0; i < a.size(); ++i) {
                           out += a[i] * std::sin(w[i] * x + p[i]);
                       }
                       return out;
                   });
}

// Quantile function of a Gaussian mixture, inverted numerically by bisection
// to |F(x) - p| < 1e-10.
inline AxisMap axis_map_gmm_quantile(std::vector<double> weights,
                                     std::vector<double> means,
                                     std::vector<double> sds) {
    if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size()) {
        throw std::invalid_argument("axis_map_gmm_quantile: parameter lists must have equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0)) {
            throw std::invalid_argument("axis_map_gmm_quantile: weights must be positive");
        }
        if (!(sds[i] > 0.0)) {
            throw std::invalid_argument("axis_map_gmm_quantile: sds must be positive");
        }
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("axis_map_gmm_quantile: weights must sum to 1");
    }
    Json params{{"weights", weights}, {"means", means}, {"sds", sds}};
    auto cdf = [w = weights, mu = means, sd = sds](double x) {
        double f = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) f += w[i] * normal_cdf((x - mu[i]) / sd[i]);
        return f;
    };
    const double mu_min = *std::min_element(means.begin(), means.end());
    const double mu_max = *std::max_element(means.begin(), means.end());
    const double sd_max = *std::max_element(sds.begin(), sds.end());
    auto quantile = [cdf, mu_min, mu_max, sd_max](double p) {
        if (!(p > 0.0 && p < 1.0)) {
            throw std::domain_error("gmm quantile: requires p in (0, 1)");
        }
        double lo = mu_min - 10.0 * sd_max;
        double hi = mu_max + 10.0 * sd_max;
        while (cdf(lo) > p) lo -= 10.0 * sd_max;
        while (cdf(hi) < p) hi += 10.0 * sd_max;
        double x = 0.5 * (lo + hi);
        for (int iter = 0; iter < 200; ++iter) {
            x = 0.5 * (lo + hi);
            const double f = cdf(x);
            if (std::abs(f - p) < 1e-10) break;
            if (f < p) {
                lo = x;
            } else {
                hi = x;
            }
        }
        return x;
    };
    return AxisMap("gmm-quantile", std::move(params),
                   InjectivityCertificate::strictly_monotone, quantile);
}

// ---------------------------------------------------------------------------
// Block-level maps

class BlockMap {
public:
    virtual ~BlockMap() = default;
    virtual std::string name() const = 0;
    virtual Json params() const = 0;
    virtual int out_dim(int in_dim) const = 0;
    virtual Vector apply(const Vector& in) const = 0;
};

class AxiswiseMap : public BlockMap {
public:
    explicit AxiswiseMap(AxisMap map) : map_(std::move(map)) {}

    std::string name() const override { return "axiswise:" + map_.name(); }
    Json params() const override { return map_.params(); }
    int out_dim(int in_dim) const override { return in_dim; }
    Vector apply(const Vector& in) const override {
        Vector out(in.size());
        for (Eigen::Index i = 0; i < in.size(); ++i) out[i] = map_(in[i]);
        return out;
    }
    const AxisMap& axis_map() const { return map_; }

private:
    AxisMap map_;
};

// x -> exp(v ||x||^2 A) x with A exactly skew-symmetric.  Norm-preserving,
// and measure-preserving for isotropic laws.  Single-plane generators use
// the closed-form rotation; general ones fall back to the Pade/scaling
// matrix exponential.
class SpiralMap : public BlockMap {
public:
    SpiralMap(Matrix generator, double speed)
        : generator_(std::move(generator)), speed_(speed) {
        if (generator_.rows() != generator_.cols()) {
            throw std::invalid_argument("SpiralMap: generator must be square");
        }
        if ((generator_ + generator_.transpose()).cwiseAbs().maxCoeff() != 0.0) {
            throw std::invalid_argument("SpiralMap: generator must be exactly skew-symmetric");
        }
        detect_single_plane();
    }

    // The benchmark's generator: +1 at (plane_i, plane_j), -1 transposed.
    static SpiralMap single_plane(int dim, int plane_i, int plane_j, double speed) {
        if (plane_i < 0 || plane_j < 0 || plane_i >= dim || plane_j >= dim || plane_i == plane_j) {
            throw std::invalid_argument("SpiralMap: invalid plane");
        }
        Matrix a = Matrix::Zero(dim, dim);
        a(plane_i, plane_j) = 1.0;
        a(plane_j, plane_i) = -1.0;
        return SpiralMap(std::move(a), speed);
    }

    std::string name() const override { return "spiral"; }
    Json params() const override {
        Json j{{"speed", speed_}, {"dim", generator_.rows()}};
        if (single_plane_) {
            j["plane"] = {plane_i_, plane_j_, plane_sign_};
        } else {
            std::vector<std::vector<double>> rows(generator_.rows());
            for (Eigen::Index i = 0; i < generator_.rows(); ++i) {
                rows[i].assign(generator_.row(i).begin(), generator_.row(i).end());
            }
            j["generator"] = rows;
        }
        return j;
    }
    int out_dim(int in_dim) const override {
        if (in_dim != generator_.rows()) {
            throw std::invalid_argument("SpiralMap: dimension mismatch");
        }
        return in_dim;
    }
    double speed() const { return speed_; }
    const Matrix& generator() const { return generator_; }

    Vector apply(const Vector& in) const override {
        if (in.size() != generator_.rows()) {
            throw std::invalid_argument("SpiralMap: dimension mismatch");
        }
        const double angle_scale = speed_ * in.squaredNorm();
        if (angle_scale == 0.0) return in;
        if (single_plane_) {
            // exp(theta A) restricted to the plane is a Givens rotation.
            const double theta = angle_scale * plane_sign_;
            Vector out = in;
            const double c = std::cos(theta);
            const double s = std::sin(theta);
            const double xi = in[plane_i_];
            const double xj = in[plane_j_];
            out[plane_i_] = c * xi + s * xj;
            out[plane_j_] = -s * xi + c * xj;
            return out;
        }
        return (angle_scale * generator_).exp() * in;
    }

private:
    void detect_single_plane() {
        single_plane_ = false;
        int found_i = -1, found_j = -1;
        double sign = 0.0;
        int nonzero_pairs = 0;
        for (Eigen::Index i = 0; i < generator_.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < generator_.cols(); ++j) {
                if (generator_(i, j) != 0.0) {
                    ++nonzero_pairs;
                    found_i = static_cast<int>(i);
                    found_j = static_cast<int>(j);
                    sign = generator_(i, j);
                }
            }
        }
        if (nonzero_pairs == 1) {
            single_plane_ = true;
            plane_i_ = found_i;
            plane_j_ = found_j;
            plane_sign_ = sign;
        }
    }

    Matrix generator_;
    double speed_;
    bool single_plane_ = false;
    int plane_i_ = 0, plane_j_ = 0;
    double plane_sign_ = 1.0;
};

// (0,1) -> R^2 along the Swiss-roll curve: e(x) = (t cos t, t sin t)/21 with
// t = 3pi/2 (1 + 2x).
inline std::pair<double, double> swiss_roll_curve(double x) {
    if (!(x > 0.0 && x < 1.0)) {
        throw std::domain_error("swiss_roll_curve: requires x in (0, 1)");
    }
    const double t = 1.5 * M_PI * (1.0 + 2.0 * x);
    return {t * std::cos(t) / 21.0, t * std::sin(t) / 21.0};
}

// Full embedding (x, y) -> (e(x), y) used by the 2x1 Swiss-roll task.
inline Eigen::Vector3d swiss_roll_embed(double x, double y) {
    const auto [e1, e2] = swiss_roll_curve(x);
    return {e1, e2, y};
}

class SwissRollMap : public BlockMap {
public:
    std::string name() const override { return "swiss-roll"; }
    Json params() const override { return Json::object(); }
    int out_dim(int in_dim) const override {
        if (in_dim != 1) {
            throw std::invalid_argument("SwissRollMap: embeds a 1-d block only");
        }
        return 2;
    }
    Vector apply(const Vector& in) const override {
        if (in.size() != 1) {
            throw std::invalid_argument("SwissRollMap: dimension mismatch");
        }
        const auto [e1, e2] = swiss_roll_curve(in[0]);
        Vector out(2);
        out << e1, e2;
        return out;
    }
};

using BlockMapPtr = std::shared_ptr<const BlockMap>;

// ---------------------------------------------------------------------------
// Transformed distribution

// Applies map chains to the X and Y blocks of a base distribution.  Chains
// are listed innermost-first (composition order outermost-last); by
// Theorem-1-style invariance the ground-truth MI is the base's, copied
// bit-exactly.
class TransformedDistribution : public JointDistribution {
public:
    TransformedDistribution(std::shared_ptr<const JointDistribution> base,
                            std::vector<BlockMapPtr> x_maps,
                            std::vector<BlockMapPtr> y_maps)
        : base_(std::move(base)), x_maps_(std::move(x_maps)), y_maps_(std::move(y_maps)) {
        dim_x_ = chained_dim(base_->dim_x(), x_maps_, "X");
        dim_y_ = chained_dim(base_->dim_y(), y_maps_, "Y");
        mi_ = base_->mi_true();
    }

    int dim_x() const override { return dim_x_; }
    int dim_y() const override { return dim_y_; }
    double mi_true() const override { return mi_; }
    const JointDistribution& base() const { return *base_; }
    const std::vector<BlockMapPtr>& x_maps() const { return x_maps_; }
    const std::vector<BlockMapPtr>& y_maps() const { return y_maps_; }

    RowMatrix sample(RngStream& rng, int n) const override {
        const RowMatrix raw = base_->sample(rng, n);
        if (x_maps_.empty() && y_maps_.empty()) return raw;
        RowMatrix out(n, dim_x_ + dim_y_);
        for (int i = 0; i < n; ++i) {
            Vector x = raw.row(i).head(base_->dim_x());
            Vector y = raw.row(i).tail(base_->dim_y());
            for (const auto& map : x_maps_) x = map->apply(x);
            for (const auto& map : y_maps_) y = map->apply(y);
            out.row(i).head(dim_x_) = x.transpose();
            out.row(i).tail(dim_y_) = y.transpose();
        }
        return out;
    }

private:
    static int chained_dim(int dim, const std::vector<BlockMapPtr>& maps, const char* block) {
        for (const auto& map : maps) {
            if (!map) throw std::invalid_argument("TransformedDistribution: null map");
            dim = map->out_dim(dim);  // throws on mismatch
        }
        (void)block;
        return dim;
    }

    std::shared_ptr<const JointDistribution> base_;
    std::vector<BlockMapPtr> x_maps_, y_maps_;
    int dim_x_ = 0, dim_y_ = 0;
    double mi_ = 0.0;
};

inline std::shared_ptr<TransformedDistribution> make_task_transform(
    std::shared_ptr<const JointDistribution> base, std::vector<BlockMapPtr> x_maps,
    std::vector<BlockMapPtr> y_maps) {
    return std::make_shared<TransformedDistribution>(std::move(base), std::move(x_maps),
                                                     std::move(y_maps));
}

}  // namespace mibench
