#pragma once

// Variational MI estimators (DV, MINE, NWJ, InfoNCE) over a small
// fully-connected critic trained with minibatch Adam.  Training is
// single-threaded and bit-deterministic given (sample, config); the harness
// parallelizes across runs.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mibench/rng.hpp"
#include "mibench/sample.hpp"

namespace mibench {

enum class Bound { dv, mine, nwj, infonce };

inline const char* bound_name(Bound b) {
    switch (b) {
        case Bound::dv: return "dv";
        case Bound::mine: return "mine";
        case Bound::nwj: return "nwj";
        case Bound::infonce: return "infonce";
    }
    return "?";
}

inline Bound bound_from_name(const std::string& name) {
    if (name == "dv") return Bound::dv;
    if (name == "mine") return Bound::mine;
    if (name == "nwj") return Bound::nwj;
    if (name == "infonce") return Bound::infonce;
    throw std::invalid_argument("unknown bound: " + name);
}

// ---------------------------------------------------------------------------
// Critic network

// Hidden layer widths per architecture label.
inline std::vector<int> critic_hidden_layers(char arch) {
    switch (arch) {
        case 'S': return {10, 5};
        case 'M': return {16, 8};
        case 'L': return {24, 12};
        case 'D': return {8, 8, 8};
    }
    throw std::invalid_argument("critic architecture must be one of S, M, L, D");
}

// Rectifier MLP with a linear scalar output.  Weight matrices are
// (out x in); layer l maps activation a_l to z_l = a_l W_l^T + b_l.
struct CriticParams {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
    std::size_t layer_count() const { return weights.size(); }

    static CriticParams make(int input_dim, const std::vector<int>& hidden, RngStream& rng) {
        CriticParams p;
        std::vector<int> sizes;
        sizes.push_back(input_dim);
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(1);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const int fan_in = sizes[l];
            const int fan_out = sizes[l + 1];
            const double scale = 1.0 / std::sqrt(double(fan_in));
            Matrix w(fan_out, fan_in);
            for (int r = 0; r < fan_out; ++r)
                for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-scale, scale);
            p.weights.push_back(std::move(w));
            p.biases.push_back(Vector::Zero(fan_out));
        }
        return p;
    }

    static CriticParams zeros(int input_dim, const std::vector<int>& hidden) {
        CriticParams p;
        std::vector<int> sizes;
        sizes.push_back(input_dim);
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        sizes.push_back(1);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            p.weights.push_back(Matrix::Zero(sizes[l + 1], sizes[l]));
            p.biases.push_back(Vector::Zero(sizes[l + 1]));
        }
        return p;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
        }
        return n;
    }

    double get_flat(std::size_t i) const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const auto wn = static_cast<std::size_t>(weights[l].size());
            if (i < wn) return weights[l](i % weights[l].rows(), i / weights[l].rows());
            i -= wn;
            const auto bn = static_cast<std::size_t>(biases[l].size());
            if (i < bn) return biases[l](i);
            i -= bn;
        }
        throw std::out_of_range("CriticParams::get_flat");
    }

    void add_flat(std::size_t i, double delta) {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            const auto wn = static_cast<std::size_t>(weights[l].size());
            if (i < wn) {
                weights[l](i % weights[l].rows(), i / weights[l].rows()) += delta;
                return;
            }
            i -= wn;
            const auto bn = static_cast<std::size_t>(biases[l].size());
            if (i < bn) {
                biases[l](i) += delta;
                return;
            }
            i -= bn;
        }
        throw std::out_of_range("CriticParams::add_flat");
    }
};

struct CriticGradients {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;

    static CriticGradients zeros_like(const CriticParams& p) {
        CriticGradients g;
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            g.d_weights.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
            g.d_biases.push_back(Vector::Zero(p.biases[l].size()));
        }
        return g;
    }

    double get_flat(std::size_t i) const {
        for (std::size_t l = 0; l < d_weights.size(); ++l) {
            const auto wn = static_cast<std::size_t>(d_weights[l].size());
            if (i < wn) return d_weights[l](i % d_weights[l].rows(), i / d_weights[l].rows());
            i -= wn;
            const auto bn = static_cast<std::size_t>(d_biases[l].size());
            if (i < bn) return d_biases[l](i);
            i -= bn;
        }
        throw std::out_of_range("CriticGradients::get_flat");
    }
};

namespace detail {

struct ForwardCache {
    std::vector<RowMatrix> activations;  // a_0 .. a_L (a_L holds z of the last layer)
    std::vector<RowMatrix> pre;          // z_0 .. z_{L-1}
};

inline Vector critic_forward_impl(const CriticParams& p, const RowMatrix& batch,
                                  ForwardCache* cache) {
    if (batch.cols() != p.input_dim()) {
        throw std::invalid_argument("critic_forward: input width mismatch");
    }
    const std::size_t layers = p.layer_count();
    RowMatrix a = batch;
    if (cache) {
        cache->activations.assign(1, a);
        cache->pre.clear();
    }
    for (std::size_t l = 0; l < layers; ++l) {
        RowMatrix z = a * p.weights[l].transpose();
        z.rowwise() += p.biases[l].transpose();
        if (cache) cache->pre.push_back(z);
        if (l + 1 < layers) {
            a = z.cwiseMax(0.0);
        } else {
            a = std::move(z);
        }
        if (cache) cache->activations.push_back(a);
    }
    return a.col(0);
}

// Accumulates d(objective)/d(params) given d(objective)/d(scores).
inline void critic_backward(const CriticParams& p, const ForwardCache& cache,
                            const Vector& d_scores, CriticGradients& grads) {
    const std::size_t layers = p.layer_count();
    RowMatrix dz = d_scores;  // B x 1
    for (std::size_t l = layers; l-- > 0;) {
        grads.d_weights[l].noalias() += dz.transpose() * cache.activations[l];
        grads.d_biases[l].noalias() += dz.colwise().sum().transpose();
        if (l > 0) {
            RowMatrix da = dz * p.weights[l];
            dz = (cache.pre[l - 1].array() > 0.0).cast<double>() * da.array();
        }
    }
}

inline double log_mean_exp(const Vector& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().mean());
}

// d(InfoNCE)/dS for a B x B score matrix S(i, j) = f(x_i, y_j).
inline Matrix infonce_score_gradient(const Matrix& scores) {
    const Eigen::Index b = scores.rows();
    Matrix grad(b, b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const double m = scores.row(i).maxCoeff();
        Vector p = (scores.row(i).array() - m).exp();
        p /= p.sum();
        grad.row(i) = -p.transpose() / double(b);
        grad(i, i) += 1.0 / double(b);
    }
    return grad;
}

inline double infonce_value(const Matrix& scores) {
    const Eigen::Index b = scores.rows();
    double total = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lme = m + std::log((scores.row(i).array() - m).exp().mean());
        total += scores(i, i) - lme;
    }
    return total / double(b);
}

}  // namespace detail

inline Vector critic_forward(const CriticParams& p, const RowMatrix& batch) {
    return detail::critic_forward_impl(p, batch, nullptr);
}

// ---------------------------------------------------------------------------
// Bound values

// DV / MINE: mean(joint) - log mean exp(product); NWJ: mean(joint)
// - e^-1 mean exp(product).  The log-mean-exp route keeps values finite for
// scores up to +-500.
inline double bound_value(Bound bound, const Vector& joint_scores, const Vector& product_scores) {
    if (joint_scores.size() == 0 || product_scores.size() == 0) {
        throw std::invalid_argument("bound_value: empty score vectors");
    }
    const double joint_mean = joint_scores.mean();
    switch (bound) {
        case Bound::dv:
        case Bound::mine:
            return joint_mean - detail::log_mean_exp(product_scores);
        case Bound::nwj:
            return joint_mean - std::exp(detail::log_mean_exp(product_scores) - 1.0);
        case Bound::infonce:
            throw std::invalid_argument("bound_value: InfoNCE needs the full score matrix");
    }
    return 0.0;
}

inline double infonce_bound(const Matrix& score_matrix) {
    if (score_matrix.rows() != score_matrix.cols() || score_matrix.rows() == 0) {
        throw std::invalid_argument("infonce_bound: needs a square score matrix");
    }
    return detail::infonce_value(score_matrix);
}

// ---------------------------------------------------------------------------
// Training configuration and history

struct TrainConfig {
    Bound bound = Bound::infonce;
    char arch = 'M';
    int batch_size = 256;
    double initial_lr = 0.1;
    int max_steps = 10000;
    int eval_every = 250;
    double split_fraction = 0.5;
    std::uint64_t seed = 0;
    double ema_decay = 0.99;  // MINE only
    int patience_evals = 4;   // early stopping: evaluations without improvement
    bool cosine_decay = false;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const {
        if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size >= 2");
        if (!(initial_lr > 0.0)) throw std::invalid_argument("TrainConfig: lr > 0");
        if (max_steps < 1 || eval_every < 1) {
            throw std::invalid_argument("TrainConfig: steps and cadence must be >= 1");
        }
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw std::invalid_argument("TrainConfig: split_fraction in (0, 1)");
        }
        if (!(ema_decay > 0.0 && ema_decay < 1.0)) {
            throw std::invalid_argument("TrainConfig: ema_decay in (0, 1)");
        }
    }
};

struct TrainingHistory {
    struct Record {
        int step;
        double train_bound;
        double test_bound;
    };
    std::vector<Record> records;
    std::vector<std::string> final_flags;

    nlohmann::json to_json() const {
        nlohmann::json recs = nlohmann::json::array();
        for (const auto& r : records) {
            recs.push_back({{"step", r.step}, {"train", r.train_bound}, {"test", r.test_bound}});
        }
        return {{"records", recs}, {"flags", final_flags}};
    }
};

// Heuristic run diagnostics: a still-rising test bound at the stop marks
// non-convergence; a large train/test gap marks overfitting.
inline std::vector<std::string> diagnose(const TrainingHistory& h) {
    std::vector<std::string> out;
    if (h.records.size() < 2) {
        throw std::invalid_argument("diagnose: needs at least 2 evaluation records");
    }
    double max_train = -std::numeric_limits<double>::infinity();
    double max_test = -std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < h.records.size(); ++i) {
        max_train = std::max(max_train, h.records[i].train_bound);
        if (h.records[i].test_bound > max_test) {
            max_test = h.records[i].test_bound;
            best_index = i;
        }
    }
    if (max_train - max_test > std::max(0.2 * max_test, 0.1)) {
        out.push_back(flags::overfitting);
    }

    // Non-convergence targets runs that ended while the test bound was still
    // rising; a run that stopped on a stale plateau converged by definition.
    if (h.records.size() - 1 - best_index >= 4) return out;

    // Final-quarter slope of the test bound, in nats per 1000 steps.
    const int last_step = h.records.back().step;
    std::vector<TrainingHistory::Record> tail;
    for (const auto& r : h.records) {
        if (r.step >= 0.75 * last_step) tail.push_back(r);
    }
    if (tail.size() < 2) {
        tail.assign(h.records.end() - 2, h.records.end());
    }
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& r : tail) {
        mean_x += r.step;
        mean_y += r.test_bound;
    }
    mean_x /= tail.size();
    mean_y /= tail.size();
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : tail) {
        sxy += (r.step - mean_x) * (r.test_bound - mean_y);
        sxx += (r.step - mean_x) * (r.step - mean_x);
    }
    if (sxx > 0.0) {
        const double slope_per_1000 = sxy / sxx * 1000.0;
        if (slope_per_1000 > 0.05 * std::max(max_test, 0.1)) {
            out.push_back(flags::non_convergence);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training loop

namespace detail {

class AdamState {
public:
    AdamState(const CriticParams& p, const TrainConfig& cfg) : cfg_(cfg) {
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            m_w_.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
            v_w_.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
            m_b_.push_back(Vector::Zero(p.biases[l].size()));
            v_b_.push_back(Vector::Zero(p.biases[l].size()));
        }
    }

    // Ascent step along the bound gradient.
    void update(CriticParams& p, const CriticGradients& g, double lr) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
        const double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            m_w_[l] = cfg_.adam_beta1 * m_w_[l] + (1.0 - cfg_.adam_beta1) * g.d_weights[l];
            v_w_[l] = cfg_.adam_beta2 * v_w_[l] +
                      (1.0 - cfg_.adam_beta2) * g.d_weights[l].cwiseProduct(g.d_weights[l]);
            p.weights[l].array() += lr * (m_w_[l].array() / c1) /
                                    ((v_w_[l].array() / c2).sqrt() + cfg_.adam_epsilon);
            m_b_[l] = cfg_.adam_beta1 * m_b_[l] + (1.0 - cfg_.adam_beta1) * g.d_biases[l];
            v_b_[l] = cfg_.adam_beta2 * v_b_[l] +
                      (1.0 - cfg_.adam_beta2) * g.d_biases[l].cwiseProduct(g.d_biases[l]);
            p.biases[l].array() += lr * (m_b_[l].array() / c1) /
                                   ((v_b_[l].array() / c2).sqrt() + cfg_.adam_epsilon);
        }
    }

private:
    TrainConfig cfg_;
    std::vector<Matrix> m_w_, v_w_;
    std::vector<Vector> m_b_, v_b_;
    long t_ = 0;
};

}  // namespace detail

// Bound value and critic-parameter gradient for one batch.  `joint_inputs`
// holds the paired rows (x_i, y_i); `product_inputs` holds the negative
// pairs (all B^2 pairs for InfoNCE, a derangement otherwise).  For MINE the
// denominator uses exp(log_ema) and the returned value is the DV value.
struct BoundGradient {
    double value = 0.0;
    double log_mean_exp_product = 0.0;
    CriticGradients grads;
};

inline BoundGradient bound_with_gradient(const CriticParams& p, Bound bound,
                                         const RowMatrix& joint_inputs,
                                         const RowMatrix& product_inputs,
                                         double log_ema = 0.0) {
    const auto b = joint_inputs.rows();
    BoundGradient out;
    out.grads = CriticGradients::zeros_like(p);

    detail::ForwardCache joint_cache, product_cache;
    const Vector joint_scores = detail::critic_forward_impl(p, joint_inputs, &joint_cache);

    if (bound == Bound::infonce) {
        if (product_inputs.rows() != b * b) {
            throw std::invalid_argument("bound_with_gradient: InfoNCE needs all B^2 pairs");
        }
        const Vector pair_scores = detail::critic_forward_impl(p, product_inputs, &product_cache);
        Matrix score_matrix(b, b);
        for (Eigen::Index i = 0; i < b; ++i) {
            score_matrix.row(i) = pair_scores.segment(i * b, b).transpose();
        }
        out.value = detail::infonce_value(score_matrix);
        const Matrix d_scores = detail::infonce_score_gradient(score_matrix);
        Vector d_flat(b * b);
        for (Eigen::Index i = 0; i < b; ++i) {
            d_flat.segment(i * b, b) = d_scores.row(i).transpose();
        }
        detail::critic_backward(p, product_cache, d_flat, out.grads);
        return out;
    }

    const Vector product_scores = detail::critic_forward_impl(p, product_inputs, &product_cache);
    out.log_mean_exp_product = detail::log_mean_exp(product_scores);
    out.value = bound_value(bound, joint_scores, product_scores);

    const Vector d_joint = Vector::Constant(b, 1.0 / double(b));
    Vector d_product(product_scores.size());
    switch (bound) {
        case Bound::dv: {
            const double lme = out.log_mean_exp_product;
            d_product = -((product_scores.array() - lme).exp() / double(product_scores.size()))
                             .matrix();
            break;
        }
        case Bound::mine: {
            d_product = -((product_scores.array() - log_ema).exp() / double(product_scores.size()))
                             .matrix();
            break;
        }
        case Bound::nwj: {
            d_product =
                -((product_scores.array() - 1.0).exp() / double(product_scores.size())).matrix();
            break;
        }
        case Bound::infonce:
            break;  // handled above
    }
    detail::critic_backward(p, joint_cache, d_joint, out.grads);
    detail::critic_backward(p, product_cache, d_product, out.grads);
    return out;
}

namespace detail {

inline RowMatrix gather_rows(const RowMatrix& source, const std::vector<int>& rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = source.row(rows[i]);
    return out;
}

inline RowMatrix paired_inputs(const RowMatrix& values, int dim_x,
                               const std::vector<int>& x_rows, const std::vector<int>& y_rows) {
    const auto dim_y = values.cols() - dim_x;
    RowMatrix out(static_cast<Eigen::Index>(x_rows.size()), values.cols());
    for (std::size_t i = 0; i < x_rows.size(); ++i) {
        out.row(i).head(dim_x) = values.row(x_rows[i]).head(dim_x);
        out.row(i).tail(dim_y) = values.row(y_rows[i]).tail(dim_y);
    }
    return out;
}

inline RowMatrix all_pairs_inputs(const RowMatrix& values, int dim_x,
                                  const std::vector<int>& rows) {
    const auto b = static_cast<Eigen::Index>(rows.size());
    const auto dim_y = values.cols() - dim_x;
    RowMatrix out(b * b, values.cols());
    for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index j = 0; j < b; ++j) {
            out.row(i * b + j).head(dim_x) = values.row(rows[i]).head(dim_x);
            out.row(i * b + j).tail(dim_y) = values.row(rows[j]).tail(dim_y);
        }
    }
    return out;
}

// Bound evaluated over full batches of a split, averaged.
inline double evaluate_split(const CriticParams& p, Bound bound, const RowMatrix& values,
                             int dim_x, const std::vector<int>& split, int batch_size,
                             RngStream& eval_rng) {
    const int blocks = static_cast<int>(split.size()) / batch_size;
    double total = 0.0;
    for (int blk = 0; blk < blocks; ++blk) {
        std::vector<int> rows(split.begin() + blk * batch_size,
                              split.begin() + (blk + 1) * batch_size);
        const RowMatrix joint = gather_rows(values, rows);
        if (bound == Bound::infonce) {
            const Vector scores = critic_forward_impl(p, all_pairs_inputs(values, dim_x, rows), nullptr);
            Matrix score_matrix(batch_size, batch_size);
            for (int i = 0; i < batch_size; ++i) {
                score_matrix.row(i) = scores.segment(i * batch_size, batch_size).transpose();
            }
            total += infonce_value(score_matrix);
        } else {
            const auto sigma = eval_rng.derangement(rows.size());
            std::vector<int> y_rows(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) y_rows[i] = rows[sigma[i]];
            const Vector joint_scores = critic_forward_impl(p, joint, nullptr);
            const Vector product_scores =
                critic_forward_impl(p, paired_inputs(values, dim_x, rows, y_rows), nullptr);
            total += bound_value(bound, joint_scores, product_scores);
        }
    }
    return total / blocks;
}

}  // namespace detail

struct TrainOutcome {
    EstimateResult result;
    TrainingHistory history;
    CriticParams critic;  // checkpoint at the best test evaluation
};

// Full training protocol: disjoint 50/50 split, Adam on train minibatches,
// periodic evaluation on both splits, early stopping on the test bound, and
// the maximum test-split bound as the returned estimate.
inline TrainOutcome train_estimate(const Sample& s, const TrainConfig& cfg) {
    s.validate();
    cfg.validate();
    const int N = s.n_points();
    if (N < 2 * cfg.batch_size) {
        throw std::invalid_argument(
            "train_estimate: needs N >= 2 * batch_size; use a classical estimator below that");
    }

    RngStream rng(cfg.seed, derive_stream_id("neural-train", 0, bound_name(cfg.bound)));

    // Disjoint shuffled split.
    const auto perm = rng.permutation(N);
    const int train_n = static_cast<int>(N * cfg.split_fraction);
    std::vector<int> train_rows(perm.begin(), perm.begin() + train_n);
    std::vector<int> test_rows(perm.begin() + train_n, perm.end());

    CriticParams params = CriticParams::make(s.dim_x + s.dim_y, critic_hidden_layers(cfg.arch), rng);
    detail::AdamState adam(params, cfg);

    TrainingHistory history;
    CriticParams best_params = params;
    double best_test = -std::numeric_limits<double>::infinity();
    int evals_since_best = 0;
    double log_ema = 0.0;
    bool ema_ready = false;
    int eval_index = 0;

    for (int step = 1; step <= cfg.max_steps; ++step) {
        std::vector<int> batch(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            batch[i] = train_rows[rng.below(train_rows.size())];
        }
        const RowMatrix joint_inputs = detail::gather_rows(s.values, batch);
        RowMatrix product_inputs;
        if (cfg.bound == Bound::infonce) {
            product_inputs = detail::all_pairs_inputs(s.values, s.dim_x, batch);
        } else {
            const auto sigma = rng.derangement(batch.size());
            std::vector<int> y_rows(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) y_rows[i] = batch[sigma[i]];
            product_inputs = detail::paired_inputs(s.values, s.dim_x, batch, y_rows);
        }

        const BoundGradient bg =
            bound_with_gradient(params, cfg.bound, joint_inputs, product_inputs, log_ema);
        if (cfg.bound == Bound::mine) {
            // Exponential moving average of the DV denominator, in log space.
            if (!ema_ready) {
                log_ema = bg.log_mean_exp_product;
                ema_ready = true;
            } else {
                const double a = std::log(cfg.ema_decay) + log_ema;
                const double b = std::log1p(-cfg.ema_decay) + bg.log_mean_exp_product;
                const double m = std::max(a, b);
                log_ema = m + std::log(std::exp(a - m) + std::exp(b - m));
            }
        }

        double lr = cfg.initial_lr;
        if (cfg.cosine_decay) {
            lr *= 0.5 * (1.0 + std::cos(M_PI * double(step) / double(cfg.max_steps)));
        }
        adam.update(params, bg.grads, lr);

        if (step % cfg.eval_every == 0) {
            RngStream eval_rng(cfg.seed,
                               derive_stream_id("neural-eval", eval_index++, bound_name(cfg.bound)));
            const double train_bound = detail::evaluate_split(params, cfg.bound, s.values, s.dim_x,
                                                              train_rows, cfg.batch_size, eval_rng);
            const double test_bound = detail::evaluate_split(params, cfg.bound, s.values, s.dim_x,
                                                             test_rows, cfg.batch_size, eval_rng);
            history.records.push_back({step, train_bound, test_bound});
            if (test_bound > best_test) {
                best_test = test_bound;
                best_params = params;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
            }
            if (evals_since_best >= cfg.patience_evals) break;
        }
    }

    TrainOutcome out;
    out.result.estimator_id = bound_name(cfg.bound);
    out.result.value = best_test;
    if (history.records.size() >= 2) {
        history.final_flags = diagnose(history);
        for (const auto& f : history.final_flags) out.result.add_flag(f);
    }
    if (!std::isfinite(out.result.value)) {
        out.result.value = 0.0;
        out.result.add_flag(flags::non_finite_guarded);
    }
    out.history = std::move(history);
    out.critic = std::move(best_params);
    return out;
}

// Critic predictions over a grid minus the bound-specific offset that makes
// the optimal critic equal the pointwise MI (1 for NWJ; the log-mean-exp of
// product scores on a reference sample for the DV-style bounds).
struct CriticPmiGrid {
    Vector values;
    double offset = 0.0;
};

inline CriticPmiGrid critic_pmi_grid(const CriticParams& p, const RowMatrix& grid, Bound bound,
                                     const Sample* reference = nullptr,
                                     std::uint64_t offset_seed = 0) {
    CriticPmiGrid out;
    const Vector raw = critic_forward(p, grid);
    switch (bound) {
        case Bound::nwj:
            out.offset = 1.0;
            break;
        case Bound::dv:
        case Bound::mine:
        case Bound::infonce: {
            if (reference) {
                RngStream rng(offset_seed, derive_stream_id("pmi-grid-offset", 0, bound_name(bound)));
                const auto sigma = rng.derangement(reference->n_points());
                std::vector<int> rows(reference->n_points());
                std::vector<int> y_rows(reference->n_points());
                for (int i = 0; i < reference->n_points(); ++i) {
                    rows[i] = i;
                    y_rows[i] = static_cast<int>(sigma[i]);
                }
                const Vector product_scores = critic_forward(
                    p, detail::paired_inputs(reference->values, reference->dim_x, rows, y_rows));
                out.offset = detail::log_mean_exp(product_scores);
            }
            break;
        }
    }
    out.values = raw.array() - out.offset;
    return out;
}

}  // namespace mibench
