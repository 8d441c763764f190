#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mibench/neural.hpp"

using namespace mibench;

namespace {

Sample gaussian_sample(const Matrix& cov, int m, int n, std::uint64_t seed, std::uint64_t stream,
                       int n_points) {
    GaussianJoint joint(cov, m, n);
    RngStream rng(seed, stream);
    return Sample(m, n, joint.sample(rng, n_points));
}

// Objective whose analytic gradient bound_with_gradient claims to return.
// For MINE that is the EMA-surrogate, not the DV value itself.
double objective_for_fd(const CriticParams& p, Bound bound, const RowMatrix& joint_inputs,
                        const RowMatrix& product_inputs, double log_ema) {
    const Vector joint_scores = critic_forward(p, joint_inputs);
    const Vector product_scores = critic_forward(p, product_inputs);
    switch (bound) {
        case Bound::mine:
            return joint_scores.mean() -
                   (product_scores.array() - log_ema).exp().mean();
        case Bound::infonce: {
            const auto b = joint_inputs.rows();
            Matrix scores(b, b);
            for (Eigen::Index i = 0; i < b; ++i) {
                scores.row(i) = product_scores.segment(i * b, b).transpose();
            }
            return infonce_bound(scores);
        }
        default:
            return bound_value(bound, joint_scores, product_scores);
    }
}

double min_abs_preactivation(const CriticParams& p, const RowMatrix& inputs) {
    double min_abs = std::numeric_limits<double>::infinity();
    RowMatrix a = inputs;
    for (std::size_t l = 0; l + 1 < p.layer_count(); ++l) {
        RowMatrix z = a * p.weights[l].transpose();
        z.rowwise() += p.biases[l].transpose();
        min_abs = std::min(min_abs, z.cwiseAbs().minCoeff());
        a = z.cwiseMax(0.0);
    }
    return min_abs;
}

}  // namespace

TEST_CASE("critic forward pass", "[neural]") {
    SECTION("zero parameters give zero output") {
        const CriticParams p = CriticParams::zeros(4, {10, 5});
        RowMatrix batch = RowMatrix::Random(7, 4);
        CHECK(critic_forward(p, batch).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("a single linear layer is exact") {
        CriticParams p = CriticParams::zeros(3, {});
        p.weights[0] << 2.0, -1.0, 0.5;
        p.biases[0] << 0.25;
        RowMatrix batch(2, 3);
        batch << 1.0, 2.0, 4.0, -3.0, 0.0, 8.0;
        const Vector out = p.weights[0].row(0) * batch.transpose();
        const Vector scores = critic_forward(p, batch);
        CHECK(scores[0] == 2.0 * 1.0 - 1.0 * 2.0 + 0.5 * 4.0 + 0.25);
        CHECK(scores[1] == 2.0 * -3.0 + 0.5 * 8.0 + 0.25);
        (void)out;
    }
    SECTION("outputs stay finite for huge inputs") {
        RngStream rng(40, 1);
        const CriticParams p = CriticParams::make(2, critic_hidden_layers('M'), rng);
        RowMatrix batch(3, 2);
        batch << 1e6, -1e6, 1e6, 1e6, -1e6, -1e6;
        const Vector scores = critic_forward(p, batch);
        CHECK(scores.allFinite());
    }
    SECTION("width mismatch throws") {
        const CriticParams p = CriticParams::zeros(4, {10, 5});
        CHECK_THROWS_AS(critic_forward(p, RowMatrix::Random(3, 5)), std::invalid_argument);
    }
}

TEST_CASE("bound values on reference scores", "[neural]") {
    SECTION("constant critic collapses DV to zero") {
        for (double c : {-3.0, 0.0, 1.7, 250.0}) {
            const Vector scores = Vector::Constant(32, c);
            CHECK(bound_value(Bound::dv, scores, scores) == Catch::Approx(0.0).margin(1e-12));
        }
    }
    SECTION("critic equal to one collapses NWJ to zero") {
        const Vector ones = Vector::Constant(32, 1.0);
        CHECK(bound_value(Bound::nwj, ones, ones) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("values stay finite for scores up to +-500") {
        Vector big = Vector::Constant(16, 500.0);
        Vector small = Vector::Constant(16, -500.0);
        for (Bound b : {Bound::dv, Bound::nwj}) {
            CHECK(std::isfinite(bound_value(b, big, big)));
            CHECK(std::isfinite(bound_value(b, small, big)));
            CHECK(std::isfinite(bound_value(b, big, small)));
        }
    }
    SECTION("InfoNCE never exceeds log batch size") {
        RngStream rng(41, 1);
        const int b = 16;
        for (int rep = 0; rep < 10000; ++rep) {
            Matrix scores(b, b);
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < b; ++j) scores(i, j) = 8.0 * rng.standard_normal();
            REQUIRE(infonce_bound(scores) <= std::log(double(b)) + 1e-12);
        }
    }
    SECTION("InfoNCE gradient at uniform scores has the softmax pattern") {
        const int b = 8;
        const Matrix grad = detail::infonce_score_gradient(Matrix::Constant(b, b, 1.3));
        for (int i = 0; i < b; ++i) {
            for (int j = 0; j < b; ++j) {
                const double expect = (i == j) ? (b - 1.0) / b : -1.0 / b;
                REQUIRE(grad(i, j) * b == Catch::Approx(expect).margin(1e-12));
            }
        }
    }
}

TEST_CASE("analytic gradients at the zero critic", "[neural]") {
    const CriticParams p = CriticParams::zeros(2, {4});
    RngStream rng(42, 1);
    RowMatrix joint(8, 2), product(8, 2);
    for (int i = 0; i < 8; ++i) {
        joint(i, 0) = rng.standard_normal();
        joint(i, 1) = rng.standard_normal();
        product(i, 0) = joint(i, 0);
        product(i, 1) = joint((i + 1) % 8, 1);
    }
    // With f == 0 every score is zero; d(bound)/d(output bias) follows by hand.
    const std::size_t bias_out_index = p.parameter_count() - 1;
    auto grad_out_bias = [&](Bound b, double log_ema = 0.0) {
        return bound_with_gradient(p, b, joint, product, log_ema).grads.get_flat(bias_out_index);
    };
    CHECK(grad_out_bias(Bound::dv) == Catch::Approx(0.0).margin(1e-12));
    CHECK(grad_out_bias(Bound::nwj) == Catch::Approx(1.0 - std::exp(-1.0)).margin(1e-12));
    CHECK(grad_out_bias(Bound::mine, 0.0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("gradients match central finite differences", "[neural][oracle]") {
    RngStream rng(43, 1);
    const double h = 1e-5;
    for (Bound bound : {Bound::dv, Bound::mine, Bound::nwj, Bound::infonce}) {
        int done = 0;
        int attempts = 0;
        while (done < 20 && attempts < 200) {
            ++attempts;
            const int b = 6;
            const int dim = 3;
            CriticParams p = CriticParams::make(dim, {10, 5}, rng);
            RowMatrix joint(b, dim);
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < dim; ++j) joint(i, j) = rng.standard_normal();
            RowMatrix product;
            if (bound == Bound::infonce) {
                product.resize(b * b, dim);
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) {
                        product.row(i * b + j).head(2) = joint.row(i).head(2);
                        product.row(i * b + j).tail(1) = joint.row(j).tail(1);
                    }
            } else {
                product.resize(b, dim);
                for (int i = 0; i < b; ++i) {
                    product.row(i).head(2) = joint.row(i).head(2);
                    product.row(i).tail(1) = joint.row((i + 1) % b).tail(1);
                }
            }
            // Skip draws whose pre-activations sit on a ReLU kink; finite
            // differences are ill-defined across the kink.
            if (std::min(min_abs_preactivation(p, joint), min_abs_preactivation(p, product)) <
                1e-3) {
                continue;
            }
            const double log_ema = 0.3 * rng.standard_normal();
            const BoundGradient bg = bound_with_gradient(p, bound, joint, product, log_ema);
            for (std::size_t idx = 0; idx < p.parameter_count(); ++idx) {
                CriticParams plus = p, minus = p;
                plus.add_flat(idx, h);
                minus.add_flat(idx, -h);
                const double fd = (objective_for_fd(plus, bound, joint, product, log_ema) -
                                   objective_for_fd(minus, bound, joint, product, log_ema)) /
                                  (2.0 * h);
                const double analytic = bg.grads.get_flat(idx);
                REQUIRE(std::abs(fd - analytic) <=
                        1e-4 * std::max({1.0, std::abs(fd), std::abs(analytic)}));
            }
            ++done;
        }
        REQUIRE(done == 20);
    }
}

TEST_CASE("training is deterministic", "[neural]") {
    Matrix cov(2, 2);
    cov << 1.0, 0.6, 0.6, 1.0;
    const Sample s = gaussian_sample(cov, 1, 1, 44, 1, 1200);
    TrainConfig cfg;
    cfg.bound = Bound::nwj;
    cfg.batch_size = 128;
    cfg.max_steps = 1000;
    cfg.eval_every = 100;
    cfg.seed = 7;
    const auto o1 = train_estimate(s, cfg);
    const auto o2 = train_estimate(s, cfg);
    const auto& r1 = o1.result;
    const auto& r2 = o2.result;
    const auto& h1 = o1.history;
    const auto& h2 = o2.history;
    CHECK(r1.value == r2.value);
    REQUIRE(h1.records.size() == h2.records.size());
    for (std::size_t i = 0; i < h1.records.size(); ++i) {
        REQUIRE(h1.records[i].step == h2.records[i].step);
        REQUIRE(h1.records[i].train_bound == h2.records[i].train_bound);
        REQUIRE(h1.records[i].test_bound == h2.records[i].test_bound);
    }
    for (std::size_t i = 1; i < h1.records.size(); ++i) {
        REQUIRE(h1.records[i].step > h1.records[i - 1].step);
    }
    CHECK_THROWS_AS(train_estimate(gaussian_sample(cov, 1, 1, 44, 2, 200), cfg),
                    std::invalid_argument);
}

TEST_CASE("independent data trains to nearly zero", "[neural][train]") {
    const Sample s = gaussian_sample(Matrix::Identity(2, 2), 1, 1, 45, 1, 4000);
    TrainConfig cfg;
    cfg.bound = Bound::infonce;
    cfg.seed = 3;
    const auto outcome = train_estimate(s, cfg);
    CHECK(outcome.result.value < 0.1);
}

TEST_CASE("nwj recovers the bivariate normal across seeds", "[neural][train]") {
    Matrix cov(2, 2);
    cov << 1.0, 0.75, 0.75, 1.0;
    const double truth = 0.41333928659223397;
    int in_band = 0;
    for (int seed = 0; seed < 10; ++seed) {
        const Sample s = gaussian_sample(cov, 1, 1, 46, seed, 10000);
        TrainConfig cfg;
        cfg.bound = Bound::nwj;
        cfg.arch = 'M';
        cfg.seed = seed;
        const auto outcome = train_estimate(s, cfg);
        if (!outcome.result.flags.empty()) continue;  // diagnostics exclude the run
        if (outcome.result.value >= 2.0 / 3.0 * truth && outcome.result.value <= 1.5 * truth)
            ++in_band;
    }
    CHECK(in_band >= 8);
}

TEST_CASE("infonce picks up sparse interactions in 5x5", "[neural][train][slow]") {
    const Matrix cov = pair_correlation(5, 5, 0.8, 2);
    const double truth = 1.0216512475319814;
    int in_band = 0;
    double mean = 0.0;
    int used = 0;
    for (int seed = 0; seed < 3; ++seed) {
        const Sample s = gaussian_sample(cov, 5, 5, 47, seed, 10000);
        TrainConfig cfg;
        cfg.bound = Bound::infonce;
        cfg.arch = 'M';
        cfg.seed = seed;
        const auto outcome = train_estimate(s, cfg);
        mean += outcome.result.value;
        ++used;
        if (outcome.result.value >= 2.0 / 3.0 * truth && outcome.result.value <= 1.5 * truth)
            ++in_band;
    }
    mean /= used;
    CHECK(in_band >= 2);
    CHECK(mean >= 2.0 / 3.0 * truth);
    CHECK(mean <= 1.5 * truth);
}

TEST_CASE("permutation null trains to nearly zero", "[neural][train]") {
    Matrix cov(2, 2);
    cov << 1.0, 0.75, 0.75, 1.0;
    Sample s = gaussian_sample(cov, 1, 1, 48, 1, 10000);
    RngStream rng(48, 2);
    const auto perm = rng.permutation(s.n_points());
    RowMatrix shuffled = s.values;
    for (int i = 0; i < s.n_points(); ++i) shuffled(i, 1) = s.values(perm[i], 1);
    s.values = shuffled;
    TrainConfig cfg;
    cfg.bound = Bound::nwj;
    cfg.seed = 5;
    const auto outcome = train_estimate(s, cfg);
    CHECK(outcome.result.value < 0.1);
}

TEST_CASE("diagnostics flag pathological histories", "[neural]") {
    SECTION("flat history is clean") {
        TrainingHistory h;
        for (int i = 1; i <= 8; ++i) h.records.push_back({250 * i, 0.5, 0.5});
        CHECK(diagnose(h).empty());
    }
    SECTION("train-test gap flags overfitting") {
        TrainingHistory h;
        for (int i = 1; i <= 8; ++i) {
            h.records.push_back({250 * i, 0.25 * i, 0.5});
        }
        const auto f = diagnose(h);
        CHECK(std::find(f.begin(), f.end(), flags::overfitting) != f.end());
    }
    SECTION("monotone rising test bound flags non-convergence") {
        TrainingHistory h;
        for (int i = 1; i <= 8; ++i) {
            h.records.push_back({250 * i, 0.1 * i, 0.1 * i});
        }
        const auto f = diagnose(h);
        CHECK(std::find(f.begin(), f.end(), flags::non_convergence) != f.end());
    }
    SECTION("too few records throw") {
        TrainingHistory h;
        h.records.push_back({250, 0.1, 0.1});
        CHECK_THROWS_AS(diagnose(h), std::invalid_argument);
    }
}

TEST_CASE("critic pmi grid against the oracle", "[neural][train]") {
    SECTION("zero critic maps to -1 under the NWJ offset") {
        const CriticParams p = CriticParams::zeros(2, {4});
        const RowMatrix grid = RowMatrix::Random(25, 2);
        const CriticPmiGrid g = critic_pmi_grid(p, grid, Bound::nwj);
        CHECK(g.offset == 1.0);
        CHECK((g.values.array() + 1.0).abs().maxCoeff() == 0.0);
    }
    SECTION("trained NWJ critic approximates Gaussian pmi but not Cauchy pmi") {
        Matrix cov(2, 2);
        cov << 1.0, 0.5, 0.5, 1.0;
        GaussianJoint gauss(cov, 1, 1);
        StudentJoint cauchy(cov, 1, 1, 1);

        const int side = 11;
        RowMatrix grid(side * side, 2);
        for (int i = 0; i < side; ++i) {
            for (int j = 0; j < side; ++j) {
                grid(i * side + j, 0) = -2.0 + 4.0 * i / (side - 1);
                grid(i * side + j, 1) = -2.0 + 4.0 * j / (side - 1);
            }
        }

        auto rmse_for = [&](const JointDistribution& dist) {
            RngStream rng(49, 1);
            const Sample s = Sample(1, 1, dist.sample(rng, 5000));
            TrainConfig cfg;
            cfg.bound = Bound::nwj;
            cfg.seed = 11;
            const auto outcome = train_estimate(s, cfg);
            const CriticPmiGrid g = critic_pmi_grid(outcome.critic, grid, Bound::nwj);
            double sq = 0.0;
            for (int r = 0; r < grid.rows(); ++r) {
                Vector x(1), y(1);
                x[0] = grid(r, 0);
                y[0] = grid(r, 1);
                const double diff = g.values[r] - dist.pmi(x, y);
                sq += diff * diff;
            }
            return std::sqrt(sq / grid.rows());
        };

        const double rmse_gauss = rmse_for(gauss);
        const double rmse_cauchy = rmse_for(cauchy);
        CHECK(rmse_gauss < 0.5);
        CHECK(rmse_cauchy > rmse_gauss);
    }
}
