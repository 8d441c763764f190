#pragma once

// The benchmark task registry: forty named tasks with exact ground-truth MI,
// spanning transformed one-dimensional pairs, dense and sparse multivariate
// normals, multivariate Student families, and transformed multivariates.
// Parameters not fixed verbatim by the benchmark's source description carry
// reconstructed = true in their metadata.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mibench/distributions.hpp"
#include "mibench/rng.hpp"
#include "mibench/transforms.hpp"

namespace mibench {

struct TaskSpec {
    std::string task_id;  // human-readable stable id
    std::string family;
    Json params;
    int dim_x = 0;
    int dim_y = 0;
    double mi_true = 0.0;
    Json transform_chain;  // {"x": [...], "y": [...]}, innermost first
    bool reconstructed = false;
    std::string content_hash;  // hash of (family, canonical params)

    std::shared_ptr<const JointDistribution> distribution;
    // Density-tractable law whose E[pmi] equals mi_true (the base of a
    // transformed task); null when no tractable density exists.
    std::shared_ptr<const JointDistribution> pmi_reference;

    Sample draw(std::uint64_t global_seed, int seed_index, int n_points) const {
        RngStream rng(global_seed, task_id, static_cast<std::uint64_t>(seed_index), "sample");
        return Sample(dim_x, dim_y, distribution->sample(rng, n_points));
    }
};

namespace detail {

inline std::string content_hash_of(const std::string& family, const Json& params) {
    const std::string canon = family + "\x1f" + params.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = fnv1a_append(h, canon.data(), canon.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline Json chain_json(const std::vector<BlockMapPtr>& maps) {
    Json arr = Json::array();
    for (const auto& m : maps) arr.push_back({{"name", m->name()}, {"params", m->params()}});
    return arr;
}

struct TaskBuilder {
    std::vector<TaskSpec> tasks;

    void add(std::string id, std::string family, Json params,
             std::shared_ptr<const JointDistribution> dist,
             std::shared_ptr<const JointDistribution> pmi_ref, bool reconstructed,
             const std::vector<BlockMapPtr>& x_maps = {},
             const std::vector<BlockMapPtr>& y_maps = {}) {
        TaskSpec t;
        t.task_id = std::move(id);
        t.family = std::move(family);
        t.params = std::move(params);
        t.dim_x = dist->dim_x();
        t.dim_y = dist->dim_y();
        t.mi_true = dist->mi_true();
        t.transform_chain = Json{{"x", chain_json(x_maps)}, {"y", chain_json(y_maps)}};
        t.reconstructed = reconstructed;
        t.content_hash = content_hash_of(t.family, t.params);
        t.distribution = std::move(dist);
        t.pmi_reference = std::move(pmi_ref);
        for (const auto& existing : tasks) {
            if (existing.task_id == t.task_id) {
                throw std::logic_error("registry: duplicate task id " + t.task_id);
            }
        }
        tasks.push_back(std::move(t));
    }
};

inline std::shared_ptr<GaussianJoint> bivariate(double rho) {
    Matrix cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    return std::make_shared<GaussianJoint>(cov, 1, 1);
}

}  // namespace detail

// Transformed tasks must inherit their base MI bit-exactly; a violation
// aborts with the offending task id.
inline void check_registry_consistency(const std::vector<TaskSpec>& tasks) {
    for (const auto& t : tasks) {
        const auto* transformed = dynamic_cast<const TransformedDistribution*>(t.distribution.get());
        if (transformed && transformed->mi_true() != transformed->base().mi_true()) {
            throw std::logic_error("registry: MI inheritance violated for task " + t.task_id);
        }
        if (t.mi_true != t.distribution->mi_true()) {
            throw std::logic_error("registry: stored MI mismatch for task " + t.task_id);
        }
        if (!(t.mi_true > 0.0) || !std::isfinite(t.mi_true)) {
            throw std::logic_error("registry: nonpositive MI for task " + t.task_id);
        }
    }
}

inline std::vector<TaskSpec> registry_default() {
    detail::TaskBuilder b;
    const auto cdf = std::make_shared<AxiswiseMap>(axis_map_normal_cdf());
    const auto half_cube = std::make_shared<AxiswiseMap>(axis_map_half_cube());
    const auto asinh_map = std::make_shared<AxiswiseMap>(axis_map_asinh());

    // --- one-dimensional pairs on the rho = 0.75 bivariate normal ---
    {
        auto base = detail::bivariate(0.75);
        const Json params{{"rho", 0.75}};
        b.add("1v1-normal-0.75", "bivariate-normal", params, base, base, false);
        b.add("1v1-uniform-margins", "transformed-bivariate", {{"rho", 0.75}, {"map", "normal-cdf"}},
              make_task_transform(base, {cdf}, {cdf}), base, false, {cdf}, {cdf});
        b.add("1v1-half-cube", "transformed-bivariate", {{"rho", 0.75}, {"map", "half-cube"}},
              make_task_transform(base, {half_cube}, {half_cube}), base, false, {half_cube},
              {half_cube});
        b.add("1v1-asinh", "transformed-bivariate", {{"rho", 0.75}, {"map", "asinh"}},
              make_task_transform(base, {asinh_map}, {asinh_map}), base, false, {asinh_map},
              {asinh_map});

        const auto wiggly_x = std::make_shared<AxiswiseMap>(
            axis_map_wiggly({0.4, 0.2, 0.03}, {1.0, 1.7, 3.3}, {0.0, 1.0, -2.5}));
        const auto wiggly_y = std::make_shared<AxiswiseMap>(
            axis_map_wiggly({-0.4, 0.17, 0.02}, {0.4, 1.3, 4.3}, {0.0, 3.5, -2.5}));
        b.add("1v1-wiggly", "transformed-bivariate", {{"rho", 0.75}, {"map", "wiggly"}},
              make_task_transform(base, {wiggly_x}, {wiggly_y}), base, false, {wiggly_x},
              {wiggly_y});

        // bimodal margins via mixture quantiles of the uniformized pair; the
        // base correlation is not fixed by the source description
        const auto gmm_x = std::make_shared<AxiswiseMap>(
            axis_map_gmm_quantile({0.3, 0.7}, {0.0, 5.0}, {1.0, 1.0}));
        const auto gmm_y = std::make_shared<AxiswiseMap>(
            axis_map_gmm_quantile({0.5, 0.5}, {-1.0, 3.0}, {1.0, 1.0}));
        b.add("1v1-bimodal", "transformed-bivariate", {{"rho", 0.75}, {"map", "gmm-quantile"}},
              make_task_transform(base, {cdf, gmm_x}, {cdf, gmm_y}), base, true, {cdf, gmm_x},
              {cdf, gmm_y});
    }

    // --- additive noise ---
    for (double eps : {0.1, 0.75}) {
        auto dist = std::make_shared<AdditiveNoiseJoint>(eps);
        char id[64];
        std::snprintf(id, sizeof(id), "1v1-additive-%g", eps);
        b.add(id, "uniform-additive-noise", Json{{"epsilon", eps}}, dist, nullptr, false);
    }

    // --- Swiss roll: 1-d uniform margins with MI 0.8, X embedded into R^2 ---
    {
        auto base = detail::bivariate(bivariate_rho_for_mi(0.8));
        const auto roll = std::make_shared<SwissRollMap>();
        b.add("2v1-swiss-roll", "swiss-roll", Json{{"mi", 0.8}},
              make_task_transform(base, {cdf, roll}, {cdf}), base, false, {cdf, roll}, {cdf});
    }

    // --- multivariate normal, dense and 2-pair ---
    const std::pair<int, int> mn_dims[] = {{2, 2}, {3, 3}, {5, 5}, {25, 25}};
    std::vector<std::shared_ptr<GaussianJoint>> dense_bases, pair_bases;
    for (const auto& [m, n] : mn_dims) {
        auto dense = std::make_shared<GaussianJoint>(dense_correlation(m + n, 0.5), m, n);
        auto two_pair = std::make_shared<GaussianJoint>(pair_correlation(m, n, 0.8, 2), m, n);
        dense_bases.push_back(dense);
        pair_bases.push_back(two_pair);
        char id[64];
        std::snprintf(id, sizeof(id), "mn-dense-%dx%d", m, n);
        b.add(id, "multinormal-dense", Json{{"m", m}, {"n", n}, {"rho", 0.5}}, dense, dense, false);
        std::snprintf(id, sizeof(id), "mn-2pair-%dx%d", m, n);
        b.add(id, "multinormal-2pair", Json{{"m", m}, {"n", n}, {"rho", 0.8}, {"pairs", 2}},
              two_pair, two_pair, false);
    }

    // --- multivariate Student with identity dispersion ---
    std::shared_ptr<StudentJoint> student_nu1_2x2, student_nu1_5x5;
    for (int nu : {1, 2, 3}) {
        for (const auto& [m, n] : {std::pair{2, 2}, std::pair{3, 3}, std::pair{5, 5}}) {
            auto dist = std::make_shared<StudentJoint>(Matrix::Identity(m + n, m + n), m, n, nu);
            if (nu == 1 && m == 2) student_nu1_2x2 = dist;
            if (nu == 1 && m == 5) student_nu1_5x5 = dist;
            char id[64];
            std::snprintf(id, sizeof(id), "student-identity-nu%d-%dx%d", nu, m, n);
            b.add(id, "student-identity", Json{{"nu", nu}, {"m", m}, {"n", n}}, dist, dist, true);
        }
    }

    // --- transformed multivariates ---
    auto spiral_maps = [](int m, int n) {
        // X-generator in the (1,2) plane at speed 1/m, Y-generator in the
        // (2,3) plane at speed 1/n.
        const auto sx = std::make_shared<SpiralMap>(SpiralMap::single_plane(m, 0, 1, 1.0 / m));
        const auto sy = std::make_shared<SpiralMap>(SpiralMap::single_plane(n, 1, 2, 1.0 / n));
        return std::pair<BlockMapPtr, BlockMapPtr>{sx, sy};
    };

    const int dense_transform_idx[] = {1, 2, 3};  // 3x3, 5x5, 25x25
    for (int idx : dense_transform_idx) {
        const auto& [m, n] = mn_dims[idx];
        auto base = dense_bases[idx];
        char id[64];
        std::snprintf(id, sizeof(id), "cdf-mn-dense-%dx%d", m, n);
        b.add(id, "transformed-multinormal", Json{{"base", "dense"}, {"m", m}, {"n", n}, {"map", "normal-cdf"}},
              make_task_transform(base, {cdf}, {cdf}), base, false, {cdf}, {cdf});
        if (m <= 5) {
            std::snprintf(id, sizeof(id), "half-cube-mn-dense-%dx%d", m, n);
            b.add(id, "transformed-multinormal", Json{{"base", "dense"}, {"m", m}, {"n", n}, {"map", "half-cube"}},
                  make_task_transform(base, {half_cube}, {half_cube}), base, false, {half_cube},
                  {half_cube});
            std::snprintf(id, sizeof(id), "asinh-mn-dense-%dx%d", m, n);
            b.add(id, "transformed-multinormal", Json{{"base", "dense"}, {"m", m}, {"n", n}, {"map", "asinh"}},
                  make_task_transform(base, {asinh_map}, {asinh_map}), base, false, {asinh_map},
                  {asinh_map});
        }
        const auto [sx, sy] = spiral_maps(m, n);
        std::snprintf(id, sizeof(id), "spiral-mn-dense-%dx%d", m, n);
        b.add(id, "transformed-multinormal", Json{{"base", "dense"}, {"m", m}, {"n", n}, {"map", "spiral"}},
              make_task_transform(base, {sx}, {sy}), base, false, {sx}, {sy});
    }
    {
        auto base = pair_bases[2];  // 5x5 two-pair
        const auto [sx, sy] = spiral_maps(5, 5);
        b.add("cdf-mn-2pair-5x5", "transformed-multinormal",
              Json{{"base", "2pair"}, {"m", 5}, {"n", 5}, {"map", "normal-cdf"}},
              make_task_transform(base, {cdf}, {cdf}), base, false, {cdf}, {cdf});
        b.add("spiral-mn-2pair-5x5", "transformed-multinormal",
              Json{{"base", "2pair"}, {"m", 5}, {"n", 5}, {"map", "spiral"}},
              make_task_transform(base, {sx}, {sy}), base, false, {sx}, {sy});
    }
    b.add("asinh-student-nu1-2x2", "transformed-student",
          Json{{"nu", 1}, {"m", 2}, {"n", 2}, {"map", "asinh"}},
          make_task_transform(student_nu1_2x2, {asinh_map}, {asinh_map}), student_nu1_2x2, true,
          {asinh_map}, {asinh_map});
    b.add("asinh-student-nu1-5x5", "transformed-student",
          Json{{"nu", 1}, {"m", 5}, {"n", 5}, {"map", "asinh"}},
          make_task_transform(student_nu1_5x5, {asinh_map}, {asinh_map}), student_nu1_5x5, true,
          {asinh_map}, {asinh_map});

    if (b.tasks.size() != 40) {
        throw std::logic_error("registry: expected 40 tasks, built " +
                               std::to_string(b.tasks.size()));
    }
    check_registry_consistency(b.tasks);
    return b.tasks;
}

inline const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, const std::string& id) {
    for (const auto& t : tasks) {
        if (t.task_id == id) return t;
    }
    throw std::invalid_argument("unknown task id: " + id);
}

// Deep Monte-Carlo self-check: for every density-tractable task the mean of
// pmi over fresh base samples must sit within 3 standard errors of mi_true.
struct PmiCheckRow {
    std::string task_id;
    double mc_mean = 0.0;
    double std_error = 0.0;
    bool pass = false;
};

inline std::vector<PmiCheckRow> verify_registry_pmi(const std::vector<TaskSpec>& tasks,
                                                    int n_samples, std::uint64_t global_seed) {
    std::vector<PmiCheckRow> rows;
    for (const auto& t : tasks) {
        if (!t.pmi_reference || !t.pmi_reference->has_pmi()) continue;
        const auto& dist = *t.pmi_reference;
        RngStream rng(global_seed, t.task_id, 0, "pmi-check");
        const int m = dist.dim_x();
        const int n = dist.dim_y();
        double sum = 0.0, sum_sq = 0.0;
        const int chunk = 8192;
        int remaining = n_samples;
        while (remaining > 0) {
            const int take = std::min(chunk, remaining);
            const RowMatrix rows_mat = dist.sample(rng, take);
            for (int i = 0; i < take; ++i) {
                const Vector x = rows_mat.row(i).head(m);
                const Vector y = rows_mat.row(i).tail(n);
                const double v = dist.pmi(x, y);
                sum += v;
                sum_sq += v * v;
            }
            remaining -= take;
        }
        PmiCheckRow row;
        row.task_id = t.task_id;
        row.mc_mean = sum / n_samples;
        const double var = std::max(0.0, sum_sq / n_samples - row.mc_mean * row.mc_mean);
        row.std_error = std::sqrt(var / n_samples);
        row.pass = std::abs(row.mc_mean - t.mi_true) <= 3.0 * row.std_error;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mibench
