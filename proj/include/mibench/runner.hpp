#pragma once

// Deterministic benchmark orchestration.  Every (task, estimator, seed, N)
// cell derives its own RNG streams, so the record set is identical for any
// worker count or execution order; records are sorted canonically before
// they are returned or serialized.

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mibench/estimators.hpp"
#include "mibench/neural.hpp"
#include "mibench/preprocess.hpp"
#include "mibench/tasks.hpp"

namespace mibench {

struct EstimatorConfig {
    std::string id;  // cca | ksg-1 | ksg-2 | histogram | kde | dv | mine | nwj | infonce
    Json params = Json::object();

    bool is_neural() const {
        return id == "dv" || id == "mine" || id == "nwj" || id == "infonce";
    }
};

inline std::vector<EstimatorConfig> default_estimators() {
    return {{"cca", Json::object()},
            {"ksg-1", Json{{"k", 10}}},
            {"histogram", Json{{"bins", 10}}},
            {"kde", Json{{"neighbors", 5}}},
            {"nwj", Json{{"arch", "M"}}},
            {"infonce", Json{{"arch", "M"}}}};
}

// Neural estimators need at least two batches per split; below this the
// harness refuses the run and callers should use a classical estimator.
inline constexpr int kNeuralSampleFloor = 1000;

inline TrainConfig train_config_from(const EstimatorConfig& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.bound = bound_from_name(cfg.id);
    tc.seed = seed;
    if (cfg.params.contains("arch")) tc.arch = cfg.params["arch"].get<std::string>().at(0);
    if (cfg.params.contains("batch_size")) tc.batch_size = cfg.params["batch_size"].get<int>();
    if (cfg.params.contains("max_steps")) tc.max_steps = cfg.params["max_steps"].get<int>();
    if (cfg.params.contains("eval_every")) tc.eval_every = cfg.params["eval_every"].get<int>();
    if (cfg.params.contains("lr")) tc.initial_lr = cfg.params["lr"].get<double>();
    if (cfg.params.contains("ema_decay")) tc.ema_decay = cfg.params["ema_decay"].get<double>();
    if (cfg.params.contains("cosine_decay")) tc.cosine_decay = cfg.params["cosine_decay"].get<bool>();
    return tc;
}

inline EstimateResult run_estimator(const EstimatorConfig& cfg, const Sample& s,
                                    std::uint64_t neural_seed,
                                    TrainingHistory* history_out = nullptr) {
    if (cfg.id == "cca") return estimate_cca(s);
    if (cfg.id == "ksg-1") return estimate_ksg1(s, cfg.params.value("k", 10));
    if (cfg.id == "ksg-2") return estimate_ksg2(s, cfg.params.value("k", 10));
    if (cfg.id == "histogram") return estimate_histogram(s, cfg.params.value("bins", 10));
    if (cfg.id == "kde") return estimate_kde(s, cfg.params.value("neighbors", 5));
    if (cfg.is_neural()) {
        auto outcome = train_estimate(s, train_config_from(cfg, neural_seed));
        if (history_out) *history_out = std::move(outcome.history);
        return outcome.result;
    }
    throw std::invalid_argument("unknown estimator id: " + cfg.id);
}

struct RunRecord {
    std::string task_id;
    std::string estimator_id;
    int seed_index = 0;
    int n_points = 0;
    double estimate = 0.0;
    double mi_true = 0.0;
    double wallclock_s = 0.0;
    std::vector<std::string> flags;

    bool excluded_from_aggregates() const {
        for (const auto& f : flags) {
            if (f == flags::non_convergence || f == flags::overfitting ||
                f == flags::run_failed || f == flags::non_finite_guarded) {
                return true;
            }
        }
        return false;
    }
};

inline bool record_order(const RunRecord& a, const RunRecord& b) {
    if (a.task_id != b.task_id) return a.task_id < b.task_id;
    if (a.estimator_id != b.estimator_id) return a.estimator_id < b.estimator_id;
    if (a.seed_index != b.seed_index) return a.seed_index < b.seed_index;
    return a.n_points < b.n_points;
}

struct BenchmarkOptions {
    int seeds = 10;
    std::vector<int> n_points = {10000};
    Preprocess strategy = Preprocess::standardize;
    std::uint64_t global_seed = 0;
    int jobs = 1;
};

inline std::vector<RunRecord> run_benchmark(const std::vector<TaskSpec>& tasks,
                                            const std::vector<EstimatorConfig>& estimators,
                                            const BenchmarkOptions& opt) {
    struct Cell {
        int task_idx;
        int seed_index;
        int n_points;
    };
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        for (int seed = 0; seed < opt.seeds; ++seed) {
            for (int n : opt.n_points) {
                cells.push_back({static_cast<int>(t), seed, n});
            }
        }
    }

    std::vector<std::vector<RunRecord>> per_cell(cells.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= cells.size()) return;
            const Cell& cell = cells[c];
            const TaskSpec& task = tasks[cell.task_idx];
            std::vector<RunRecord>& out = per_cell[c];

            std::optional<Sample> prepared;
            std::vector<std::string> prep_flags;
            try {
                const Sample raw = task.draw(opt.global_seed, cell.seed_index, cell.n_points);
                PreprocessResult pp = preprocess(raw, opt.strategy);
                prepared.emplace(std::move(pp.sample));
                prep_flags = std::move(pp.flags);
            } catch (const std::exception&) {
                // fall through; every estimator row below is flagged
            }

            for (const auto& est : estimators) {
                RunRecord rec;
                rec.task_id = task.task_id;
                rec.estimator_id = est.id;
                rec.seed_index = cell.seed_index;
                rec.n_points = cell.n_points;
                rec.mi_true = task.mi_true;
                rec.flags = prep_flags;
                if (!prepared) {
                    rec.estimate = std::numeric_limits<double>::quiet_NaN();
                    rec.flags.push_back(flags::run_failed);
                    out.push_back(std::move(rec));
                    continue;
                }
                if (est.is_neural() && cell.n_points < kNeuralSampleFloor) {
                    rec.estimate = std::numeric_limits<double>::quiet_NaN();
                    rec.flags.push_back(flags::run_failed);
                    out.push_back(std::move(rec));
                    continue;
                }
                const std::uint64_t neural_seed =
                    opt.global_seed ^
                    derive_stream_id(task.task_id, cell.seed_index, "train:" + est.id);
                const auto start = std::chrono::steady_clock::now();
                try {
                    const EstimateResult r = run_estimator(est, *prepared, neural_seed);
                    rec.estimate = r.value;
                    for (const auto& f : r.flags) {
                        if (std::find(rec.flags.begin(), rec.flags.end(), f) == rec.flags.end()) {
                            rec.flags.push_back(f);
                        }
                    }
                } catch (const std::exception&) {
                    rec.estimate = std::numeric_limits<double>::quiet_NaN();
                    rec.flags.push_back(flags::run_failed);
                }
                rec.wallclock_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                out.push_back(std::move(rec));
            }
        }
    };

    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<RunRecord> records;
    for (auto& v : per_cell) {
        for (auto& r : v) records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(), record_order);
    return records;
}

}  // namespace mibench
