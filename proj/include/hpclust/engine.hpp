#pragma once

#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hpclust/core.hpp"
#include "hpclust/lloyd.hpp"
#include "hpclust/rng.hpp"
#include "hpclust/seeding.hpp"

namespace hpclust {

enum class StrategyKind { inner, competitive, cooperative, hybrid };

inline const char* to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::inner: return "inner";
        case StrategyKind::competitive: return "competitive";
        case StrategyKind::cooperative: return "cooperative";
        case StrategyKind::hybrid: return "hybrid";
    }
    return "?";
}

// phase_t1/phase_t2 apply to hybrid only and are expressed in the unit of the
// active clock: seconds under a wall-clock budget, processed samples per
// worker under a max_samples budget.
struct Strategy {
    StrategyKind kind = StrategyKind::competitive;
    double phase_t1 = 0.0;
    double phase_t2 = 0.0;

    static Strategy inner() { return {StrategyKind::inner}; }
    static Strategy competitive() { return {StrategyKind::competitive}; }
    static Strategy cooperative() { return {StrategyKind::cooperative}; }
    static Strategy hybrid(double t1, double t2) { return {StrategyKind::hybrid, t1, t2}; }
};

struct EngineConfig {
    std::size_t k = 0;
    std::size_t sample_size = 0;
    std::size_t n_workers = 1;
    double time_limit = std::numeric_limits<double>::infinity();  // seconds
    std::optional<std::size_t> max_samples;                       // per worker
    Strategy strategy;
    std::uint64_t master_seed = 0;
    SeedConfig seed;
    LloydConfig lloyd;
    std::size_t n_threads = 0;         // inner-parallelism width; 0 = hardware
    bool compute_full_objective = true;
    bool compute_assignment = false;

    // True when termination is sample-count based only; the run then uses the
    // deterministic sample-count clock and lockstep scheduling.
    bool deterministic_mode() const { return !std::isfinite(time_limit) && max_samples.has_value(); }

    double budget() const {
        return deterministic_mode() ? static_cast<double>(*max_samples) : time_limit;
    }

    void validate(std::size_t m) const {
        require(k >= 1, "EngineConfig: k must be positive");
        require(sample_size >= 1 && sample_size <= m, "EngineConfig: sample_size must be in [1, m]");
        require(n_workers >= 1, "EngineConfig: need at least one worker");
        require(std::isfinite(time_limit) || max_samples.has_value(),
                "EngineConfig: need a time limit or a max_samples bound");
        if (std::isfinite(time_limit)) require(time_limit > 0.0, "EngineConfig: time limit must be positive");
        if (max_samples) require(*max_samples >= 1, "EngineConfig: max_samples must be positive");
        if (strategy.kind == StrategyKind::hybrid) {
            require(strategy.phase_t1 >= 0.0 && strategy.phase_t2 >= 0.0,
                    "EngineConfig: hybrid phase durations must be nonnegative");
            const double total = strategy.phase_t1 + strategy.phase_t2;
            const double b = budget();
            require(std::abs(total - b) <= 1e-9 * std::max(1.0, std::abs(b)),
                    "EngineConfig: hybrid phases must sum to the total budget");
        }
    }
};

struct TraceEntry {
    double timestamp;         // seconds (wall mode) or processed samples (deterministic mode)
    double sample_objective;  // accepted incumbent objective on its sample
};

// One parallel worker's keep-the-best state.
struct WorkerState {
    int worker_id = 0;
    CentroidSet incumbent;  // C_w; all-degenerate before the first accepted sample
    double incumbent_objective = std::numeric_limits<double>::infinity();  // f_hat_w
    double t_w = 0.0;
    std::size_t samples_processed = 0;
    std::vector<TraceEntry> update_trace;
};

struct PublicationRecord {
    std::int64_t version;
    int worker_id;
    double objective;
    double timestamp;
};

// Best published incumbent across workers. Publication is conditional on a
// strict objective improvement, so best_objective is non-increasing in
// version; snapshots are copied under the lock and are never torn.
class SharedBest {
public:
    struct Snapshot {
        int worker_id;
        double objective;
        CentroidSet centroids;
        std::int64_t version;
    };

    std::optional<Snapshot> snapshot() const {
        std::lock_guard lock(mu_);
        if (version_ == 0) return std::nullopt;
        return Snapshot{worker_id_, objective_, centroids_, version_};
    }

    bool try_publish(int worker_id, double objective, const CentroidSet& centroids, double timestamp) {
        std::lock_guard lock(mu_);
        if (!(objective < objective_)) return false;
        ++version_;
        worker_id_ = worker_id;
        objective_ = objective;
        centroids_ = centroids;
        log_.push_back({version_, worker_id, objective, timestamp});
        return true;
    }

    std::int64_t version() const {
        std::lock_guard lock(mu_);
        return version_;
    }

    std::vector<PublicationRecord> publication_log() const {
        std::lock_guard lock(mu_);
        return log_;
    }

private:
    mutable std::mutex mu_;
    std::int64_t version_ = 0;
    int worker_id_ = -1;
    double objective_ = std::numeric_limits<double>::infinity();
    CentroidSet centroids_;
    std::vector<PublicationRecord> log_;
};

struct NoSolutionError : std::runtime_error {
    NoSolutionError() : std::runtime_error("no solution produced: every worker incumbent is infinite") {}
};

// s distinct rows of X, uniform without replacement, as a pure function of
// the stream state (partial Fisher-Yates over a fresh index array).
inline Dataset draw_sample(const Dataset& X, std::size_t s, RngStream& rng) {
    require(s >= 1 && s <= X.rows, "draw_sample: sample size must be in [1, m]");
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Dataset out(s, X.cols);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + rng.uniform_index(X.rows - i);
        std::swap(idx[i], idx[j]);
        auto src = X.row(idx[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

// Lowest-objective worker, ties to the lowest id.
inline std::pair<int, const CentroidSet*> select_best(const std::vector<WorkerState>& workers) {
    require(!workers.empty(), "select_best: no workers");
    int best = -1;
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& w : workers) {
        if (w.incumbent_objective < best_f) {
            best_f = w.incumbent_objective;
            best = w.worker_id;
        }
    }
    if (best < 0) throw NoSolutionError{};
    for (const auto& w : workers)
        if (w.worker_id == best) return {best, &w.incumbent};
    throw std::logic_error("select_best: worker ids inconsistent");
}

// Full-dataset nearest-centroid assignment plus the clustering objective.
inline std::pair<Assignment, double> final_assignment(const Dataset& X, const CentroidSet& C,
                                                      const ParallelPolicy& par = ParallelPolicy::sequential(),
                                                      DistCounter* counter = nullptr) {
    require(!C.any_degenerate(), "final_assignment: degenerate centroid present");
    require(C.cols == X.cols, "final_assignment: dimension mismatch");
    auto res = detail::assign_and_reduce(
        X, C.k, [&](std::size_t j) { return C.centers.data() + j * C.cols; }, par, counter);
    return {std::move(res.assignment), res.cost};
}

namespace detail {

// Assignment that tolerates degenerate flags by scanning only the valid
// centers; labels refer to the original centroid indices.
inline std::pair<Assignment, double> assign_valid_subset(const Dataset& X, const CentroidSet& C,
                                                         const ParallelPolicy& par, DistCounter* counter) {
    if (!C.any_degenerate()) return final_assignment(X, C, par, counter);
    std::vector<std::size_t> valid;
    for (std::size_t j = 0; j < C.k; ++j)
        if (!C.degenerate[j]) valid.push_back(j);
    require(!valid.empty(), "assignment: every centroid is degenerate");
    auto res = assign_and_reduce(
        X, valid.size(), [&](std::size_t j) { return C.centers.data() + valid[j] * C.cols; }, par, counter);
    Assignment remapped;
    remapped.labels.resize(res.assignment.labels.size());
    remapped.counts.assign(C.k, 0);
    for (std::size_t i = 0; i < res.assignment.labels.size(); ++i) {
        const auto j = valid[static_cast<std::size_t>(res.assignment.labels[i])];
        remapped.labels[i] = static_cast<std::int32_t>(j);
        ++remapped.counts[j];
    }
    return {std::move(remapped), res.cost};
}

}  // namespace detail

// One sample-processing step: draw a sample, reseed the degenerate centers of
// the given initialization on it, run the local search, and accept the result
// as the worker's incumbent iff it strictly improves the worker's own best.
// `clock` is read once, after the sample is processed. Returns true on
// acceptance.
template <typename Clock>
inline bool worker_step(WorkerState& w, RngStream& rng, const Dataset& X, const CentroidSet& init_source,
                        const EngineConfig& cfg, Clock&& clock, DistCounter* counter = nullptr) {
    Dataset S = draw_sample(X, cfg.sample_size, rng);

    LloydConfig lloyd = cfg.lloyd;
    lloyd.parallel_rows = cfg.strategy.kind == StrategyKind::inner;
    lloyd.n_threads = cfg.n_threads;
    const ParallelPolicy par = lloyd.policy();

    CentroidSet init = reinit_degenerate(init_source, S, cfg.seed, rng, par, counter);
    LloydOutcome out = kmeans(S, init, lloyd, counter);

    ++w.samples_processed;
    double timestamp = clock();
    w.t_w = timestamp;
    if (!(out.objective < w.incumbent_objective)) return false;

    // keep-the-best: accepted incumbents must be strictly decreasing
    if (!w.update_trace.empty()) {
        if (!(out.objective < w.update_trace.back().sample_objective))
            throw std::logic_error("worker_step: non-decreasing incumbent accepted");
        if (!(timestamp > w.update_trace.back().timestamp))
            timestamp = std::nextafter(w.update_trace.back().timestamp, std::numeric_limits<double>::infinity());
    }
    w.incumbent = std::move(out.centroids);
    w.incumbent_objective = out.objective;
    w.update_trace.push_back({timestamp, out.objective});
    return true;
}

struct ClusteringResult {
    CentroidSet centroids;
    std::optional<double> full_objective;
    std::optional<Assignment> assignment;
    int best_worker = 0;
    double best_sample_objective = std::numeric_limits<double>::infinity();
    // min over workers of the timestamp of their last incumbent update
    double clustering_time = 0.0;
    // same quantity read from the earliest-finishing worker only
    double clustering_time_first_finisher = 0.0;
    double wall_seconds = 0.0;
    std::size_t total_samples = 0;
    std::int64_t distance_evals = 0;
    std::vector<WorkerState> per_worker;
    std::vector<PublicationRecord> publications;
};

namespace detail {

inline bool phase_cooperative(const Strategy& strategy, double progress) {
    switch (strategy.kind) {
        case StrategyKind::inner:
        case StrategyKind::competitive: return false;
        case StrategyKind::cooperative: return true;
        case StrategyKind::hybrid: return progress >= strategy.phase_t1;
    }
    return false;
}

struct RunContext {
    const Dataset& X;
    const EngineConfig& cfg;
    SharedBest shared;
    DistCounter counter;
    std::chrono::steady_clock::time_point t0;

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// Runs body(worker_index) on dedicated threads (inline when single-worker)
// and rethrows the first worker exception after the join.
template <typename Body>
inline void run_worker_threads(std::size_t n, Body&& body) {
    if (n == 1) {
        body(0);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::size_t wi = 0; wi < n; ++wi)
        threads.emplace_back([&, wi] {
            try {
                body(wi);
            } catch (...) {
                errors[wi] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Initialization source for one step under the current regime: the worker's
// own incumbent (competitive / inner / hybrid phase 1) or the shared best
// snapshot (cooperative / hybrid phase 2).
inline CentroidSet step_init(RunContext& ctx, const WorkerState& w, bool cooperative) {
    if (cooperative) {
        if (auto snap = ctx.shared.snapshot()) return std::move(snap->centroids);
        return CentroidSet::all_degenerate(ctx.cfg.k, ctx.X.cols);
    }
    return w.incumbent;
}

// Free-running schedule for wall-clock budgets: workers loop until the time
// limit (or sample cap), publishing accepted cooperative-phase incumbents
// immediately.
inline void run_wall_clock(RunContext& ctx, std::vector<WorkerState>& workers,
                           std::vector<RngStream>& streams) {
    const EngineConfig& cfg = ctx.cfg;
    auto body = [&](std::size_t wi) {
        WorkerState& w = workers[wi];
        RngStream& rng = streams[wi];
        bool entered_coop = false;
        for (;;) {
            const double elapsed = ctx.elapsed();
            if (elapsed >= cfg.time_limit) break;
            if (cfg.max_samples && w.samples_processed >= *cfg.max_samples) break;
            const bool coop = phase_cooperative(cfg.strategy, elapsed);
            if (coop && cfg.strategy.kind == StrategyKind::hybrid && !entered_coop) {
                entered_coop = true;
                if (std::isfinite(w.incumbent_objective))
                    ctx.shared.try_publish(w.worker_id, w.incumbent_objective, w.incumbent, elapsed);
            }
            const CentroidSet init = step_init(ctx, w, coop);
            const bool accepted =
                worker_step(w, rng, ctx.X, init, cfg, [&] { return ctx.elapsed(); }, &ctx.counter);
            if (accepted && coop)
                ctx.shared.try_publish(w.worker_id, w.incumbent_objective, w.incumbent,
                                       w.update_trace.back().timestamp);
        }
    };
    run_worker_threads(workers.size(), body);
}

// Lockstep schedule for max_samples budgets: every worker processes one
// sample per round, a barrier separates rounds, and publications are applied
// at the round boundary in worker-id order. Combined with the sample-count
// clock this makes multi-worker runs bit-reproducible.
inline void run_lockstep(RunContext& ctx, std::vector<WorkerState>& workers,
                         std::vector<RngStream>& streams) {
    const EngineConfig& cfg = ctx.cfg;
    const std::size_t rounds = *cfg.max_samples;
    const std::size_t W = workers.size();
    const bool hybrid = cfg.strategy.kind == StrategyKind::hybrid;
    const auto phase1_rounds = static_cast<std::size_t>(hybrid ? cfg.strategy.phase_t1 : 0.0);

    std::vector<std::uint8_t> accepted(W, 0);
    std::size_t round = 0;

    auto on_round_end = [&]() noexcept {
        ++round;
        const bool round_was_coop = phase_cooperative(cfg.strategy, static_cast<double>(round - 1));
        for (std::size_t wi = 0; wi < W; ++wi) {
            WorkerState& w = workers[wi];
            const bool carry_over = hybrid && round == phase1_rounds && std::isfinite(w.incumbent_objective);
            if ((accepted[wi] && round_was_coop) || carry_over)
                ctx.shared.try_publish(w.worker_id, w.incumbent_objective, w.incumbent,
                                       static_cast<double>(round));
            accepted[wi] = 0;
        }
    };

    auto body = [&](auto& sync, std::size_t wi) {
        WorkerState& w = workers[wi];
        RngStream& rng = streams[wi];
        std::exception_ptr err;
        for (std::size_t r = 0; r < rounds; ++r) {
            if (!err) {
                try {
                    const bool coop = phase_cooperative(cfg.strategy, static_cast<double>(w.samples_processed));
                    const CentroidSet init = step_init(ctx, w, coop);
                    const double timestamp = static_cast<double>(w.samples_processed + 1);
                    accepted[wi] = worker_step(w, rng, ctx.X, init, cfg, [=] { return timestamp; },
                                               &ctx.counter)
                                       ? 1
                                       : 0;
                } catch (...) {
                    err = std::current_exception();
                    accepted[wi] = 0;
                }
            }
            sync();  // a failed worker still arrives so peers never stall
        }
        if (err) std::rethrow_exception(err);
    };

    if (W == 1) {
        auto sync = [&] { on_round_end(); };
        body(sync, 0);
        return;
    }
    std::barrier bar(static_cast<std::ptrdiff_t>(W), on_round_end);
    auto sync = [&] { bar.arrive_and_wait(); };
    run_worker_threads(W, [&](std::size_t wi) { body(sync, wi); });
}

}  // namespace detail

// HPClust outer loop: W parallel workers stream random samples, keep their
// best (centroids, sample objective) incumbents, and interact according to
// the strategy; the lowest-objective incumbent wins and is finally evaluated
// on the full dataset.
inline ClusteringResult run(const Dataset& X, const EngineConfig& cfg_in) {
    EngineConfig cfg = cfg_in;
    if (cfg.strategy.kind == StrategyKind::inner) cfg.n_workers = 1;
    cfg.validate(X.rows);

    detail::RunContext ctx{X, cfg, {}, {}, std::chrono::steady_clock::now()};

    std::vector<WorkerState> workers(cfg.n_workers);
    std::vector<RngStream> streams;
    streams.reserve(cfg.n_workers);
    for (std::size_t wi = 0; wi < cfg.n_workers; ++wi) {
        workers[wi].worker_id = static_cast<int>(wi);
        workers[wi].incumbent = CentroidSet::all_degenerate(cfg.k, X.cols);
        streams.push_back(RngStream::derive(cfg.master_seed, /*domain=*/1, wi));
    }

    if (cfg.deterministic_mode())
        detail::run_lockstep(ctx, workers, streams);
    else
        detail::run_wall_clock(ctx, workers, streams);

    auto [best_id, best_centroids] = select_best(workers);

    ClusteringResult result;
    result.centroids = *best_centroids;
    result.best_worker = best_id;
    result.best_sample_objective = workers[static_cast<std::size_t>(best_id)].incumbent_objective;

    double min_last = std::numeric_limits<double>::infinity();
    for (const auto& w : workers)
        if (!w.update_trace.empty()) min_last = std::min(min_last, w.update_trace.back().timestamp);
    result.clustering_time = min_last;

    const WorkerState* first_finisher = &workers.front();
    for (const auto& w : workers)
        if (w.t_w < first_finisher->t_w) first_finisher = &w;
    result.clustering_time_first_finisher =
        first_finisher->update_trace.empty() ? 0.0 : first_finisher->update_trace.back().timestamp;

    if (cfg.compute_full_objective || cfg.compute_assignment) {
        const ParallelPolicy par = cfg.strategy.kind == StrategyKind::inner
                                       ? ParallelPolicy::threads(cfg.n_threads == 0 ? ThreadPool::default_threads()
                                                                                    : cfg.n_threads)
                                       : ParallelPolicy::sequential();
        auto [assignment, objective] = detail::assign_valid_subset(X, result.centroids, par, &ctx.counter);
        result.full_objective = objective;
        if (cfg.compute_assignment) result.assignment = std::move(assignment);
    }

    for (const auto& w : workers) result.total_samples += w.samples_processed;
    result.distance_evals = ctx.counter.value();
    result.wall_seconds = ctx.elapsed();
    result.publications = ctx.shared.publication_log();
    result.per_worker = std::move(workers);
    return result;
}

}  // namespace hpclust
