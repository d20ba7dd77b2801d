#pragma once

#include <cstddef>
#include <vector>

#include "hpclust/core.hpp"

namespace hpclust {

struct LloydConfig {
    std::size_t max_iters = 300;
    double rel_tol = 1e-4;      // stop when (f_prev - f_cur) / f_prev drops below this
    bool parallel_rows = false;
    std::size_t n_threads = 0;  // 0 = hardware concurrency

    ParallelPolicy policy() const {
        if (!parallel_rows) return ParallelPolicy::sequential();
        return ParallelPolicy::threads(n_threads == 0 ? ThreadPool::default_threads() : n_threads);
    }
};

enum class LloydStop { tolerance, max_iters, fixed_point };

inline const char* to_string(LloydStop s) {
    switch (s) {
        case LloydStop::tolerance: return "tolerance";
        case LloydStop::max_iters: return "max_iters";
        case LloydStop::fixed_point: return "fixed_point";
    }
    return "?";
}

struct LloydOutcome {
    CentroidSet centroids;
    Assignment assignment;          // of the input sample to `centroids`
    double objective = 0.0;         // f(centroids, sample)
    std::size_t iterations = 0;
    LloydStop converged_by = LloydStop::max_iters;
    std::vector<double> objective_history;  // one entry per evaluation pass, non-increasing
};

// Mean of the members of each cluster; clusters with no members keep the
// fallback center and are flagged degenerate.
inline CentroidSet update_centroids(const Dataset& S, const Assignment& A, std::size_t k,
                                    const CentroidSet* fallback = nullptr) {
    require(A.labels.size() == S.rows, "update_centroids: label/row mismatch");
    require(A.counts.size() == k, "update_centroids: counts size mismatch");
    CentroidSet C(k, S.cols);
    std::vector<double> sums(k * S.cols, 0.0);
    for (std::size_t i = 0; i < S.rows; ++i) {
        const auto j = static_cast<std::size_t>(A.labels[i]);
        require(j < k, "update_centroids: label out of range");
        auto r = S.row(i);
        double* s = sums.data() + j * S.cols;
        for (std::size_t d = 0; d < S.cols; ++d) s[d] += r[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
        auto c = C.center(j);
        if (A.counts[j] > 0) {
            const double inv = 1.0 / static_cast<double>(A.counts[j]);
            for (std::size_t d = 0; d < S.cols; ++d) c[d] = sums[j * S.cols + d] * inv;
        } else if (fallback) {
            auto f = fallback->center(j);
            std::copy(f.begin(), f.end(), c.begin());
            C.degenerate[j] = 1;
        } else {
            C.degenerate[j] = 1;
        }
    }
    return C;
}

namespace detail {

inline CentroidSet means_from_sums(const std::vector<double>& sums, const std::vector<std::int64_t>& counts,
                                   std::size_t k, std::size_t n, const CentroidSet& fallback) {
    CentroidSet C(k, n);
    for (std::size_t j = 0; j < k; ++j) {
        auto c = C.center(j);
        if (counts[j] > 0) {
            const double inv = 1.0 / static_cast<double>(counts[j]);
            for (std::size_t d = 0; d < n; ++d) c[d] = sums[j * n + d] * inv;
        } else {
            auto f = fallback.center(j);
            std::copy(f.begin(), f.end(), c.begin());
        }
    }
    return C;
}

}  // namespace detail

// Lloyd local search on a sample. Alternates nearest-centroid assignment and
// mean updates until a centroid fixed point, the relative-improvement
// threshold, or the iteration cap. Clusters left empty keep their previous
// center during the run and come back flagged degenerate if still empty at
// the end. The returned objective is measured on the returned centroids; on a
// tolerance/max_iters exit that takes one closing assignment pass (counted in
// n_d, not in `iterations`).
inline LloydOutcome kmeans(const Dataset& S, const CentroidSet& C_init, const LloydConfig& cfg,
                           DistCounter* counter = nullptr) {
    require(cfg.max_iters >= 1, "kmeans: max_iters must be positive");
    require(cfg.rel_tol > 0.0, "kmeans: rel_tol must be positive");
    require(!C_init.any_degenerate(), "kmeans: degenerate centroid in init");
    require(C_init.cols == S.cols, "kmeans: dimension mismatch");
    const std::size_t k = C_init.k;
    const ParallelPolicy par = cfg.policy();

    LloydOutcome out;
    CentroidSet C = C_init;
    double f_prev = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> empty_flags(k, 0);

    auto check_monotone = [&](double f) {
        if (!out.objective_history.empty()) {
            const double last = out.objective_history.back();
            if (f > last * (1.0 + 1e-12))
                throw std::logic_error("kmeans: objective increased between iterations");
        }
        out.objective_history.push_back(f);
    };

    while (out.iterations < cfg.max_iters) {
        ++out.iterations;
        auto pass = detail::assign_and_reduce(
            S, k, [&](std::size_t j) { return C.centers.data() + j * C.cols; }, par, counter);
        check_monotone(pass.cost);
        CentroidSet C_next = detail::means_from_sums(pass.cluster_sums, pass.assignment.counts, k, S.cols, C);
        for (std::size_t j = 0; j < k; ++j) empty_flags[j] = pass.assignment.counts[j] == 0 ? 1 : 0;

        if (C_next.centers == C.centers) {
            out.converged_by = LloydStop::fixed_point;
            out.objective = pass.cost;
            out.assignment = std::move(pass.assignment);
            out.centroids = std::move(C_next);
            out.centroids.degenerate = empty_flags;
            return out;
        }
        const double f_cur = pass.cost;
        C = std::move(C_next);
        if (std::isfinite(f_prev)) {
            const double improvement = f_prev > 0.0 ? (f_prev - f_cur) / f_prev : 0.0;
            if (improvement < cfg.rel_tol) {
                out.converged_by = LloydStop::tolerance;
                f_prev = f_cur;
                break;
            }
        }
        f_prev = f_cur;
        if (out.iterations == cfg.max_iters) out.converged_by = LloydStop::max_iters;
    }

    // Closing pass: evaluate the final centroids so the reported objective,
    // assignment, and degenerate flags all describe what is returned.
    auto final_pass = detail::assign_and_reduce(
        S, k, [&](std::size_t j) { return C.centers.data() + j * C.cols; }, par, counter);
    check_monotone(final_pass.cost);
    for (std::size_t j = 0; j < k; ++j)
        C.degenerate[j] = final_pass.assignment.counts[j] == 0 ? 1 : 0;
    out.objective = final_pass.cost;
    out.assignment = std::move(final_pass.assignment);
    out.centroids = std::move(C);
    return out;
}

}  // namespace hpclust
