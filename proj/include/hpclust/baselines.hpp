#pragma once

#include <chrono>
#include <cstddef>
#include <vector>

#include "hpclust/engine.hpp"

namespace hpclust {

// k distinct row indices of X, uniform without replacement, copied out as
// centroids. Duplicate row values may yield coincident centers; those empty
// out during Lloyd and come back flagged degenerate.
inline CentroidSet forgy_init(const Dataset& X, std::size_t k, RngStream& rng) {
    require(k >= 1 && k <= X.rows, "forgy_init: k must be in [1, m]");
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    CentroidSet C(k, X.cols);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + rng.uniform_index(X.rows - j);
        std::swap(idx[j], idx[pick]);
        auto src = X.row(idx[j]);
        std::copy(src.begin(), src.end(), C.center(j).begin());
    }
    return C;
}

// Forgy K-means baseline: uniformly seeded Lloyd on the full dataset,
// followed by the full assignment.
inline ClusteringResult forgy_kmeans(const Dataset& X, std::size_t k, const LloydConfig& cfg,
                                     RngStream& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    DistCounter counter;
    CentroidSet init = forgy_init(X, k, rng);
    LloydOutcome out = kmeans(X, init, cfg, &counter);

    ClusteringResult result;
    result.centroids = std::move(out.centroids);
    result.full_objective = out.objective;  // Lloyd's closing pass is the full assignment
    result.assignment = std::move(out.assignment);
    result.distance_evals = counter.value();
    result.total_samples = 1;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.clustering_time = result.wall_seconds;
    result.clustering_time_first_finisher = result.wall_seconds;
    return result;
}

struct PbkConfig {
    std::size_t segment_size = 0;  // p
    LloydConfig inner_lloyd;
    std::size_t n_threads = 0;  // fork-join width over segments; 0 = hardware
};

// Parallel batch baseline: shuffle, split into ceil(m/p) segments, K-means
// each segment, pool the surviving segment centroids into a repository, run
// K-means on the repository, and assign the full dataset to the result.
inline ClusteringResult pbk_bdc(const Dataset& X, std::size_t k, const PbkConfig& cfg, RngStream& rng) {
    const std::size_t m = X.rows;
    const std::size_t n = X.cols;
    const std::size_t p = cfg.segment_size;
    require(p >= 1 && p <= m, "pbk_bdc: segment size must be in [1, m]");
    require(k >= 1 && k <= p, "pbk_bdc: k must be in [1, p]");

    const auto t0 = std::chrono::steady_clock::now();
    DistCounter counter;

    // Seeded shuffle, then contiguous split; segment streams are derived up
    // front so concurrent segment runs stay reproducible.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t j = i + rng.uniform_index(m - i);
        std::swap(order[i], order[j]);
    }
    const std::size_t n_segments = (m + p - 1) / p;
    std::vector<std::uint64_t> segment_seeds(n_segments);
    for (auto& s : segment_seeds) s = rng.next_u64();

    std::vector<std::vector<double>> segment_centers(n_segments);
    auto cluster_segment = [&](std::size_t seg) {
        const std::size_t begin = seg * p;
        const std::size_t end = std::min(begin + p, m);
        Dataset S(end - begin, n);
        for (std::size_t i = begin; i < end; ++i) {
            auto src = X.row(order[i]);
            std::copy(src.begin(), src.end(), S.row(i - begin).begin());
        }
        RngStream seg_rng(segment_seeds[seg]);
        const std::size_t seg_k = std::min(k, S.rows);
        CentroidSet init = forgy_init(S, seg_k, seg_rng);
        LloydConfig seg_cfg = cfg.inner_lloyd;
        seg_cfg.parallel_rows = false;  // segments are the parallel axis; no nesting on the pool
        LloydOutcome out = kmeans(S, init, seg_cfg, &counter);
        auto& kept = segment_centers[seg];
        for (std::size_t j = 0; j < out.centroids.k; ++j) {
            if (out.centroids.degenerate[j]) continue;  // drop degenerates before pooling
            auto c = out.centroids.center(j);
            kept.insert(kept.end(), c.begin(), c.end());
        }
    };
    const std::size_t width =
        std::min<std::size_t>(n_segments, cfg.n_threads == 0 ? ThreadPool::default_threads() : cfg.n_threads);
    if (width <= 1 || n_segments == 1) {
        for (std::size_t seg = 0; seg < n_segments; ++seg) cluster_segment(seg);
    } else {
        ThreadPool::global().run_chunks(width, [&](std::size_t c) {
            for (std::size_t seg = c; seg < n_segments; seg += width) cluster_segment(seg);
        });
    }

    std::size_t pool_rows = 0;
    for (const auto& sc : segment_centers) pool_rows += sc.size() / n;
    require(pool_rows >= 1, "pbk_bdc: empty centroid repository");
    Dataset repository(pool_rows, n);
    std::size_t at = 0;
    for (const auto& sc : segment_centers) {
        std::copy(sc.begin(), sc.end(), repository.values.begin() + static_cast<std::ptrdiff_t>(at));
        at += sc.size();
    }

    const std::size_t final_k = std::min(k, repository.rows);
    CentroidSet final_init = forgy_init(repository, final_k, rng);
    LloydOutcome final_out = kmeans(repository, final_init, cfg.inner_lloyd, &counter);

    CentroidSet C_final(k, n);
    for (std::size_t j = 0; j < k; ++j) {
        if (j < final_out.centroids.k && !final_out.centroids.degenerate[j]) {
            auto src = final_out.centroids.center(j);
            std::copy(src.begin(), src.end(), C_final.center(j).begin());
        } else {
            C_final.degenerate[j] = 1;
        }
    }

    ClusteringResult result;
    auto [assignment, objective] = detail::assign_valid_subset(X, C_final, ParallelPolicy::sequential(), &counter);
    result.centroids = std::move(C_final);
    result.full_objective = objective;
    result.assignment = std::move(assignment);
    result.total_samples = n_segments;
    result.distance_evals = counter.value();
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.clustering_time = result.wall_seconds;
    result.clustering_time_first_finisher = result.wall_seconds;
    return result;
}

// Repository row count for a given configuration; exposed for the pooling
// size invariant (k * segments minus degenerate drops).
inline std::size_t pbk_expected_pool_rows(std::size_t m, std::size_t p, std::size_t k,
                                          std::size_t degenerate_drops) {
    const std::size_t n_segments = (m + p - 1) / p;
    std::size_t total = 0;
    for (std::size_t seg = 0; seg < n_segments; ++seg) {
        const std::size_t rows = std::min(p, m - seg * p);
        total += std::min(k, rows);
    }
    return total - degenerate_drops;
}

}  // namespace hpclust
