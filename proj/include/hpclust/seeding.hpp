#pragma once

#include <cstddef>
#include <vector>

#include "hpclust/core.hpp"
#include "hpclust/rng.hpp"

namespace hpclust {

struct SeedConfig {
    // Candidate rows drawn per new center; the cost-minimizing candidate wins.
    std::size_t candidates_per_center = 3;
};

namespace detail {

// min-distance refresh of d2 against one center, returning the partial cost
// sum; used both for the initial pass and for candidate evaluation.
inline double d2_min_update(const Dataset& S, std::span<const double> center,
                            std::vector<double>& d2, std::vector<double>& scratch,
                            const ParallelPolicy& par, DistCounter* counter) {
    const std::size_t m = S.rows;
    const std::size_t chunks = par.chunks_for(m);
    std::vector<double> partial(chunks, 0.0);
    auto work = [&](std::size_t c) {
        const RowRange r = chunk_range(m, chunks, c);
        double acc = 0.0;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const double d = squared_distance(S.row(i), center);
            const double best = std::min(d2[i], d);
            scratch[i] = best;
            acc += best;
        }
        partial[c] = acc;
    };
    if (chunks == 1) work(0); else ThreadPool::global().run_chunks(chunks, work);
    count_distances(counter, static_cast<std::int64_t>(m));
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

// Fills every degenerate slot of C, in slot order, with greedy D^2-sampled
// rows of S. Slots that cannot be filled (all rows coincide with already
// chosen centers) stay degenerate.
inline void seed_degenerate_slots(CentroidSet& C, const Dataset& S, const SeedConfig& cfg,
                                  RngStream& rng, const ParallelPolicy& par, DistCounter* counter) {
    const std::size_t m = S.rows;
    const std::size_t n = S.cols;
    require(m >= 1, "seeding: empty sample");
    require(C.cols == n, "seeding: dimension mismatch");
    require(cfg.candidates_per_center >= 1, "seeding: need at least one candidate");

    std::vector<std::size_t> pending;
    std::vector<double> d2(m, std::numeric_limits<double>::infinity());
    std::vector<double> scratch(m), best_scratch(m), cumulative(m);
    bool have_center = false;

    for (std::size_t j = 0; j < C.k; ++j) {
        if (C.degenerate[j]) {
            pending.push_back(j);
        } else {
            d2_min_update(S, C.center(j), d2, scratch, par, counter);
            d2.swap(scratch);
            have_center = true;
        }
    }
    if (pending.empty()) return;

    std::size_t next = 0;
    if (!have_center) {
        const std::size_t j = pending[next++];
        const std::size_t row = rng.uniform_index(m);
        std::copy(S.row(row).begin(), S.row(row).end(), C.center(j).begin());
        C.degenerate[j] = 0;
        d2_min_update(S, C.center(j), d2, scratch, par, counter);
        d2.swap(scratch);
    }

    for (; next < pending.size(); ++next) {
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            total += d2[i];
            cumulative[i] = total;
        }
        if (!(total > 0.0)) break;  // distinct rows exhausted; rest stay degenerate

        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t best_row = m;
        for (std::size_t c = 0; c < cfg.candidates_per_center; ++c) {
            const std::size_t row = rng.weighted_index(cumulative);
            const double cost = d2_min_update(S, S.row(row), d2, scratch, par, counter);
            if (cost < best_cost) {
                best_cost = cost;
                best_row = row;
                best_scratch.swap(scratch);
            }
        }
        const std::size_t j = pending[next];
        std::copy(S.row(best_row).begin(), S.row(best_row).end(), C.center(j).begin());
        C.degenerate[j] = 0;
        d2.swap(best_scratch);
    }
}

}  // namespace detail

// Greedy k-means++ seeding on S: the first center is a uniform row, each
// further center is the cost-minimizing one of candidates_per_center rows
// drawn proportional to squared distance from the chosen set. Surplus centers
// are flagged degenerate when S runs out of distinct rows.
inline CentroidSet kmeanspp_seed(const Dataset& S, std::size_t k, const SeedConfig& cfg,
                                 RngStream& rng,
                                 const ParallelPolicy& par = ParallelPolicy::sequential(),
                                 DistCounter* counter = nullptr) {
    require(k >= 1, "kmeanspp_seed: k must be positive");
    CentroidSet C = CentroidSet::all_degenerate(k, S.cols);
    detail::seed_degenerate_slots(C, S, cfg, rng, par, counter);
    return C;
}

// Replaces the degenerate centers of C by k-means++ draws on S measured
// against the surviving centers. Non-degenerate centers are untouched.
inline CentroidSet reinit_degenerate(const CentroidSet& C, const Dataset& S, const SeedConfig& cfg,
                                     RngStream& rng,
                                     const ParallelPolicy& par = ParallelPolicy::sequential(),
                                     DistCounter* counter = nullptr) {
    if (!C.any_degenerate()) return C;
    CentroidSet out = C;
    detail::seed_degenerate_slots(out, S, cfg, rng, par, counter);
    return out;
}

}  // namespace hpclust
