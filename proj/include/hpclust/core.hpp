#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpclust/parallel.hpp"

namespace hpclust {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Tally of squared-distance evaluations. Kernels add their exact evaluation
// counts in bulk; one counter is shared by all threads of a run.
struct DistCounter {
    std::atomic<std::int64_t> count{0};
    void add(std::int64_t n) { count.fetch_add(n, std::memory_order_relaxed); }
    std::int64_t value() const { return count.load(std::memory_order_relaxed); }
};

inline void count_distances(DistCounter* counter, std::int64_t n) {
    if (counter) counter->add(n);
}

// Dense row-major real matrix: m points by n features. Entries must be finite.
struct Dataset {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    Dataset() = default;
    Dataset(std::size_t m, std::size_t n) : values(m * n, 0.0), rows(m), cols(n) {}

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }

    void validate() const {
        require(rows >= 1 && cols >= 1, "Dataset: needs at least one row and one column");
        for (double v : values)
            require(std::isfinite(v), "Dataset: entries must be finite");
    }
};

inline Dataset dataset_from_rows(const std::vector<std::vector<double>>& rows_in) {
    require(!rows_in.empty(), "dataset_from_rows: empty input");
    Dataset d(rows_in.size(), rows_in[0].size());
    for (std::size_t i = 0; i < rows_in.size(); ++i) {
        require(rows_in[i].size() == d.cols, "dataset_from_rows: ragged rows");
        std::copy(rows_in[i].begin(), rows_in[i].end(), d.row(i).begin());
    }
    return d;
}

// k centroids plus per-centroid degenerate flags. A degenerate centroid holds
// no valid coordinates and must be reseeded before it is used in assignment.
struct CentroidSet {
    std::vector<double> centers;
    std::vector<std::uint8_t> degenerate;
    std::size_t k = 0;
    std::size_t cols = 0;

    CentroidSet() = default;
    CentroidSet(std::size_t k_, std::size_t n) : centers(k_ * n, 0.0), degenerate(k_, 0), k(k_), cols(n) {}

    static CentroidSet all_degenerate(std::size_t k, std::size_t n) {
        CentroidSet c(k, n);
        std::fill(c.degenerate.begin(), c.degenerate.end(), std::uint8_t{1});
        return c;
    }

    std::span<const double> center(std::size_t j) const { return {centers.data() + j * cols, cols}; }
    std::span<double> center(std::size_t j) { return {centers.data() + j * cols, cols}; }

    bool any_degenerate() const {
        return std::any_of(degenerate.begin(), degenerate.end(), [](std::uint8_t d) { return d != 0; });
    }
    std::size_t degenerate_count() const {
        return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
    }

    bool operator==(const CentroidSet& o) const {
        return k == o.k && cols == o.cols && centers == o.centers && degenerate == o.degenerate;
    }
};

// Cluster labels for every dataset row plus per-cluster member counts.
struct Assignment {
    std::vector<std::int32_t> labels;
    std::vector<std::int64_t> counts;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "squared_distance: dimension mismatch");
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return acc;
}

// Execution policy for the row-parallel kernels. n_chunks fixes the reduction
// partitioning, so results are reproducible for a given chunk count.
struct ParallelPolicy {
    bool enabled = false;
    std::size_t n_chunks = 1;

    static ParallelPolicy sequential() { return {false, 1}; }
    static ParallelPolicy threads(std::size_t n) { return {n > 1, std::max<std::size_t>(n, 1)}; }

    std::size_t chunks_for(std::size_t rows) const {
        if (!enabled || rows == 0) return 1;
        return std::min(n_chunks, rows);
    }
};

namespace detail {

// One pass over the rows of X: nearest centroid per row, member counts,
// per-cluster coordinate sums, and the total squared-distance cost.
// Partial results are produced per chunk and merged in chunk order, so labels
// are independent of the chunking and the merged sums differ from a
// sequential pass only by floating-point summation order.
struct AssignScratch {
    std::vector<std::int64_t> counts;
    std::vector<double> sums;
    double cost = 0.0;
};

template <typename CenterAt>
inline void assign_rows(const Dataset& X, std::size_t k, CenterAt center_at,
                        RowRange range, std::int32_t* labels, AssignScratch& out) {
    const std::size_t n = X.cols;
    for (std::size_t i = range.begin; i < range.end; ++i) {
        const double* x = X.values.data() + i * n;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double* c = center_at(j);
            double acc = 0.0;
            for (std::size_t d = 0; d < n; ++d) {
                const double diff = x[d] - c[d];
                acc += diff * diff;
            }
            if (acc < best) {
                best = acc;
                best_j = j;
            }
        }
        labels[i] = static_cast<std::int32_t>(best_j);
        out.counts[best_j] += 1;
        out.cost += best;
        double* sum = out.sums.data() + best_j * n;
        for (std::size_t d = 0; d < n; ++d) sum[d] += x[d];
    }
}

struct AssignResult {
    Assignment assignment;
    std::vector<double> cluster_sums;  // k x n, merged in chunk order
    double cost = 0.0;
};

template <typename CenterAt>
inline AssignResult assign_and_reduce(const Dataset& X, std::size_t k, CenterAt center_at,
                                      const ParallelPolicy& par, DistCounter* counter) {
    const std::size_t m = X.rows;
    const std::size_t n = X.cols;
    const std::size_t chunks = par.chunks_for(m);

    AssignResult res;
    res.assignment.labels.resize(m);
    std::vector<AssignScratch> partial(chunks);
    for (auto& p : partial) {
        p.counts.assign(k, 0);
        p.sums.assign(k * n, 0.0);
    }

    if (chunks == 1) {
        assign_rows(X, k, center_at, {0, m}, res.assignment.labels.data(), partial[0]);
    } else {
        ThreadPool::global().run_chunks(chunks, [&](std::size_t c) {
            assign_rows(X, k, center_at, chunk_range(m, chunks, c),
                        res.assignment.labels.data(), partial[c]);
        });
    }

    res.assignment.counts.assign(k, 0);
    res.cluster_sums.assign(k * n, 0.0);
    double cost = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        cost += partial[c].cost;
        for (std::size_t j = 0; j < k; ++j) res.assignment.counts[j] += partial[c].counts[j];
        for (std::size_t e = 0; e < k * n; ++e) res.cluster_sums[e] += partial[c].sums[e];
    }
    res.cost = cost;
    count_distances(counter, static_cast<std::int64_t>(m) * static_cast<std::int64_t>(k));
    return res;
}

}  // namespace detail

// Nearest-centroid assignment; ties go to the lowest centroid index.
inline Assignment assign_nearest(const Dataset& X, const CentroidSet& C,
                                 const ParallelPolicy& par = ParallelPolicy::sequential(),
                                 DistCounter* counter = nullptr) {
    require(C.k >= 1, "assign_nearest: need at least one centroid");
    require(C.cols == X.cols, "assign_nearest: dimension mismatch");
    require(!C.any_degenerate(), "assign_nearest: degenerate centroid present");
    auto res = detail::assign_and_reduce(
        X, C.k, [&](std::size_t j) { return C.centers.data() + j * C.cols; }, par, counter);
    return std::move(res.assignment);
}

// Total squared distance from every point to its nearest centroid.
inline double mssc_objective(const CentroidSet& C, const Dataset& X,
                             const ParallelPolicy& par = ParallelPolicy::sequential(),
                             DistCounter* counter = nullptr) {
    require(C.k >= 1, "mssc_objective: need at least one centroid");
    require(C.cols == X.cols, "mssc_objective: dimension mismatch");
    require(!C.any_degenerate(), "mssc_objective: degenerate centroid present");
    auto res = detail::assign_and_reduce(
        X, C.k, [&](std::size_t j) { return C.centers.data() + j * C.cols; }, par, counter);
    return res.cost;
}

// Per-feature rescale onto [0, 1]; constant features map to 0.
inline Dataset minmax_normalize(const Dataset& X) {
    require(X.rows >= 1, "minmax_normalize: empty dataset");
    const std::size_t n = X.cols;
    std::vector<double> lo(n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < X.rows; ++i) {
        auto r = X.row(i);
        for (std::size_t d = 0; d < n; ++d) {
            lo[d] = std::min(lo[d], r[d]);
            hi[d] = std::max(hi[d], r[d]);
        }
    }
    Dataset out(X.rows, n);
    for (std::size_t i = 0; i < X.rows; ++i) {
        auto src = X.row(i);
        auto dst = out.row(i);
        for (std::size_t d = 0; d < n; ++d) {
            const double span = hi[d] - lo[d];
            dst[d] = span > 0.0 ? (src[d] - lo[d]) / span : 0.0;
        }
    }
    return out;
}

}  // namespace hpclust
