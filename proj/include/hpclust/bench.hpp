#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hpclust/baselines.hpp"
#include "hpclust/engine.hpp"

namespace hpclust {

// epsilon = 100 * (f - f_star) / f_star; negative values mean the run beat
// the reference objective.
inline double relative_error(double f, double f_star) {
    require(f_star > 0.0, "relative_error: reference objective must be positive");
    return 100.0 * (f - f_star) / f_star;
}

// f_bar_s: the largest per-algorithm median of best sample objectives. Used
// as the common bar the convergence-time metric measures against.
inline double baseline_objective(const std::map<std::string, std::vector<double>>& best_sample_objectives) {
    require(!best_sample_objectives.empty(), "baseline_objective: no algorithms");
    double result = -std::numeric_limits<double>::infinity();
    for (const auto& [name, values] : best_sample_objectives) {
        require(!values.empty(), "baseline_objective: empty objective list");
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        result = std::max(result, median);
    }
    return result;
}

// Earliest trace timestamp, across all workers, whose accepted objective is
// at or below f_bar; absent when no worker ever got there.
inline std::optional<double> baseline_convergence_time(const std::vector<WorkerState>& workers, double f_bar) {
    std::optional<double> earliest;
    for (const auto& w : workers) {
        for (const auto& entry : w.update_trace) {
            if (entry.sample_objective <= f_bar) {
                if (!earliest || entry.timestamp < *earliest) earliest = entry.timestamp;
                break;  // trace objectives strictly decrease; first crossing is earliest
            }
        }
    }
    return earliest;
}

struct MetricSummary {
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::optional<double> stddev;  // sample (n-1); absent for a single value
};

// median/min/max and sample standard deviation of a nonempty value list;
// an even-length median is the mean of the two middle values.
inline MetricSummary summarize_values(std::vector<double> values) {
    require(!values.empty(), "summarize: empty value list");
    std::sort(values.begin(), values.end());
    MetricSummary s;
    const std::size_t n = values.size();
    s.min = values.front();
    s.max = values.back();
    s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    if (n >= 2) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(n);
        double acc = 0.0;
        for (double v : values) acc += (v - mean) * (v - mean);
        s.stddev = std::sqrt(acc / static_cast<double>(n - 1));
    }
    return s;
}

struct MetricRecord {
    std::string algorithm;
    std::size_t k = 0;
    int repetition = 0;
    double epsilon = 0.0;
    double t = 0.0;
    std::optional<double> t_bar;
    std::int64_t n_d = 0;
};

// One (dataset, k, algorithm) series of n_exec repetitions plus its
// summaries and run context.
struct RunSeries {
    std::string dataset;
    std::string algorithm;
    std::size_t k = 0;
    std::vector<MetricRecord> records;
    MetricSummary epsilon;
    std::optional<MetricSummary> t_bar;
    MetricSummary t;
    double n_d_median = 0.0;
    double n_s_median = 0.0;
    double sample_size = 0.0;
    double time_limit = 0.0;  // budget in the active clock unit
    double t1 = 0.0;
    double t2 = 0.0;
    bool succ = false;
};

// Summaries recomputed from the records of one series.
inline RunSeries summarize(std::vector<MetricRecord> records) {
    require(!records.empty(), "summarize: empty record list");
    RunSeries series;
    series.algorithm = records.front().algorithm;
    series.k = records.front().k;
    for (const auto& r : records)
        require(r.algorithm == series.algorithm && r.k == series.k,
                "summarize: records must share (algorithm, k)");
    std::vector<double> eps, ts, tbars, nds;
    for (const auto& r : records) {
        eps.push_back(r.epsilon);
        ts.push_back(r.t);
        nds.push_back(static_cast<double>(r.n_d));
        if (r.t_bar) tbars.push_back(*r.t_bar);
    }
    series.epsilon = summarize_values(eps);
    series.t = summarize_values(ts);
    if (!tbars.empty()) series.t_bar = summarize_values(tbars);
    series.n_d_median = summarize_values(nds).median;
    series.records = std::move(records);
    return series;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian-blob generator

struct BlobSpec {
    std::size_t num_points = 2187;  // blob points; noise rows come on top
    std::size_t features = 10;
    std::size_t num_blobs = 10;
    double center_min = -40.0;
    double center_max = 40.0;
    double std_min = 0.0;
    double std_max = 10.0;
    std::size_t noise_points = 500;
    double noise_min = -50.0;
    double noise_max = 50.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(num_points >= 1, "BlobSpec: num_points must be positive");
        require(features >= 1, "BlobSpec: features must be positive");
        require(num_blobs >= 1, "BlobSpec: num_blobs must be positive");
        require(center_min <= center_max, "BlobSpec: center box is inverted");
        require(std_min <= std_max && std_min >= 0.0, "BlobSpec: std range is invalid");
        require(noise_min <= noise_max, "BlobSpec: noise box is inverted");
    }
};

struct BlobData {
    Dataset points;                       // num_points + noise_points rows
    Dataset centers;                      // num_blobs x features generator centers
    std::vector<double> stds;             // per-blob standard deviation
    std::vector<std::int32_t> blob_of_row;  // generator blob per row; -1 for noise
};

// Blob centers uniform in the center box, per-blob isotropic Gaussian spread
// with stddev uniform in the std range, points split as evenly as possible
// across blobs, uniform noise rows appended last. Bit-reproducible per seed.
inline BlobData gen_blobs(const BlobSpec& spec) {
    spec.validate();
    RngStream rng(splitmix64(spec.seed));
    const std::size_t B = spec.num_blobs;
    const std::size_t n = spec.features;

    BlobData data;
    data.centers = Dataset(B, n);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t d = 0; d < n; ++d)
            data.centers.row(b)[d] = rng.uniform(spec.center_min, spec.center_max);
    data.stds.resize(B);
    for (std::size_t b = 0; b < B; ++b) data.stds[b] = rng.uniform(spec.std_min, spec.std_max);

    const std::size_t total = spec.num_points + spec.noise_points;
    data.points = Dataset(total, n);
    data.blob_of_row.assign(total, -1);
    std::size_t row = 0;
    const std::size_t base = spec.num_points / B;
    const std::size_t extra = spec.num_points % B;
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t count = base + (b < extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i, ++row) {
            auto dst = data.points.row(row);
            auto c = data.centers.row(b);
            for (std::size_t d = 0; d < n; ++d) dst[d] = c[d] + data.stds[b] * rng.normal();
            data.blob_of_row[row] = static_cast<std::int32_t>(b);
        }
    }
    for (std::size_t i = 0; i < spec.noise_points; ++i, ++row) {
        auto dst = data.points.row(row);
        for (std::size_t d = 0; d < n; ++d) dst[d] = rng.uniform(spec.noise_min, spec.noise_max);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Exact MSSC oracle

struct InstanceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Number of set partitions of m elements into at most k nonempty groups,
// saturating at cap.
inline std::uint64_t partition_state_count(std::size_t m, std::size_t k, std::uint64_t cap) {
    // Stirling numbers of the second kind, row by row, saturating addition.
    std::vector<std::uint64_t> row(k + 1, 0);
    row[0] = 1;  // S(0,0)
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = std::min(i, k); j >= 1; --j) {
            const std::uint64_t grown = row[j] > cap / std::max<std::uint64_t>(j, 1) ? cap : row[j] * j;
            const std::uint64_t sum = grown + row[j - 1];
            row[j] = std::min<std::uint64_t>(sum < grown ? cap : sum, cap);
        }
        row[0] = 0;
    }
    std::uint64_t total = 0;
    for (std::size_t j = 1; j <= k; ++j) {
        total += row[j];
        if (total >= cap || total < row[j]) return cap;
    }
    return total;
}

// Exact global MSSC minimizer by canonical enumeration of all partitions into
// at most k nonempty groups (restricted growth strings). Refuses instances
// beyond the feasibility guard. Unused groups come back flagged degenerate.
inline std::pair<CentroidSet, double> brute_force_mssc(const Dataset& X, std::size_t k) {
    const std::size_t m = X.rows;
    const std::size_t n = X.cols;
    require(k >= 1, "brute_force_mssc: k must be positive");
    constexpr std::uint64_t kStateCap = 10'000'000;
    const bool small_guard = m <= 14 && k <= 3;
    if (!small_guard && partition_state_count(m, k, kStateCap) >= kStateCap)
        throw InstanceTooLarge("brute_force_mssc: instance exceeds the enumeration guard");

    double total_sq = 0.0;
    for (double v : X.values) total_sq += v * v;

    std::vector<std::int32_t> labels(m, 0), best_labels(m, 0);
    std::vector<double> group_sums(k * n, 0.0);
    std::vector<std::size_t> group_counts(k, 0);
    double best_cost = std::numeric_limits<double>::infinity();

    // cost of a complete partition: total_sq - sum_g |sum_g|^2 / count_g
    auto leaf_cost = [&](std::size_t groups_used) {
        double reduction = 0.0;
        for (std::size_t g = 0; g < groups_used; ++g) {
            double sq = 0.0;
            const double* s = group_sums.data() + g * n;
            for (std::size_t d = 0; d < n; ++d) sq += s[d] * s[d];
            reduction += sq / static_cast<double>(group_counts[g]);
        }
        return total_sq - reduction;
    };

    auto recurse = [&](auto&& self, std::size_t i, std::size_t groups_used) -> void {
        if (i == m) {
            const double cost = leaf_cost(groups_used);
            if (cost < best_cost) {
                best_cost = cost;
                best_labels = labels;
            }
            return;
        }
        const std::size_t limit = std::min(groups_used + 1, k);
        auto point = X.row(i);
        for (std::size_t g = 0; g < limit; ++g) {
            labels[i] = static_cast<std::int32_t>(g);
            double* s = group_sums.data() + g * n;
            for (std::size_t d = 0; d < n; ++d) s[d] += point[d];
            ++group_counts[g];
            self(self, i + 1, std::max(groups_used, g + 1));
            --group_counts[g];
            for (std::size_t d = 0; d < n; ++d) s[d] -= point[d];
        }
    };
    recurse(recurse, 0, 0);

    Assignment assignment;
    assignment.labels = best_labels;
    assignment.counts.assign(k, 0);
    for (auto l : best_labels) ++assignment.counts[static_cast<std::size_t>(l)];
    CentroidSet C = update_centroids(X, assignment, k);
    return {std::move(C), best_cost};
}

// ---------------------------------------------------------------------------
// Campaign orchestration

inline const std::vector<std::string>& all_algorithms() {
    static const std::vector<std::string> names = {"inner",  "competitive", "cooperative",
                                                   "hybrid", "forgy",       "pbk"};
    return names;
}

inline bool is_hpclust_algorithm(const std::string& name) {
    return name == "inner" || name == "competitive" || name == "cooperative" || name == "hybrid";
}

inline StrategyKind strategy_from_name(const std::string& name) {
    if (name == "inner") return StrategyKind::inner;
    if (name == "competitive") return StrategyKind::competitive;
    if (name == "cooperative") return StrategyKind::cooperative;
    if (name == "hybrid") return StrategyKind::hybrid;
    throw std::invalid_argument("unknown strategy: " + name);
}

struct CampaignConfig {
    std::string dataset_name = "dataset";
    std::vector<std::size_t> k_list;
    std::vector<std::string> algorithms;  // names from all_algorithms()
    int n_exec = 10;
    std::uint64_t master_seed = 0;
    std::size_t sample_size = 0;  // 0 = min(5000, m - 1000) clamped to [1, m]
    std::size_t n_workers = 8;
    double time_limit = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> max_samples;
    std::optional<double> t1, t2;            // hybrid split; default = half/half
    std::optional<std::size_t> segment_size;  // pbk p; default = sample size
    std::optional<double> f_star;            // external reference optimum
    LloydConfig lloyd;
    SeedConfig seed_cfg;
    std::size_t n_threads = 0;

    void validate() const {
        require(!k_list.empty(), "CampaignConfig: k_list is empty");
        require(!algorithms.empty(), "CampaignConfig: algorithm list is empty");
        require(n_exec >= 1, "CampaignConfig: n_exec must be positive");
        for (const auto& a : algorithms)
            require(std::find(all_algorithms().begin(), all_algorithms().end(), a) != all_algorithms().end(),
                    ("CampaignConfig: unknown algorithm '" + a + "'").c_str());
        require(std::isfinite(time_limit) || max_samples.has_value(),
                "CampaignConfig: need a time limit or max_samples");
    }
};

inline std::size_t default_sample_size(std::size_t m) {
    if (m <= 2000) return m;
    return std::min<std::size_t>(5000, m - 1000);
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct RawRun {
    double full_objective = 0.0;
    double best_sample_objective = std::numeric_limits<double>::infinity();
    double t = 0.0;
    std::size_t n_s = 0;
    std::int64_t n_d = 0;
    std::vector<WorkerState> workers;  // empty for trace-less baselines
};

}  // namespace detail

// Full cross-product campaign: every (k, algorithm, repetition) triple runs
// once with a seed derived from (master_seed, algorithm, k, repetition), so
// record identity never depends on execution order or on which other
// algorithms were selected. epsilon uses the supplied f_star or the best full
// objective observed in the campaign for that k; t_bar measures each HPClust
// trace against the max-of-medians bar over the HPClust strategies.
inline std::vector<RunSeries> run_campaign(const Dataset& X, const CampaignConfig& cfg_in) {
    CampaignConfig cfg = cfg_in;
    cfg.validate();
    X.validate();
    const std::size_t m = X.rows;
    if (cfg.sample_size == 0) cfg.sample_size = default_sample_size(m);
    require(cfg.sample_size >= 1 && cfg.sample_size <= m, "CampaignConfig: sample size out of range");
    const std::size_t p = cfg.segment_size.value_or(cfg.sample_size);

    const double budget = std::isfinite(cfg.time_limit) ? cfg.time_limit
                                                        : static_cast<double>(cfg.max_samples.value());
    const double t1 = cfg.t1.value_or(budget / 2.0);
    const double t2 = cfg.t2.value_or(budget - t1);

    std::vector<RunSeries> all_series;
    for (std::size_t k : cfg.k_list) {
        std::map<std::string, std::vector<detail::RawRun>> runs;
        for (const auto& algo : cfg.algorithms) {
            auto& list = runs[algo];
            for (int rep = 0; rep < cfg.n_exec; ++rep) {
                const std::uint64_t seed =
                    splitmix64(cfg.master_seed ^ splitmix64(detail::fnv1a(algo) ^ (k * 0x9e37ULL) ^
                                                            static_cast<std::uint64_t>(rep)));
                detail::RawRun raw;
                if (is_hpclust_algorithm(algo)) {
                    EngineConfig ec;
                    ec.k = k;
                    ec.sample_size = cfg.sample_size;
                    ec.n_workers = cfg.n_workers;
                    ec.time_limit = cfg.time_limit;
                    ec.max_samples = cfg.max_samples;
                    ec.master_seed = seed;
                    ec.seed = cfg.seed_cfg;
                    ec.lloyd = cfg.lloyd;
                    ec.n_threads = cfg.n_threads;
                    ec.strategy.kind = strategy_from_name(algo);
                    if (ec.strategy.kind == StrategyKind::hybrid) ec.strategy = Strategy::hybrid(t1, t2);
                    ClusteringResult r = run(X, ec);
                    raw.full_objective = *r.full_objective;
                    raw.best_sample_objective = r.best_sample_objective;
                    raw.t = r.clustering_time;
                    raw.n_s = r.total_samples;
                    raw.n_d = r.distance_evals;
                    raw.workers = std::move(r.per_worker);
                } else if (algo == "forgy") {
                    RngStream rng(seed);
                    ClusteringResult r = forgy_kmeans(X, k, cfg.lloyd, rng);
                    raw.full_objective = *r.full_objective;
                    raw.t = r.clustering_time;
                    raw.n_s = r.total_samples;
                    raw.n_d = r.distance_evals;
                } else {  // pbk
                    RngStream rng(seed);
                    PbkConfig pc;
                    pc.segment_size = std::min(p, m);
                    pc.inner_lloyd = cfg.lloyd;
                    pc.n_threads = cfg.n_threads;
                    ClusteringResult r = pbk_bdc(X, std::min(k, pc.segment_size), pc, rng);
                    raw.full_objective = *r.full_objective;
                    raw.t = r.clustering_time;
                    raw.n_s = r.total_samples;
                    raw.n_d = r.distance_evals;
                }
                list.push_back(std::move(raw));
            }
        }

        double f_star;
        if (cfg.f_star) {
            f_star = *cfg.f_star;
        } else {
            f_star = std::numeric_limits<double>::infinity();
            for (const auto& [algo, list] : runs)
                for (const auto& r : list) f_star = std::min(f_star, r.full_objective);
        }

        std::map<std::string, std::vector<double>> trace_bests;
        for (const auto& [algo, list] : runs) {
            if (!is_hpclust_algorithm(algo)) continue;
            auto& v = trace_bests[algo];
            for (const auto& r : list) v.push_back(r.best_sample_objective);
        }
        std::optional<double> f_bar;
        if (!trace_bests.empty()) f_bar = baseline_objective(trace_bests);

        for (const auto& algo : cfg.algorithms) {
            const auto& list = runs[algo];
            std::vector<MetricRecord> records;
            records.reserve(list.size());
            std::vector<double> ns_values, s_objectives;
            for (std::size_t rep = 0; rep < list.size(); ++rep) {
                const auto& r = list[rep];
                MetricRecord rec;
                rec.algorithm = algo;
                rec.k = k;
                rec.repetition = static_cast<int>(rep);
                rec.epsilon = relative_error(r.full_objective, f_star);
                rec.t = r.t;
                rec.n_d = r.n_d;
                if (f_bar && !r.workers.empty()) rec.t_bar = baseline_convergence_time(r.workers, *f_bar);
                records.push_back(std::move(rec));
                ns_values.push_back(static_cast<double>(r.n_s));
            }
            RunSeries series = summarize(std::move(records));
            series.dataset = cfg.dataset_name;
            series.n_s_median = summarize_values(ns_values).median;
            series.sample_size = is_hpclust_algorithm(algo) ? static_cast<double>(cfg.sample_size)
                                 : algo == "pbk"            ? static_cast<double>(p)
                                                            : static_cast<double>(m);
            series.time_limit = budget;
            if (algo == "hybrid") {
                series.t1 = t1;
                series.t2 = t2;
            }
            all_series.push_back(std::move(series));
        }

        // succ: this algorithm's median full objective beats every other
        // algorithm's mean full objective (the published criterion compares a
        // median against means).
        const std::size_t first = all_series.size() - cfg.algorithms.size();
        for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
            const auto& mine = runs[cfg.algorithms[a]];
            std::vector<double> objs;
            for (const auto& r : mine) objs.push_back(r.full_objective);
            const double my_median = summarize_values(objs).median;
            bool succ = true;
            for (const auto& other : cfg.algorithms) {
                if (other == cfg.algorithms[a]) continue;
                const auto& theirs = runs[other];
                double mean = 0.0;
                for (const auto& r : theirs) mean += r.full_objective;
                mean /= static_cast<double>(theirs.size());
                if (!(my_median < mean)) {
                    succ = false;
                    break;
                }
            }
            all_series[first + a].succ = succ;
        }
    }
    return all_series;
}

}  // namespace hpclust
