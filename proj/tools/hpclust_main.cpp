// Command-line front end: cluster | bench | gen | oracle.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hpclust/hpclust.hpp"

namespace {

constexpr int kExitRuntime = 2;
constexpr int kExitTooLarge = 3;

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t chosen = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed=" << chosen << " (drawn from system entropy)\n";
    return chosen;
}

hpclust::Dataset load_input(const std::string& path, char delimiter, bool header, bool normalize) {
    hpclust::TableFormat fmt;
    fmt.delimiter = delimiter;
    fmt.has_header = header;
    hpclust::Dataset X = hpclust::load_dataset(path, fmt);
    X.validate();
    if (normalize) X = hpclust::minmax_normalize(X);
    return X;
}

hpclust::Dataset valid_centroid_rows(const hpclust::CentroidSet& C) {
    std::size_t valid = C.k - C.degenerate_count();
    hpclust::Dataset out(valid == 0 ? 1 : valid, C.cols);
    std::size_t at = 0;
    for (std::size_t j = 0; j < C.k; ++j) {
        if (C.degenerate[j]) continue;
        auto src = C.center(j);
        std::copy(src.begin(), src.end(), out.row(at++).begin());
    }
    out.rows = at;
    out.values.resize(at * C.cols);
    return out;
}

void save_assignment(const hpclust::Assignment& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    for (auto label : A.labels) out << label << '\n';
}

struct BlobFlags {
    std::optional<std::size_t> m;
    std::optional<int> i;
    std::size_t features = 10;
    std::size_t blobs = 10;
    double center_min = -40.0, center_max = 40.0;
    double std_min = 0.0, std_max = 10.0;
    std::size_t noise = 500;
    double noise_min = -50.0, noise_max = 50.0;

    void add_options(CLI::App* cmd, bool require_size) {
        auto* m_opt = cmd->add_option("--m", m, "Blob point count (noise rows are added on top)");
        auto* i_opt =
            cmd->add_option("--i", i, "Size exponent: m = 3^(i+7)")->check(CLI::Range(0, 15));
        if (require_size) {
            m_opt->excludes(i_opt);
        }
        cmd->add_option("--features", features, "Feature count")->capture_default_str();
        cmd->add_option("--blobs", blobs, "Number of Gaussian blobs")->capture_default_str();
        cmd->add_option("--center-min", center_min, "Blob center box lower bound")->capture_default_str();
        cmd->add_option("--center-max", center_max, "Blob center box upper bound")->capture_default_str();
        cmd->add_option("--std-min", std_min, "Blob stddev range lower bound")->capture_default_str();
        cmd->add_option("--std-max", std_max, "Blob stddev range upper bound")->capture_default_str();
        cmd->add_option("--noise", noise, "Uniform noise rows appended")->capture_default_str();
        cmd->add_option("--noise-min", noise_min, "Noise box lower bound")->capture_default_str();
        cmd->add_option("--noise-max", noise_max, "Noise box upper bound")->capture_default_str();
    }

    hpclust::BlobSpec to_spec(std::uint64_t seed) const {
        hpclust::BlobSpec spec;
        if (i)
            spec.num_points = static_cast<std::size_t>(std::llround(std::pow(3.0, *i + 7)));
        else if (m)
            spec.num_points = *m;
        else
            throw std::invalid_argument("blob size missing: pass --m or --i");
        spec.features = features;
        spec.num_blobs = blobs;
        spec.center_min = center_min;
        spec.center_max = center_max;
        spec.std_min = std_min;
        spec.std_max = std_max;
        spec.noise_points = noise;
        spec.noise_min = noise_min;
        spec.noise_max = noise_max;
        spec.seed = seed;
        return spec;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-based parallel minimum sum-of-squares clustering"};
    app.require_subcommand(1);

    // --- cluster ---------------------------------------------------------
    auto* cluster = app.add_subcommand("cluster", "Cluster a dataset with one algorithm");
    std::string in_path, centroids_out = "centroids.csv", assign_out;
    std::string strategy_name;
    std::size_t k = 0, workers = 8, threads = 0;
    std::optional<std::size_t> sample_size, max_samples, segment_size;
    std::optional<double> time_limit, t1, t2;
    std::optional<std::uint64_t> seed_flag;
    std::size_t max_iters = 300;
    double rel_tol = 1e-4;
    bool normalize = false, header = false;
    char delimiter = ',';
    cluster->add_option("--input", in_path, "Input table file")->required()->check(CLI::ExistingFile);
    cluster->add_option("--k", k, "Number of clusters")->required()->check(CLI::PositiveNumber);
    cluster
        ->add_option("--strategy", strategy_name,
                     "inner | competitive | cooperative | hybrid | forgy | pbk")
        ->required()
        ->check(CLI::IsMember({"inner", "competitive", "cooperative", "hybrid", "forgy", "pbk"}));
    cluster->add_option("--sample-size", sample_size,
                        "Rows per sample (default: min(5000, m-1000) for large m, else m)");
    cluster->add_option("--workers", workers, "Parallel workers")->capture_default_str();
    cluster->add_option("--threads", threads, "Inner-parallelism threads (0 = hardware)")
        ->envname("HPCLUST_THREADS")
        ->capture_default_str();
    cluster->add_option("--time-limit", time_limit, "Wall-clock budget in seconds (default 3.0 if no --max-samples)");
    cluster->add_option("--max-samples", max_samples, "Per-worker sample budget; sole bound = deterministic mode");
    cluster->add_option("--t1", t1, "Hybrid competitive-phase budget (default: half the total)");
    cluster->add_option("--t2", t2, "Hybrid cooperative-phase budget (default: the rest)");
    cluster->add_option("--seed", seed_flag, "Master seed (omit to draw from system entropy)")
        ->envname("HPCLUST_SEED");
    cluster->add_option("--segment-size", segment_size, "pbk segment size (default: sample size)");
    cluster->add_option("--max-iters", max_iters, "Local-search iteration cap")->capture_default_str();
    cluster->add_option("--rel-tol", rel_tol, "Local-search relative improvement threshold")
        ->capture_default_str();
    cluster->add_flag("--normalize", normalize, "Min-max normalize features before clustering");
    cluster->add_option("--delimiter", delimiter, "Input field delimiter")->capture_default_str();
    cluster->add_flag("--header", header, "Skip the first input line");
    cluster->add_option("--centroids-out", centroids_out, "Centroid output file")->capture_default_str();
    cluster->add_option("--assign-out", assign_out, "Write per-row cluster labels to this file");

    // --- bench -----------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "Run a benchmark campaign and emit a results table");
    std::string bench_input, bench_out;
    std::vector<std::size_t> k_list;
    std::vector<std::string> algorithms{"all"};
    int n_exec = 10;
    std::optional<double> fstar;
    BlobFlags bench_blobs;
    bench->add_option("--input", bench_input, "Input table file")->check(CLI::ExistingFile);
    bench_blobs.add_options(bench, false);
    bench->add_option("--k-list", k_list, "Cluster counts, comma separated")
        ->required()
        ->delimiter(',');
    bench->add_option("--algorithms", algorithms,
                      "Algorithms, comma separated (subset of "
                      "inner,competitive,cooperative,hybrid,forgy,pbk) or 'all'")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--n-exec", n_exec, "Repetitions per (k, algorithm)")->capture_default_str();
    bench->add_option("--seed", seed_flag, "Master seed (omit to draw from system entropy)")
        ->envname("HPCLUST_SEED");
    bench->add_option("--out", bench_out, "Results file (records; summary goes to *_summary)")->required();
    bench->add_option("--sample-size", sample_size, "Rows per sample");
    bench->add_option("--workers", workers, "Parallel workers")->capture_default_str();
    bench->add_option("--threads", threads, "Inner-parallelism threads")->envname("HPCLUST_THREADS");
    bench->add_option("--time-limit", time_limit, "Wall-clock budget in seconds (default 3.0)");
    bench->add_option("--max-samples", max_samples, "Per-worker sample budget");
    bench->add_option("--t1", t1, "Hybrid competitive-phase budget");
    bench->add_option("--t2", t2, "Hybrid cooperative-phase budget");
    bench->add_option("--segment-size", segment_size, "pbk segment size");
    bench->add_option("--fstar", fstar, "External reference optimum (default: campaign best)");
    bench->add_option("--max-iters", max_iters, "Local-search iteration cap")->capture_default_str();
    bench->add_option("--rel-tol", rel_tol, "Local-search relative improvement threshold")
        ->capture_default_str();
    bench->add_flag("--normalize", normalize, "Min-max normalize features before clustering");
    bench->add_option("--delimiter", delimiter, "Input field delimiter")->capture_default_str();
    bench->add_flag("--header", header, "Skip the first input line");

    // --- gen -------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic Gaussian-blob dataset");
    std::string gen_out, centers_out;
    BlobFlags gen_blobs_flags;
    gen_blobs_flags.add_options(gen, true);
    gen->add_option("--seed", seed_flag, "Generator seed (omit to draw from system entropy)")
        ->envname("HPCLUST_SEED");
    gen->add_option("--out", gen_out, "Dataset output file")->required();
    gen->add_option("--centers-out", centers_out, "Ground-truth blob centers output file");

    // --- oracle ----------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "Exact global optimum for tiny instances");
    std::string oracle_input;
    std::size_t oracle_k = 0;
    oracle->add_option("--input", oracle_input, "Input table file")->required()->check(CLI::ExistingFile);
    oracle->add_option("--k", oracle_k, "Number of clusters")->required()->check(CLI::PositiveNumber);
    oracle->add_option("--delimiter", delimiter, "Input field delimiter")->capture_default_str();
    oracle->add_flag("--header", header, "Skip the first input line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (cluster->parsed()) {
            hpclust::Dataset X = load_input(in_path, delimiter, header, normalize);
            const std::uint64_t seed = resolve_seed(seed_flag);
            const std::size_t s = sample_size.value_or(hpclust::default_sample_size(X.rows));
            hpclust::LloydConfig lloyd;
            lloyd.max_iters = max_iters;
            lloyd.rel_tol = rel_tol;

            hpclust::CentroidSet centroids;
            std::optional<hpclust::Assignment> assignment;
            double objective = 0.0, t = 0.0;
            std::int64_t n_d = 0;
            std::string samples_str;

            if (strategy_name == "forgy" || strategy_name == "pbk") {
                hpclust::RngStream rng(seed);
                hpclust::ClusteringResult r;
                if (strategy_name == "forgy") {
                    r = hpclust::forgy_kmeans(X, k, lloyd, rng);
                } else {
                    hpclust::PbkConfig pc;
                    pc.segment_size = segment_size.value_or(std::min(s, X.rows));
                    pc.inner_lloyd = lloyd;
                    pc.n_threads = threads;
                    r = hpclust::pbk_bdc(X, k, pc, rng);
                }
                centroids = std::move(r.centroids);
                assignment = std::move(r.assignment);
                objective = *r.full_objective;
                t = r.clustering_time;
                n_d = r.distance_evals;
                samples_str = std::to_string(r.total_samples);
            } else {
                hpclust::EngineConfig ec;
                ec.k = k;
                ec.sample_size = s;
                ec.n_workers = workers;
                ec.n_threads = threads;
                ec.master_seed = seed;
                ec.lloyd = lloyd;
                ec.compute_assignment = !assign_out.empty();
                if (time_limit) ec.time_limit = *time_limit;
                ec.max_samples = max_samples;
                if (!time_limit && !max_samples) ec.time_limit = 3.0;
                ec.strategy.kind = hpclust::strategy_from_name(strategy_name);
                if (ec.strategy.kind == hpclust::StrategyKind::hybrid) {
                    const double budget = ec.deterministic_mode()
                                              ? static_cast<double>(*ec.max_samples)
                                              : ec.time_limit;
                    const double p1 = t1.value_or(budget / 2.0);
                    const double p2 = t2.value_or(budget - p1);
                    ec.strategy = hpclust::Strategy::hybrid(p1, p2);
                }
                hpclust::ClusteringResult r = hpclust::run(X, ec);
                centroids = std::move(r.centroids);
                if (r.assignment) assignment = std::move(r.assignment);
                objective = *r.full_objective;
                t = r.clustering_time;
                n_d = r.distance_evals;
                samples_str = "[";
                for (std::size_t wi = 0; wi < r.per_worker.size(); ++wi) {
                    if (wi) samples_str += ",";
                    samples_str += std::to_string(r.per_worker[wi].samples_processed);
                }
                samples_str += "]";
            }

            hpclust::save_dataset(valid_centroid_rows(centroids), centroids_out);
            if (!assign_out.empty() && assignment) save_assignment(*assignment, assign_out);
            std::cout << "objective=" << hpclust::format_double(objective) << " t="
                      << hpclust::format_double(t) << " n_d=" << n_d << " samples=" << samples_str
                      << '\n';
            return 0;
        }

        if (bench->parsed()) {
            const std::uint64_t seed = resolve_seed(seed_flag);
            hpclust::Dataset X;
            std::string dataset_name;
            if (!bench_input.empty()) {
                X = load_input(bench_input, delimiter, header, normalize);
                dataset_name = bench_input;
            } else {
                hpclust::BlobSpec spec = bench_blobs.to_spec(seed);
                X = hpclust::gen_blobs(spec).points;
                dataset_name = "blobs_m" + std::to_string(spec.num_points);
                if (normalize) X = hpclust::minmax_normalize(X);
            }
            hpclust::CampaignConfig cc;
            cc.dataset_name = dataset_name;
            cc.k_list = k_list;
            cc.algorithms = (algorithms.size() == 1 && algorithms[0] == "all")
                                ? hpclust::all_algorithms()
                                : algorithms;
            cc.n_exec = n_exec;
            cc.master_seed = seed;
            if (sample_size) cc.sample_size = *sample_size;
            cc.n_workers = workers;
            cc.n_threads = threads;
            if (time_limit) cc.time_limit = *time_limit;
            cc.max_samples = max_samples;
            if (!time_limit && !max_samples) cc.time_limit = 3.0;
            cc.t1 = t1;
            cc.t2 = t2;
            cc.segment_size = segment_size;
            cc.f_star = fstar;
            cc.lloyd.max_iters = max_iters;
            cc.lloyd.rel_tol = rel_tol;
            const auto series = hpclust::run_campaign(X, cc);
            hpclust::save_results(series, bench_out);
            std::cout << "wrote " << bench_out << " and " << hpclust::summary_path(bench_out) << '\n';
            return 0;
        }

        if (gen->parsed()) {
            const std::uint64_t seed = resolve_seed(seed_flag);
            hpclust::BlobSpec spec = gen_blobs_flags.to_spec(seed);
            hpclust::BlobData data = hpclust::gen_blobs(spec);
            hpclust::save_dataset(data.points, gen_out);
            if (!centers_out.empty()) hpclust::save_dataset(data.centers, centers_out);
            std::cout << "wrote " << data.points.rows << " rows (" << spec.num_points << " blob + "
                      << spec.noise_points << " noise) to " << gen_out << '\n';
            return 0;
        }

        if (oracle->parsed()) {
            hpclust::Dataset X = load_input(oracle_input, delimiter, header, false);
            auto [C, objective] = hpclust::brute_force_mssc(X, oracle_k);
            std::cout << "objective=" << hpclust::format_double(objective) << '\n';
            for (std::size_t j = 0; j < C.k; ++j) {
                if (C.degenerate[j]) continue;
                auto c = C.center(j);
                for (std::size_t d = 0; d < c.size(); ++d)
                    std::cout << (d ? "," : "") << hpclust::format_double(c[d]);
                std::cout << '\n';
            }
            return 0;
        }
    } catch (const hpclust::InstanceTooLarge& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTooLarge;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
