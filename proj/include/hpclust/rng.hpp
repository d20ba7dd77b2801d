#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace hpclust {

// Seed scrambler for deriving independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic pseudorandom stream.
//
// std::mt19937_64 output is pinned by the standard, but the standard
// distributions are not; every sampling routine here is hand-rolled so that a
// fixed seed yields the same draws on any compiler. Streams derived from the
// same (master, domain, index) triple are identical; changing any component
// decorrelates the stream.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    static RngStream derive(std::uint64_t master, std::uint64_t domain, std::uint64_t index) {
        std::uint64_t s = splitmix64(master ^ splitmix64(domain ^ splitmix64(index)));
        return RngStream(s);
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double next_unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), unbiased via rejection.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        const std::uint64_t bound = n;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Standard normal via Marsaglia's polar method; one spare is cached so the
    // draw sequence is a pure function of the stream state.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Index drawn with probability proportional to the increments of a
    // nondecreasing cumulative-weight array. Flat (zero-weight) entries are
    // never selected. cumulative.back() must be positive.
    std::size_t weighted_index(std::span<const double> cumulative) {
        const double total = cumulative.back();
        if (!(total > 0.0)) throw std::invalid_argument("weighted_index: total weight must be positive");
        const double u = next_unit() * total;
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (cumulative[mid] <= u) lo = mid + 1; else hi = mid;
        }
        return lo;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace hpclust
