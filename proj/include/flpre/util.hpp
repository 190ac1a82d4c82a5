#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace flpre {

/// SplitMix64 finalizer; the basis of all seed derivation in this project.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ splitmix64(v));
}

/// Deterministic random stream. All sampling used anywhere in the simulator
/// goes through this class so that results depend only on the seed, never on
/// platform-specific distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_open() { return 1.0 - uniform(); }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller.
    double normal();

    /// Gamma(alpha, 1) via Marsaglia-Tsang.
    double gamma(double alpha);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

// Stream tags. Every independent consumer of randomness owns a tag, so that
// streams never collide and results are independent of evaluation order.
namespace streams {
constexpr std::uint64_t kSelect = 1;
constexpr std::uint64_t kLocalTrain = 2;
constexpr std::uint64_t kServerPartition = 3;
constexpr std::uint64_t kServerRefine = 4;
constexpr std::uint64_t kInit = 5;
constexpr std::uint64_t kSynth = 6;
constexpr std::uint64_t kClassSplit = 7;
constexpr std::uint64_t kServerSplit = 8;
constexpr std::uint64_t kClientPartition = 9;
constexpr std::uint64_t kShardSplit = 10;
constexpr std::uint64_t kTask = 11;
constexpr std::uint64_t kDownstreamRun = 12;
constexpr std::uint64_t kPretrain = 13;
constexpr std::uint64_t kDownstream = 14;
constexpr std::uint64_t kCentralized = 15;
}  // namespace streams

/// Derives independent per-(tag, round, client) random streams from one master
/// seed. Derivation is a pure hash, so the stream a worker receives does not
/// depend on scheduling order.
struct RngPolicy {
    std::uint64_t master_seed = 0;

    std::uint64_t stream(std::uint64_t a) const { return hash_combine(master_seed, a); }
    std::uint64_t stream(std::uint64_t a, std::uint64_t b) const {
        return hash_combine(stream(a), b);
    }
    std::uint64_t stream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return hash_combine(stream(a, b), c);
    }

    Rng rng(std::uint64_t a) const { return Rng(stream(a)); }
    Rng rng(std::uint64_t a, std::uint64_t b) const { return Rng(stream(a, b)); }
    Rng rng(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return Rng(stream(a, b, c));
    }
};

/// Worker-thread cap for parallel_for. 1 means fully serial.
int worker_threads();
void set_worker_threads(int n);

/// Runs fn(0..n-1). With more than one worker thread the index range is split
/// into contiguous blocks, one thread each; nested calls degrade to serial.
/// Callers must write results into disjoint pre-sized slots so the outcome is
/// identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace flpre
