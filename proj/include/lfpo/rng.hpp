// Deterministic random number streams.
//
// All sampling in the project goes through Rng so that a run is a pure
// function of its seed. Substream seeds are derived with a splitmix64 hash
// of (base seed, tag, indices), which lets independent components (rollout
// k, work item j, ...) own their own stream regardless of evaluation order.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lfpo {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Stream tags used when deriving substreams from a run seed.
namespace stream {
inline constexpr std::uint64_t kInitParams = 1;
inline constexpr std::uint64_t kRollout = 2;
inline constexpr std::uint64_t kTimesteps = 3;
inline constexpr std::uint64_t kBlockShuffle = 4;
inline constexpr std::uint64_t kMask = 5;
inline constexpr std::uint64_t kEvalPrompts = 6;
inline constexpr std::uint64_t kPrompt = 7;
inline constexpr std::uint64_t kBaselineTimestep = 8;
}  // namespace stream

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n). Rejection sampling keeps the mapping
    // identical across platforms (std::uniform_int_distribution is not
    // reproducible between standard library implementations).
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_below(
                        static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double uniform_real(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn uniformly from {0, ..., n-1} (partial
    // Fisher-Yates). Order of the result is the draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                        std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<std::size_t> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + static_cast<std::size_t>(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace lfpo
