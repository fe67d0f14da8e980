#pragma once

#include <cstdint>
#include <cmath>
#include <limits>
#include <utility>

namespace svlp {

// Counter-based random streams built on the SplitMix64 finalizer.
// A stream is a (key, counter) pair; every draw is a pure function of
// (key, counter), so results do not depend on which worker evaluates
// them or in which order. Sub-streams are derived by hashing tags.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t derive_key(uint64_t key, uint64_t tag) {
    return splitmix64(splitmix64(key) ^ (tag * 0xD1B54A32D192ED03ull));
}

inline uint64_t rng_word(uint64_t key, uint64_t counter) {
    return splitmix64(key + counter * 0x9E3779B97F4A7C15ull);
}

// uniform on (0,1), never exactly 0 or 1
inline double rng_u01(uint64_t key, uint64_t counter) {
    return (static_cast<double>(rng_word(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller pair from two consecutive counters
inline std::pair<double, double> rng_normal_pair(uint64_t key, uint64_t counter) {
    const double u1 = rng_u01(key, 2 * counter);
    const double u2 = rng_u01(key, 2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

// Stateful view of a counter stream. Satisfies UniformRandomBitGenerator
// so it can drive std::gamma_distribution and friends.
class CounterRng {
  public:
    using result_type = uint64_t;
    explicit CounterRng(uint64_t key, uint64_t counter = 0) : key_(key), ctr_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }
    result_type operator()() { return rng_word(key_, ctr_++); }

    double u01() { return rng_u01(key_, ctr_++); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        auto [a, b] = rng_normal_pair(key_, ctr_);
        ctr_ += 1;
        spare_ = b;
        have_spare_ = true;
        return a;
    }

    uint64_t key() const { return key_; }
    void jump_to(uint64_t counter) {
        ctr_ = counter;
        have_spare_ = false;
    }

  private:
    uint64_t key_;
    uint64_t ctr_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// stream tags used throughout the artifact
namespace stream {
inline constexpr uint64_t market = 0x4d41524bull;    // "MARK"
inline constexpr uint64_t coeffs = 0x434f4546ull;    // "COEF"
inline constexpr uint64_t particle = 0x5054434cull;  // "PTCL"
inline constexpr uint64_t initial = 0x494e4954ull;   // "INIT"
inline constexpr uint64_t bridge = 0x42524447ull;    // "BRDG"
inline constexpr uint64_t paths = 0x50415448ull;     // "PATH"
}  // namespace stream

}  // namespace svlp
