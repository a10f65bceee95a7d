#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace enslab {

/// Counter-based 64-bit random stream.
///
/// The i-th raw output is `mix64(key + (i + 1) * kGolden)`, where `key` is
/// derived from `(seed, stream_id)` by two rounds of the same finalizer and
/// `mix64` is the SplitMix64 output function (constants 0xbf58476d1ce4e5b9 and
/// 0x94d049bb133111eb, golden increment 0x9e3779b97f4a7c15). Because the output
/// is a pure function of (key, counter), a stream can be copied, split and
/// replayed without shared state.
///
/// Satisfies UniformRandomBitGenerator, so the standard distributions accept it.
class RngStream {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

    /// Child stream keyed by this stream's identity and `child_id`. Does not
    /// advance this stream.
    [[nodiscard]] RngStream split(std::uint64_t child_id) const;

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double normal() { return normal_(*this); }
    bool bernoulli(double p) { return uniform() < p; }
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    static constexpr std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace enslab
