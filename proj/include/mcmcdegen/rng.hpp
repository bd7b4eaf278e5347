#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mcmcdegen {

/// Philox4x32-10 block function (Salmon et al., SC'11). Counter-based:
/// output depends only on (counter, key), so any draw can be recomputed
/// from its coordinates without replaying the stream.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// SplitMix64 finalizer; used only to hash stream coordinates into ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Combine a parent stream id with a list of integer tags.
constexpr std::uint64_t derive_stream_id(std::uint64_t parent,
                                         std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(parent ^ 0x6A09E667F3BCC908ull);
    for (auto t : tags) h = mix64(h ^ mix64(t + 0x3C6EF372FE94F82Bull));
    return h;
}

/// A reproducible random stream identified by (key, stream id). Draw i of a
/// stream is Philox(counter = (i, stream id), key) and never depends on how
/// other streams were consumed, so replications can run on any thread.
///
/// Satisfies UniformRandomBitGenerator. Streams are cheap values; do not
/// share one between threads, derive a child instead.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream() = default;
    RngStream(std::uint64_t key, std::uint64_t stream_id) : key_(key), stream_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (buffered_ == 0) refill();
        --buffered_;
        return buffer_[buffered_];
    }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Child stream for a tagged sub-task (replication, chain, step, ...).
    RngStream derive(std::initializer_list<std::uint64_t> tags) const noexcept {
        return RngStream(key_, derive_stream_id(stream_, tags));
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    /// Number of 128-bit blocks consumed so far.
    std::uint64_t blocks_used() const noexcept { return block_; }

private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        const Philox4x32::Key k{static_cast<std::uint32_t>(key_),
                                static_cast<std::uint32_t>(key_ >> 32)};
        const auto out = Philox4x32::apply(ctr, k);
        ++block_;
        // Stored so that the first call returns (out[1]:out[0]).
        buffer_[1] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[0] = (std::uint64_t{out[3]} << 32) | out[2];
        buffered_ = 2;
    }

    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

} // namespace mcmcdegen
