#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace auginf {

// Counter-based stream built on Philox4x32-10. A stream is identified by a
// 128-bit id plus the number of 32-bit words drawn so far, so its state
// serializes to three integers and any position can be restored exactly.
// Child streams are derived by hashing a label (or index) into the id, which
// makes draws reproducible under parallelism: every consumer owns a stream
// named by what it is for.
class RngStream {
public:
    RngStream() : RngStream(0) {}

    explicit RngStream(std::uint64_t seed) {
        sid_lo_ = mix64(seed ^ 0x9e3779b97f4a7c15ull);
        sid_hi_ = mix64(sid_lo_ ^ 0xbf58476d1ce4e5b9ull);
        n_drawn_ = 0;
        block_index_ = ~std::uint64_t{0};
    }

    // Derive an independent child stream from a label.
    RngStream split(std::string_view label) const {
        std::uint64_t h = fnv1a(label);
        return derived(h);
    }

    // Derive an independent child stream from an index (chain id, epoch, cell).
    RngStream split_index(std::uint64_t index) const {
        return derived(mix64(index ^ 0x94d049bb133111ebull));
    }

    std::uint32_t next_u32() {
        std::uint64_t block = n_drawn_ / 4;
        unsigned lane = static_cast<unsigned>(n_drawn_ % 4);
        if (block != block_index_) {
            buffer_ = philox_block(block);
            block_index_ = block;
        }
        ++n_drawn_;
        return buffer_[lane];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller. Draws two uniforms per value and keeps
    // no spare, so the stream position alone determines every draw.
    double next_gaussian() {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Uniform on {0, ..., n-1} without modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t v = next_u64();
            if (v >= threshold) return v % n;
        }
    }

    // Exact stream position, for checkpointing.
    std::uint64_t stream_id_lo() const { return sid_lo_; }
    std::uint64_t stream_id_hi() const { return sid_hi_; }
    std::uint64_t words_drawn() const { return n_drawn_; }

    static RngStream restore(std::uint64_t sid_lo, std::uint64_t sid_hi, std::uint64_t words_drawn) {
        RngStream s(0);
        s.sid_lo_ = sid_lo;
        s.sid_hi_ = sid_hi;
        s.n_drawn_ = words_drawn;
        s.block_index_ = ~std::uint64_t{0};
        return s;
    }

    // Raw Philox4x32-10 keyed block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                      std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::array<std::uint32_t, 4> next;
            next[0] = hi1 ^ ctr[1] ^ key[0];
            next[1] = lo1;
            next[2] = hi0 ^ ctr[3] ^ key[1];
            next[3] = lo0;
            ctr = next;
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    std::uint64_t sid_lo_ = 0;
    std::uint64_t sid_hi_ = 0;
    std::uint64_t n_drawn_ = 0;
    std::uint64_t block_index_ = ~std::uint64_t{0};
    std::array<std::uint32_t, 4> buffer_{};

    RngStream derived(std::uint64_t h) const {
        RngStream child(0);
        child.sid_lo_ = mix64(sid_lo_ ^ h);
        child.sid_hi_ = mix64(sid_hi_ ^ mix64(h ^ 0xff51afd7ed558ccdull));
        child.n_drawn_ = 0;
        child.block_index_ = ~std::uint64_t{0};
        return child;
    }

    std::array<std::uint32_t, 4> philox_block(std::uint64_t block) const {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block),
            static_cast<std::uint32_t>(block >> 32),
            static_cast<std::uint32_t>(sid_hi_),
            static_cast<std::uint32_t>(sid_hi_ >> 32),
        };
        std::array<std::uint32_t, 2> key = {
            static_cast<std::uint32_t>(sid_lo_),
            static_cast<std::uint32_t>(sid_lo_ >> 32),
        };
        return philox4x32_10(ctr, key);
    }

    // splitmix64 finalizer
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }
};

}  // namespace auginf
