// ibupre/rng.hpp -- deterministic randomness: ChaCha20 keystream over a
// 32-byte seed, with an explicit draw counter and forkable streams
#ifndef IBUPRE_RNG_HPP
#define IBUPRE_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "ibupre/errors.hpp"

namespace ibupre {

namespace detail {

inline void chacha_quarter(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c, std::uint32_t& d) {
    auto rotl = [](std::uint32_t x, int r) { return (x << r) | (x >> (32 - r)); };
    a += b; d ^= a; d = rotl(d, 16);
    c += d; b ^= c; b = rotl(b, 12);
    a += b; d ^= a; d = rotl(d, 8);
    c += d; b ^= c; b = rotl(b, 7);
}

inline void chacha20_block(const std::uint32_t key[8], std::uint64_t counter,
                           std::uint64_t stream, std::uint8_t out[64]) {
    std::uint32_t st[16];
    st[0] = 0x61707865u; st[1] = 0x3320646eu; st[2] = 0x79622d32u; st[3] = 0x6b206574u;
    for (int i = 0; i < 8; ++i) st[4 + i] = key[i];
    st[12] = std::uint32_t(counter);
    st[13] = std::uint32_t(counter >> 32);
    st[14] = std::uint32_t(stream);
    st[15] = std::uint32_t(stream >> 32);
    std::uint32_t x[16];
    std::memcpy(x, st, sizeof x);
    for (int round = 0; round < 10; ++round) {
        chacha_quarter(x[0], x[4], x[8], x[12]);
        chacha_quarter(x[1], x[5], x[9], x[13]);
        chacha_quarter(x[2], x[6], x[10], x[14]);
        chacha_quarter(x[3], x[7], x[11], x[15]);
        chacha_quarter(x[0], x[5], x[10], x[15]);
        chacha_quarter(x[1], x[6], x[11], x[12]);
        chacha_quarter(x[2], x[7], x[8], x[13]);
        chacha_quarter(x[3], x[4], x[9], x[14]);
    }
    for (int i = 0; i < 16; ++i) {
        std::uint32_t v = x[i] + st[i];
        out[4 * i + 0] = std::uint8_t(v);
        out[4 * i + 1] = std::uint8_t(v >> 8);
        out[4 * i + 2] = std::uint8_t(v >> 16);
        out[4 * i + 3] = std::uint8_t(v >> 24);
    }
}

} // namespace detail

// Single-owner deterministic generator. Identical (seed, stream, call
// sequence) reproduces identical outputs; fork() is the only sharing
// mechanism and yields an independent stream over the same seed.
class Rng {
  public:
    using Seed = std::array<std::uint8_t, 32>;

    explicit Rng(const Seed& seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
        for (int i = 0; i < 8; ++i) {
            key_[i] = std::uint32_t(seed_[4 * i]) | (std::uint32_t(seed_[4 * i + 1]) << 8) |
                      (std::uint32_t(seed_[4 * i + 2]) << 16) |
                      (std::uint32_t(seed_[4 * i + 3]) << 24);
        }
    }

    static Rng from_u64(std::uint64_t s, std::uint64_t stream = 0) {
        Seed seed{};
        for (int i = 0; i < 8; ++i) seed[i] = std::uint8_t(s >> (8 * i));
        return Rng(seed, stream);
    }

    const Seed& seed() const { return seed_; }
    std::uint64_t position() const { return drawn_; }

    Rng fork(std::uint64_t stream) const { return Rng(seed_, stream); }

    std::uint64_t next_u64() {
        if (buf_pos_ == 8) {
            detail::chacha20_block(key_, block_counter_++, stream_, reinterpret_cast<std::uint8_t*>(buf_));
            buf_pos_ = 0;
        }
        ++drawn_;
        std::uint64_t v;
        std::memcpy(&v, reinterpret_cast<std::uint8_t*>(buf_) + 8 * buf_pos_, 8);
        ++buf_pos_;
        return v;
    }

    // unbiased uniform draw in [0, bound)
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw Error("uniform_below: zero bound");
        std::uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            std::uint64_t v = next_u64();
            if (v >= threshold) return v % bound;
        }
    }

    // uniform in [0,1) with 53 bits
    double uniform_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller (pairs cached)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform_real(); } while (u1 <= 0.0);
        u2 = uniform_real();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return mag * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    Seed seed_{};
    std::uint32_t key_[8] = {};
    std::uint64_t stream_ = 0;
    std::uint64_t block_counter_ = 0;
    std::uint64_t buf_[8] = {};
    std::size_t buf_pos_ = 8;
    std::uint64_t drawn_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace ibupre

#endif
