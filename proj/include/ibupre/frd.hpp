// ibupre/frd.hpp -- full-rank-difference encoding of identities: id in
// Z_q^n \ {0} maps to the multiplication-by-id(X) matrix in the field
// Z_q[X]/(f), so every H_id and every difference H_{id1} - H_{id2} of
// distinct identities is invertible.
#ifndef IBUPRE_FRD_HPP
#define IBUPRE_FRD_HPP

#include <cstdint>
#include <vector>

#include "ibupre/errors.hpp"
#include "ibupre/modmath.hpp"

namespace ibupre {

struct Identity {
    ModVec coeffs; // length n, entries in [0, q)

    bool is_zero() const {
        for (u64 c : coeffs)
            if (c != 0) return false;
        return true;
    }
    bool operator==(const Identity& o) const = default;
};

struct FrdContext {
    std::size_t n = 0;
    u64 q = 0;
    ModVec f; // monic irreducible, coefficients f[0..n] with f[n] = 1
};

namespace detail {

// polynomials over Z_q as coefficient vectors, degree = index of last nonzero

inline std::size_t pdeg(const ModVec& p) {
    std::size_t d = p.size();
    while (d > 0 && p[d - 1] == 0) --d;
    return d == 0 ? 0 : d - 1; // the zero polynomial reports degree 0
}

inline bool pis_zero(const ModVec& p) {
    for (u64 c : p)
        if (c) return false;
    return true;
}

// a mod f, f monic of degree n
inline ModVec pmod(ModVec a, const ModVec& f, u64 q) {
    const std::size_t n = f.size() - 1;
    while (a.size() > n) {
        u64 lead = a.back();
        std::size_t shift = a.size() - 1 - n;
        if (lead != 0)
            for (std::size_t i = 0; i <= n; ++i) {
                u64 s = mulmod_u64(lead, f[i], q);
                a[shift + i] = (a[shift + i] + q - s) % q;
            }
        a.pop_back();
    }
    a.resize(n, 0);
    return a;
}

inline ModVec pmulmod(const ModVec& a, const ModVec& b, const ModVec& f, u64 q) {
    ModVec c(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j)
            c[i + j] = (c[i + j] + u128(a[i]) * b[j]) % q;
    }
    return pmod(std::move(c), f, q);
}

// h^q mod f by square-and-multiply on the bits of q
inline ModVec ppow_q(const ModVec& h, const ModVec& f, u64 q) {
    ModVec result(f.size() - 1, 0);
    result[0] = 1;
    ModVec base = h;
    u64 e = q;
    while (e) {
        if (e & 1) result = pmulmod(result, base, f, q);
        base = pmulmod(base, base, f, q);
        e >>= 1;
    }
    return result;
}

inline ModVec pgcd(ModVec a, ModVec b, u64 q) {
    auto trim = [](ModVec& p) {
        while (!p.empty() && p.back() == 0) p.pop_back();
    };
    trim(a);
    trim(b);
    while (!b.empty()) {
        // a mod b with b made monic
        u64 inv = inv_mod_prime(b.back(), q);
        ModVec bm(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) bm[i] = mulmod_u64(b[i], inv, q);
        while (a.size() >= b.size() && !a.empty()) {
            u64 lead = a.back();
            std::size_t shift = a.size() - bm.size();
            if (lead != 0)
                for (std::size_t i = 0; i < bm.size(); ++i) {
                    u64 s = mulmod_u64(lead, bm[i], q);
                    a[shift + i] = (a[shift + i] + q - s) % q;
                }
            a.pop_back();
            while (!a.empty() && a.back() == 0) a.pop_back();
        }
        std::swap(a, b);
    }
    return a;
}

// f monic of degree n is irreducible over Z_q iff it has no irreducible
// factor of degree i <= n/2: gcd(X^{q^i} - X, f) = 1 for all such i
inline bool irreducible(const ModVec& f, u64 q) {
    const std::size_t n = f.size() - 1;
    if (n == 1) return true;
    ModVec h(n, 0);
    if (n > 1) h[1] = 1; // X
    ModVec x = h;
    for (std::size_t i = 1; i <= n / 2; ++i) {
        h = ppow_q(h, f, q); // X^{q^i} mod f
        ModVec d(n, 0);
        for (std::size_t j = 0; j < n; ++j) d[j] = (h[j] + q - x[j]) % q;
        ModVec g = pgcd(d, f, q);
        if (g.size() > 1) return false; // nontrivial common factor of degree <= n/2
    }
    return true;
}

} // namespace detail

namespace detail {

inline u64 splitmix64(u64& state) {
    u64 z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

// Deterministic context construction: the u64 seed picks a starting point in
// the lexicographic enumeration of non-leading coefficient vectors (base-q,
// constant coefficient fastest); the first irreducible candidate wins.
//
// A bounded lex scan can stall: from an all-low-coefficient start the first
// q candidates are the binomials X^n + c, and for 4 | n with q = 3 (mod 4)
// no binomial is irreducible at all. After a fixed prefix the scan therefore
// restarts from a seed-derived point with every coefficient filled in.
inline FrdContext frd_init(std::size_t n, u64 q, u64 seed) {
    if (n < 1) throw DimensionMismatch("frd_init: n >= 1");
    if (!detail::is_prime_u64(q)) throw CompositeModulus("frd_init: q must be prime");
    ModVec c(n, 0);
    u64 s = seed;
    for (std::size_t i = 0; i < n && s != 0; ++i) {
        c[i] = s % q;
        s /= q;
    }
    const std::size_t scan = 4096;
    u64 reseed_state = seed;
    for (std::size_t round = 0; round < 256; ++round) {
        for (std::size_t tries = 0; tries < scan; ++tries) {
            ModVec f(n + 1, 0);
            for (std::size_t i = 0; i < n; ++i) f[i] = c[i];
            f[n] = 1;
            if (detail::irreducible(f, q)) return FrdContext{n, q, std::move(f)};
            // little-endian increment with wraparound
            for (std::size_t i = 0; i < n; ++i) {
                c[i] = (c[i] + 1) % q;
                if (c[i] != 0) break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) c[i] = detail::splitmix64(reseed_state) % q;
    }
    throw Error("frd_init: no irreducible polynomial found");
}

// H_id: the matrix of multiplication by id(X) in Z_q[X]/(f); linear in id.
// The zero identity is accepted here (it yields the zero matrix) because
// differences are formed through this map; scheme-level calls reject it.
inline ModMatrix frd_encode(const FrdContext& ctx, const Identity& id) {
    if (id.coeffs.size() != ctx.n) throw DimensionMismatch("frd_encode: identity length");
    for (u64 v : id.coeffs)
        if (v >= ctx.q) throw Error("frd_encode: identity coefficient out of range");
    ModMatrix h(ctx.n, ctx.n, ctx.q);
    ModVec col = id.coeffs; // X^0 * id
    for (std::size_t j = 0;; ++j) {
        for (std::size_t r = 0; r < ctx.n; ++r) h.at(r, j) = col[r];
        if (j + 1 == ctx.n) break;
        // col <- X * col mod f
        ModVec next(ctx.n, 0);
        u64 lead = col[ctx.n - 1];
        for (std::size_t r = ctx.n - 1; r > 0; --r) next[r] = col[r - 1];
        next[0] = 0;
        if (lead != 0)
            for (std::size_t r = 0; r < ctx.n; ++r) {
                u64 s = detail::mulmod_u64(lead, ctx.f[r], ctx.q);
                next[r] = (next[r] + ctx.q - s) % ctx.q;
            }
        col = std::move(next);
    }
    return h;
}

inline ModMatrix frd_encode_diff(const FrdContext& ctx, const Identity& a, const Identity& b) {
    Identity d{ModVec(ctx.n)};
    for (std::size_t i = 0; i < ctx.n; ++i) d.coeffs[i] = (a.coeffs[i] + ctx.q - b.coeffs[i]) % ctx.q;
    return frd_encode(ctx, d);
}

} // namespace ibupre

#endif
