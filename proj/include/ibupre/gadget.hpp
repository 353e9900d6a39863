// ibupre/gadget.hpp -- the gadget matrix G = I_n (x) (1,2,...,2^{k-1}), its
// inversion oracle (round-off against the short basis S of the kernel
// lattice), Gaussian sampling on gadget cosets (Klein / randomized
// nearest-plane over S), and the message codec on cosets of L(G^t)/2L(G^t).
#ifndef IBUPRE_GADGET_HPP
#define IBUPRE_GADGET_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ibupre/errors.hpp"
#include "ibupre/modmath.hpp"
#include "ibupre/rng.hpp"
#include "ibupre/sampler.hpp"

namespace ibupre {

using Bits = std::vector<std::uint8_t>; // entries 0/1

namespace detail {

inline i64 floordiv_i128(i128 a, i128 b) {
    i128 qt = a / b, rm = a % b;
    if (rm != 0 && ((rm < 0) != (b < 0))) --qt;
    return i64(qt);
}

// round-half-up of a/b for b > 0
inline i64 round_half_up(i128 a, i128 b) { return floordiv_i128(2 * a + b, 2 * b); }

} // namespace detail

struct GInversion {
    ModVec s; // length n, canonical mod q
    IntVec e; // length nk, exact
};

class Gadget {
  public:
    std::size_t n = 0, k = 0;
    u64 q = 0;
    ModVec g;     // (1, 2, 4, ..., 2^{k-1}), canonical mod q
    IntMatrix S;  // k x k short basis of the kernel lattice of g^t
    IntMatrix E1; // k x k basis of L(g^t): E1 = q * S^{-t}, exact integers

    // Gram-Schmidt data of S for the coset sampler
    std::vector<std::vector<double>> gs; // gs[i] = i-th orthogonalized column
    std::vector<double> gs_norm2;
    double gs_max_norm = 0;

    const IntMatrix& basis_S() const { return S; }
    const IntMatrix& basis_E_block() const { return E1; }
};

namespace detail {

// exact k x k inverse-times-q via arithmetic mod the Mersenne prime 2^61-1,
// verified against S^t E1 = q I afterwards
inline IntMatrix exact_qSinvT(const IntMatrix& S, u64 q) {
    const u64 M = 2305843009213693951ull; // 2^61 - 1
    const std::size_t k = S.rows;
    // local mod-M matrix inverse (invert_mod caps modulus at 2^32, M is larger)
    std::vector<u64> w(k * 2 * k, 0);
    auto at = [&](std::size_t r, std::size_t c) -> u64& { return w[r * 2 * k + c]; };
    auto mul = [&](u64 a, u64 b) { return u64(u128(a) * b % M); };
    auto inv = [&](u64 a) { return powmod_u64(a, M - 2, M); };
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) at(r, c) = umod(S.at(r, c), M);
        at(r, k + r) = 1;
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t piv = k;
        for (std::size_t r = c; r < k; ++r)
            if (at(r, c) != 0) { piv = r; break; }
        if (piv == k) throw Error("gadget basis not invertible");
        if (piv != c)
            for (std::size_t j = 0; j < 2 * k; ++j) std::swap(at(piv, j), at(c, j));
        u64 iv = inv(at(c, c));
        for (std::size_t j = 0; j < 2 * k; ++j) at(c, j) = mul(at(c, j), iv);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c || at(r, c) == 0) continue;
            u64 f = at(r, c);
            for (std::size_t j = 0; j < 2 * k; ++j) at(r, j) = (at(r, j) + M - mul(f, at(c, j))) % M;
        }
    }
    IntMatrix E1(k, k);
    u64 half = M / 2;
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            // E1 = q * S^{-t}: entry (r,c) = q * Sinv(c,r)
            u64 v = mul(q % M, at(c, k + r));
            E1.at(r, c) = v > half ? i64(v) - i64(M) : i64(v);
        }
    // verify S^t E1 = q I exactly
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) {
            i128 acc = 0;
            for (std::size_t t = 0; t < k; ++t) acc += i128(S.at(t, r)) * E1.at(t, c);
            i128 want = (r == c) ? i128(q) : 0;
            if (acc != want) throw Error("gadget: E1 = q S^-t verification failed");
        }
    return E1;
}

} // namespace detail

inline Gadget make_gadget(std::size_t n, u64 q) {
    if (n < 1) throw DimensionMismatch("make_gadget: n >= 1");
    if (q < 3 || q > (u64(1) << 31) || !detail::is_prime_u64(q))
        throw InvalidModulus("make_gadget: prime q in [3, 2^31] required");
    Gadget gad;
    gad.n = n;
    gad.q = q;
    std::size_t k = 0;
    while ((u64(1) << k) < q) ++k; // k = ceil(log2 q), q prime so q > 2^(k-1)
    gad.k = k;
    gad.g.resize(k);
    for (std::size_t j = 0; j < k; ++j) gad.g[j] = (u64(1) << j) % q;

    // S: columns (2,-1,0,...), (0,2,-1,...), ..., last column = binary digits of q
    gad.S = IntMatrix(k, k);
    for (std::size_t j = 0; j + 1 < k; ++j) {
        gad.S.at(j, j) = 2;
        gad.S.at(j + 1, j) = -1;
    }
    for (std::size_t i = 0; i < k; ++i) gad.S.at(i, k - 1) = i64((q >> i) & 1);

    gad.E1 = detail::exact_qSinvT(gad.S, q);

    // Gram-Schmidt of S (columns), doubles are plenty for k <= 32
    gad.gs.assign(k, std::vector<double>(k, 0.0));
    gad.gs_norm2.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> v(k);
        for (std::size_t r = 0; r < k; ++r) v[r] = double(gad.S.at(r, i));
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0;
            for (std::size_t r = 0; r < k; ++r) dot += double(gad.S.at(r, i)) * gad.gs[j][r];
            double mu = dot / gad.gs_norm2[j];
            for (std::size_t r = 0; r < k; ++r) v[r] -= mu * gad.gs[j][r];
        }
        double n2 = 0;
        for (double x : v) n2 += x * x;
        gad.gs[i] = std::move(v);
        gad.gs_norm2[i] = n2;
        gad.gs_max_norm = std::max(gad.gs_max_norm, std::sqrt(n2));
    }
    return gad;
}

// full gadget matrix G (n x nk) as a ModMatrix
inline ModMatrix gadget_matrix(const Gadget& gad) {
    ModMatrix G(gad.n, gad.n * gad.k, gad.q);
    for (std::size_t i = 0; i < gad.n; ++i)
        for (std::size_t j = 0; j < gad.k; ++j) G.at(i, i * gad.k + j) = gad.g[j];
    return G;
}

// H . G without materializing G (H is n x n mod q)
inline ModMatrix tag_times_gadget(const Gadget& gad, const ModMatrix& h) {
    if (h.rows != gad.n || h.cols != gad.n || h.modulus != gad.q)
        throw DimensionMismatch("tag_times_gadget");
    ModMatrix out(gad.n, gad.n * gad.k, gad.q);
    for (std::size_t r = 0; r < gad.n; ++r)
        for (std::size_t i = 0; i < gad.n; ++i) {
            u64 hv = h.at(r, i);
            if (hv == 0) continue;
            for (std::size_t j = 0; j < gad.k; ++j)
                out.at(r, i * gad.k + j) =
                    (out.at(r, i * gad.k + j) + detail::mulmod_u64(hv, gad.g[j], gad.q)) % gad.q;
        }
    return out;
}

// G^t s mod q as a length-nk vector
inline ModVec gadget_Gt(const Gadget& gad, const ModVec& s) {
    if (s.size() != gad.n) throw DimensionMismatch("gadget_Gt");
    ModVec out(gad.n * gad.k);
    for (std::size_t i = 0; i < gad.n; ++i)
        for (std::size_t j = 0; j < gad.k; ++j)
            out[i * gad.k + j] = detail::mulmod_u64(gad.g[j], s[i] % gad.q, gad.q);
    return out;
}

// Invert b = G^t s + e mod q. Exact recovery whenever, per k-block, e lies in
// the fundamental parallelepiped P_{1/2}(q S^{-t}); round-off with E1.
inline GInversion g_invert(const Gadget& gad, const ModVec& b) {
    if (b.size() != gad.n * gad.k) throw DimensionMismatch("g_invert");
    const std::size_t n = gad.n, k = gad.k;
    const i128 q = gad.q;
    GInversion out;
    out.s.resize(n);
    out.e.resize(n * k);
    std::vector<i128> t(k), v(k);
    for (std::size_t blk = 0; blk < n; ++blk) {
        const u64* bb = b.data() + blk * k;
        for (std::size_t j = 0; j < k; ++j) {
            i128 acc = 0;
            for (std::size_t r = 0; r < k; ++r) acc += i128(gad.S.at(r, j)) * i128(bb[r]);
            t[j] = acc;
        }
        // c = round(S^t b / q), half rounded up; v = E1 c is the lattice point
        for (std::size_t j = 0; j < k; ++j) t[j] = detail::round_half_up(t[j], q);
        for (std::size_t r = 0; r < k; ++r) {
            i128 acc = 0;
            for (std::size_t j = 0; j < k; ++j) acc += i128(gad.E1.at(r, j)) * t[j];
            v[r] = acc;
        }
        for (std::size_t r = 0; r < k; ++r) out.e[blk * k + r] = i64(i128(bb[r]) - v[r]);
        i128 s0 = v[0] % q;
        if (s0 < 0) s0 += q;
        out.s[blk] = u64(s0);
    }
    return out;
}

// g_invert with a caller-supplied entrywise bound on the recovered error
inline std::optional<GInversion> g_invert_bounded(const Gadget& gad, const ModVec& b, i64 e_bound) {
    GInversion r = g_invert(gad, b);
    for (i64 e : r.e)
        if (e > e_bound || e < -e_bound) return std::nullopt;
    return r;
}

namespace detail {

// Klein / GPV randomized nearest-plane on the lattice spanned by S,
// centered at c, parameter s. Returns the sampled lattice point.
inline void klein_sample(const Gadget& gad, double s, std::vector<double>& c, i64* out, Rng& rng) {
    const std::size_t k = gad.k;
    for (std::size_t r = 0; r < k; ++r) out[r] = 0;
    for (std::size_t ii = k; ii-- > 0;) {
        double dot = 0;
        for (std::size_t r = 0; r < k; ++r) dot += c[r] * gad.gs[ii][r];
        double cp = dot / gad.gs_norm2[ii];
        double si = s / std::sqrt(gad.gs_norm2[ii]);
        i64 z = sample_z({si, cp}, rng);
        for (std::size_t r = 0; r < k; ++r) {
            c[r] -= double(z) * double(gad.S.at(r, ii));
            out[r] += z * gad.S.at(r, ii);
        }
    }
}

} // namespace detail

// Gaussian sample x with G x = v mod q, within negligible distance of
// D_{L_v^perp(G), s}. Requires s >= ||S~|| * r (per-coordinate smoothing).
inline IntVec sample_g_coset(const Gadget& gad, const ModVec& v, double s, Rng& rng) {
    if (v.size() != gad.n) throw DimensionMismatch("sample_g_coset");
    double smin = gad.gs_max_norm * smoothing_r(gad.n);
    if (s < smin) throw ParameterTooSmall("sample_g_coset: need s >= ||S~|| r");
    const std::size_t n = gad.n, k = gad.k;
    IntVec x(n * k);
    std::vector<double> c(k);
    std::vector<i64> w(k);
    for (std::size_t blk = 0; blk < n; ++blk) {
        // coset representative x0 = (v, 0, ..., 0); sample w ~ D_{L(S), s, -x0}
        u64 v0 = v[blk] % gad.q;
        for (std::size_t r = 0; r < k; ++r) c[r] = 0.0;
        c[0] = -double(v0);
        detail::klein_sample(gad, s, c, w.data(), rng);
        x[blk * k + 0] = i64(v0) + w[0];
        for (std::size_t r = 1; r < k; ++r) x[blk * k + r] = w[r];
    }
    return x;
}

// encode(m) = E m, the coset representative of message m in L(G^t)/2L(G^t)
inline IntVec encode_msg(const Gadget& gad, const Bits& m) {
    if (m.size() != gad.n * gad.k) throw DimensionMismatch("encode_msg");
    const std::size_t n = gad.n, k = gad.k;
    IntVec out(n * k, 0);
    for (std::size_t blk = 0; blk < n; ++blk)
        for (std::size_t r = 0; r < k; ++r) {
            i64 acc = 0;
            for (std::size_t j = 0; j < k; ++j)
                if (m[blk * k + j]) acc += gad.E1.at(r, j);
            out[blk * k + r] = acc;
        }
    return out;
}

// Invert encode on Z_2q representatives: lift w, compute y = E^{-1} w over
// the rationals (= S^t w / q); integral y means w = E y with y = m + 2z,
// so m = y mod 2. Non-integral y signals a malformed vector.
inline std::optional<Bits> decode_msg(const Gadget& gad, const ModVec& w) {
    if (w.size() != gad.n * gad.k) throw DimensionMismatch("decode_msg");
    const std::size_t n = gad.n, k = gad.k;
    const i128 q = gad.q;
    Bits m(n * k);
    for (std::size_t blk = 0; blk < n; ++blk) {
        const u64* ww = w.data() + blk * k;
        for (std::size_t j = 0; j < k; ++j) {
            i128 acc = 0;
            for (std::size_t r = 0; r < k; ++r) acc += i128(gad.S.at(r, j)) * i128(ww[r]);
            if (acc % q != 0) return std::nullopt;
            i128 y = acc / q;
            m[blk * k + j] = std::uint8_t(((y % 2) + 2) % 2);
        }
    }
    return m;
}

} // namespace ibupre

#endif
