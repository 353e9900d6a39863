// ibupre/modmath.hpp -- exact linear algebra over Z_q (and Z_2q), with the
// field solvers used by decryption validity checks and tag inversion
#ifndef IBUPRE_MODMATH_HPP
#define IBUPRE_MODMATH_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ibupre/errors.hpp"
#include "ibupre/rng.hpp"

namespace ibupre {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

using ModVec = std::vector<u64>; // canonical residues in [0, modulus)
using IntVec = std::vector<i64>; // exact signed integers

// Largest supported modulus. The scheme keeps q <= 2^31; ciphertext algebra
// lives in Z_2q, so matrices accept moduli up to 2^32.
inline constexpr u64 kMaxModulus = u64(1) << 32;

namespace detail {

inline u64 mulmod_u64(u64 a, u64 b, u64 m) { return u64(u128(a) * b % m); }

inline u64 powmod_u64(u64 a, u64 e, u64 m) {
    u64 r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod_u64(r, a, m);
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    return r;
}

// deterministic Miller-Rabin, valid for all 64-bit inputs
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

inline u64 inv_mod_prime(u64 a, u64 q) { return powmod_u64(a % q, q - 2, q); }

// canonical residue of a signed value
inline u64 umod(i64 v, u64 m) {
    i64 r = v % i64(m);
    if (r < 0) r += i64(m);
    return u64(r);
}

} // namespace detail

// ---------------------------------------------------------------------------
// matrix types

struct IntMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<i64> a;

    IntMatrix() = default;
    IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}

    i64& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    i64 at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static IntMatrix identity(std::size_t n) {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    bool operator==(const IntMatrix& o) const = default;
};

struct ModMatrix {
    std::size_t rows = 0, cols = 0;
    u64 modulus = 0;
    std::vector<u64> a;

    ModMatrix() = default;
    ModMatrix(std::size_t r, std::size_t c, u64 m) : rows(r), cols(c), modulus(m), a(r * c, 0) {
        if (m == 0 || m > kMaxModulus) throw InvalidModulus("modulus must be in [1, 2^32]");
    }

    u64& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    u64 at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static ModMatrix identity(std::size_t n, u64 q) {
        ModMatrix m(n, n, q);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1 % q;
        return m;
    }

    static ModMatrix uniform(std::size_t r, std::size_t c, u64 q, Rng& rng) {
        ModMatrix m(r, c, q);
        for (auto& v : m.a) v = rng.uniform_below(q);
        return m;
    }

    bool is_zero() const {
        for (u64 v : a)
            if (v != 0) return false;
        return true;
    }

    bool operator==(const ModMatrix& o) const = default;
};

// ---------------------------------------------------------------------------
// elementwise ops

inline ModMatrix transpose(const ModMatrix& m) {
    ModMatrix t(m.cols, m.rows, m.modulus);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

inline IntMatrix transpose(const IntMatrix& m) {
    IntMatrix t(m.cols, m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

inline ModMatrix add_mod(const ModMatrix& x, const ModMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols || x.modulus != y.modulus)
        throw DimensionMismatch("add_mod");
    ModMatrix z(x.rows, x.cols, x.modulus);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = (x.a[i] + y.a[i]) % x.modulus;
    return z;
}

inline ModMatrix sub_mod(const ModMatrix& x, const ModMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols || x.modulus != y.modulus)
        throw DimensionMismatch("sub_mod");
    ModMatrix z(x.rows, x.cols, x.modulus);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = (x.a[i] + x.modulus - y.a[i]) % x.modulus;
    return z;
}

inline ModMatrix neg_mod(const ModMatrix& x) {
    ModMatrix z(x.rows, x.cols, x.modulus);
    for (std::size_t i = 0; i < x.a.size(); ++i) z.a[i] = x.a[i] == 0 ? 0 : x.modulus - x.a[i];
    return z;
}

// reduce signed matrix into canonical residues
inline ModMatrix reduce_mod(const IntMatrix& m, u64 q) {
    ModMatrix z(m.rows, m.cols, q);
    for (std::size_t i = 0; i < m.a.size(); ++i) z.a[i] = detail::umod(m.a[i], q);
    return z;
}

// centered lift: residues mapped into [-(q-1)/2, q/2]
inline IntMatrix centered_lift(const ModMatrix& m) {
    IntMatrix z(m.rows, m.cols);
    u64 half = m.modulus / 2;
    for (std::size_t i = 0; i < m.a.size(); ++i)
        z.a[i] = m.a[i] > half ? i64(m.a[i]) - i64(m.modulus) : i64(m.a[i]);
    return z;
}

inline IntVec centered_lift_vec(const ModVec& v, u64 q) {
    IntVec z(v.size());
    u64 half = q / 2;
    for (std::size_t i = 0; i < v.size(); ++i)
        z[i] = v[i] > half ? i64(v[i]) - i64(q) : i64(v[i]);
    return z;
}

inline ModVec reduce_vec(const IntVec& v, u64 q) {
    ModVec z(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) z[i] = detail::umod(v[i], q);
    return z;
}

// ---------------------------------------------------------------------------
// products (exact: 128-bit accumulation, no intermediate overflow for
// modulus <= 2^32 and any practical dimension)

inline ModMatrix mat_mul_mod(const ModMatrix& x, const ModMatrix& y) {
    if (x.cols != y.rows) throw DimensionMismatch("mat_mul_mod");
    if (x.modulus != y.modulus) throw DimensionMismatch("mat_mul_mod: modulus");
    const u64 q = x.modulus;
    ModMatrix z(x.rows, y.cols, q);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < y.cols; ++c) {
            u128 acc = 0;
            for (std::size_t t = 0; t < x.cols; ++t) acc += u128(x.at(r, t)) * y.at(t, c);
            z.at(r, c) = u64(acc % q);
        }
    }
    return z;
}

inline ModMatrix mat_mul_mod(const ModMatrix& x, const IntMatrix& y) {
    if (x.cols != y.rows) throw DimensionMismatch("mat_mul_mod(mod,int)");
    const u64 q = x.modulus;
    ModMatrix z(x.rows, y.cols, q);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < y.cols; ++c) {
            u128 acc = 0;
            for (std::size_t t = 0; t < x.cols; ++t)
                acc += u128(x.at(r, t)) * detail::umod(y.at(t, c), q);
            z.at(r, c) = u64(acc % q);
        }
    }
    return z;
}

inline ModMatrix mat_mul_mod(const IntMatrix& x, const ModMatrix& y) {
    if (x.cols != y.rows) throw DimensionMismatch("mat_mul_mod(int,mod)");
    const u64 q = y.modulus;
    ModMatrix z(x.rows, y.cols, q);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < y.cols; ++c) {
            u128 acc = 0;
            for (std::size_t t = 0; t < x.cols; ++t)
                acc += u128(detail::umod(x.at(r, t), q)) * y.at(t, c);
            z.at(r, c) = u64(acc % q);
        }
    }
    return z;
}

// A . x
inline ModVec mat_vec_mod(const ModMatrix& m, const ModVec& x) {
    if (m.cols != x.size()) throw DimensionMismatch("mat_vec_mod");
    ModVec z(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        u128 acc = 0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += u128(m.at(r, c)) * x[c];
        z[r] = u64(acc % m.modulus);
    }
    return z;
}

// A^t . x
inline ModVec matT_vec_mod(const ModMatrix& m, const ModVec& x) {
    if (m.rows != x.size()) throw DimensionMismatch("matT_vec_mod");
    ModVec z(m.cols, 0);
    std::vector<u128> acc(m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) acc[c] += u128(m.at(r, c)) * x[r];
    for (std::size_t c = 0; c < m.cols; ++c) z[c] = u64(acc[c] % m.modulus);
    return z;
}

// R^t . x mod q for signed R
inline ModVec intmatT_vec_mod(const IntMatrix& m, const ModVec& x, u64 q) {
    if (m.rows != x.size()) throw DimensionMismatch("intmatT_vec_mod");
    std::vector<u128> acc(m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) acc[c] += u128(detail::umod(m.at(r, c), q)) * x[r];
    ModVec z(m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) z[c] = u64(acc[c] % q);
    return z;
}

// x^t . M mod q for signed M (row vector times matrix)
inline ModVec vec_intmat_mod(const ModVec& x, const IntMatrix& m, u64 q) {
    if (m.rows != x.size()) throw DimensionMismatch("vec_intmat_mod");
    std::vector<u128> acc(m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) acc[c] += u128(detail::umod(m.at(r, c), q)) * x[r];
    ModVec z(m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) z[c] = u64(acc[c] % q);
    return z;
}

// R^t . e exact over Z (saturating at int64 range; callers reject oversized
// noise before the values could matter)
inline IntVec intmatT_intvec(const IntMatrix& m, const IntVec& e) {
    if (m.rows != e.size()) throw DimensionMismatch("intmatT_intvec");
    std::vector<i128> acc(m.cols, 0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) acc[c] += i128(m.at(r, c)) * e[r];
    IntVec z(m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) {
        i128 v = acc[c];
        if (v > i128(INT64_MAX)) v = INT64_MAX;
        if (v < i128(INT64_MIN)) v = INT64_MIN;
        z[c] = i64(v);
    }
    return z;
}

inline IntMatrix int_mat_mul(const IntMatrix& x, const IntMatrix& y) {
    if (x.cols != y.rows) throw DimensionMismatch("int_mat_mul");
    IntMatrix z(x.rows, y.cols);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < y.cols; ++c) {
            i128 acc = 0;
            for (std::size_t t = 0; t < x.cols; ++t) acc += i128(x.at(r, t)) * y.at(t, c);
            z.at(r, c) = i64(acc);
        }
    return z;
}

// ---------------------------------------------------------------------------
// field solvers (prime modulus)

// Gaussian elimination over Z_q: returns s with a.s = v (mod q), or nullopt
// when the system is inconsistent. Partial pivoting by first nonzero entry,
// ties broken by lowest row index.
inline std::optional<ModVec> solve_mod_prime(const ModMatrix& m, const ModVec& v) {
    if (!detail::is_prime_u64(m.modulus)) throw CompositeModulus("solve_mod_prime");
    if (m.rows != v.size()) throw DimensionMismatch("solve_mod_prime");
    const u64 q = m.modulus;
    const std::size_t R = m.rows, C = m.cols;
    // augmented [m | v]
    std::vector<u64> w((C + 1) * R);
    auto at = [&](std::size_t r, std::size_t c) -> u64& { return w[r * (C + 1) + c]; };
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) at(r, c) = m.at(r, c);
        at(r, C) = v[r] % q;
    }
    std::vector<std::size_t> pivot_col;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < C && rank < R; ++c) {
        std::size_t piv = R;
        for (std::size_t r = rank; r < R; ++r)
            if (at(r, c) != 0) { piv = r; break; }
        if (piv == R) continue;
        if (piv != rank)
            for (std::size_t j = 0; j <= C; ++j) std::swap(at(piv, j), at(rank, j));
        u64 inv = detail::inv_mod_prime(at(rank, c), q);
        for (std::size_t j = c; j <= C; ++j) at(rank, j) = detail::mulmod_u64(at(rank, j), inv, q);
        for (std::size_t r = 0; r < R; ++r) {
            if (r == rank || at(r, c) == 0) continue;
            u64 f = at(r, c);
            for (std::size_t j = c; j <= C; ++j) {
                u64 s = detail::mulmod_u64(f, at(rank, j), q);
                at(r, j) = (at(r, j) + q - s) % q;
            }
        }
        pivot_col.push_back(c);
        ++rank;
    }
    for (std::size_t r = rank; r < R; ++r)
        if (at(r, C) != 0) return std::nullopt;
    ModVec s(C, 0);
    for (std::size_t i = 0; i < rank; ++i) s[pivot_col[i]] = at(i, C);
    return s;
}

// h^{-1} over Z_q (prime); nullopt when rank-deficient
inline std::optional<ModMatrix> invert_mod(const ModMatrix& h) {
    if (h.rows != h.cols) throw DimensionMismatch("invert_mod: square required");
    if (!detail::is_prime_u64(h.modulus)) throw CompositeModulus("invert_mod");
    const u64 q = h.modulus;
    const std::size_t N = h.rows;
    std::vector<u64> w(N * 2 * N);
    auto at = [&](std::size_t r, std::size_t c) -> u64& { return w[r * 2 * N + c]; };
    for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < N; ++c) at(r, c) = h.at(r, c);
        at(r, N + r) = 1 % q;
    }
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t piv = N;
        for (std::size_t r = c; r < N; ++r)
            if (at(r, c) != 0) { piv = r; break; }
        if (piv == N) return std::nullopt;
        if (piv != c)
            for (std::size_t j = 0; j < 2 * N; ++j) std::swap(at(piv, j), at(c, j));
        u64 inv = detail::inv_mod_prime(at(c, c), q);
        for (std::size_t j = 0; j < 2 * N; ++j) at(c, j) = detail::mulmod_u64(at(c, j), inv, q);
        for (std::size_t r = 0; r < N; ++r) {
            if (r == c || at(r, c) == 0) continue;
            u64 f = at(r, c);
            for (std::size_t j = 0; j < 2 * N; ++j) {
                u64 s = detail::mulmod_u64(f, at(c, j), q);
                at(r, j) = (at(r, j) + q - s) % q;
            }
        }
    }
    ModMatrix out(N, N, q);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < N; ++c) out.at(r, c) = at(r, N + c);
    return out;
}

// concatenate blocks horizontally
inline ModMatrix hconcat(const std::vector<const ModMatrix*>& parts) {
    if (parts.empty()) throw DimensionMismatch("hconcat: empty");
    std::size_t rows = parts[0]->rows, cols = 0;
    u64 q = parts[0]->modulus;
    for (auto* p : parts) {
        if (p->rows != rows || p->modulus != q) throw DimensionMismatch("hconcat");
        cols += p->cols;
    }
    ModMatrix z(rows, cols, q);
    std::size_t off = 0;
    for (auto* p : parts) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p->cols; ++c) z.at(r, off + c) = p->at(r, c);
        off += p->cols;
    }
    return z;
}

// exact squared Euclidean norm of a signed vector, as long double
inline long double norm2_sq(const IntVec& v) {
    i128 acc = 0;
    for (i64 x : v) acc += i128(x) * x;
    return (long double)(acc);
}

inline long double norm2(const IntVec& v) { return sqrtl(norm2_sq(v)); }

} // namespace ibupre

#endif
