// ibupre/sampler.hpp -- discrete Gaussians over Z: rejection sampling from a
// bimodal geometric proposal with extended-precision rho evaluation.
//
// Widths follow the rho_{c,s}(x) = exp(-pi (x-c)^2 / s^2) convention, so the
// standard deviation of D_{Z,s} is close to s/sqrt(2*pi).
//
// Not constant time. Sampling time and accepted values leak through timing;
// this is a research artifact, not a hardened implementation.
#ifndef IBUPRE_SAMPLER_HPP
#define IBUPRE_SAMPLER_HPP

#include <cmath>
#include <cstdint>

#include "ibupre/errors.hpp"
#include "ibupre/modmath.hpp"
#include "ibupre/rng.hpp"

namespace ibupre {

struct GaussParam {
    double s = 1.0; // Gaussian parameter (width), > 0
    double c = 0.0; // center
};

// smoothing-scale constant r = sqrt(ln(2n/eps)/pi) with eps = 2^-36
inline double smoothing_r(std::size_t n) {
    constexpr double kLog2Eps = 36.0;
    return std::sqrt((std::log(2.0 * double(n)) + kLog2Eps * 0.6931471805599453) / 3.141592653589793);
}

namespace detail {

inline long double rho(long double x, long double s) {
    const long double pi = 3.14159265358979323846264338327950288L;
    return expl(-pi * x * x / (s * s));
}

// Inverse-CDF over the +/-12s window; used for narrow widths where the
// geometric proposal degenerates.
inline i64 sample_z_narrow(const GaussParam& p, Rng& rng) {
    const long double s = p.s, c = p.c;
    const long double tail = 12.0L * s;
    i64 lo = (i64)ceill(c - tail), hi = (i64)floorl(c + tail);
    if (lo > hi) return (i64)llroundl(c); // mass collapses onto nearest integer
    long double total = 0;
    long double w[64];
    int count = int(hi - lo + 1);
    if (count > 64) throw InternalSamplerFailure("narrow window too wide");
    for (int i = 0; i < count; ++i) {
        w[i] = rho((long double)(lo + i) - c, s);
        total += w[i];
    }
    if (total <= 0) return (i64)llroundl(c);
    long double u = (long double)rng.uniform_real() * total;
    for (int i = 0; i < count; ++i) {
        u -= w[i];
        if (u <= 0) return lo + i;
    }
    return hi;
}

} // namespace detail

// One draw from D_{Z,c,s} (hard tail cut at |x - c| <= 12 s).
inline i64 sample_z(const GaussParam& p, Rng& rng) {
    if (!(p.s > 0)) throw ParameterTooSmall("sample_z: s must be positive");
    const long double s = p.s;
    const long double sigma = s / 2.50662827463100050241576528481104525L; // s/sqrt(2 pi)

    if (sigma < 1.0L) return detail::sample_z_narrow(p, rng);

    // bimodal proposal: x = m + sign * k with k geometric of rate 1/sigma
    // around m = round(c); accept with rho_s(x-c) / (M * exp(-k/sigma)),
    // M = exp(1/2 + 1/(2 sigma)) bounds the ratio for |c - m| <= 1/2.
    const i64 m = (i64)llroundl((long double)p.c);
    const long double lnM = 0.5L + 1.0L / (2.0L * sigma); // bounds rho/proposal for |c-m| <= 1/2
    const long double pi = 3.14159265358979323846264338327950288L;
    const long double tail = 12.0L * s;

    for (int iter = 0; iter < 1000000; ++iter) {
        // geometric k >= 0 with P(k) ~ exp(-k/sigma)
        long double u = (long double)rng.uniform_real();
        if (u <= 0) continue;
        i64 k = (i64)floorl(-sigma * logl(1.0L - u));
        bool neg = rng.next_u64() & 1;
        if (k == 0 && neg) continue; // avoid double-counting zero
        i64 x = neg ? m - k : m + k;
        long double d = (long double)k; // |x - m|
        long double lacc = -pi * ((long double)(x)-p.c) * ((long double)(x)-p.c) / (s * s) +
                           d / sigma - lnM;
        if (fabsl((long double)x - (long double)p.c) > tail) continue;
        long double a = (long double)rng.uniform_real();
        if (a < expl(lacc)) return x;
    }
    throw InternalSamplerFailure("sample_z: rejection loop exceeded 10^6 iterations");
}

// i.i.d. matrix of D_{Z,c,s} entries
inline IntMatrix sample_z_matrix(std::size_t rows, std::size_t cols, const GaussParam& p, Rng& rng) {
    if (rows < 1 || cols < 1) throw DimensionMismatch("sample_z_matrix");
    IntMatrix m(rows, cols);
    for (auto& v : m.a) v = sample_z(p, rng);
    return m;
}

inline IntVec sample_z_vec(std::size_t len, const GaussParam& p, Rng& rng) {
    IntVec v(len);
    for (auto& x : v) x = sample_z(p, rng);
    return v;
}

} // namespace ibupre

#endif
