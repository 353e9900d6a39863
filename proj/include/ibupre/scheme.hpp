// ibupre/scheme.hpp -- the identity-based unidirectional proxy re-encryption
// scheme: parameter construction, SetUp, Extract, Enc, Dec, ReKeyGen, ReEnc.
//
// Ciphertexts are vectors over Z_2q of length mbar + 3nk carrying a hop
// level (0 fresh, 1 re-encrypted; single hop). Re-encryption keys are
// integer block matrices rk with A_i rk = A_j exactly.
#ifndef IBUPRE_SCHEME_HPP
#define IBUPRE_SCHEME_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ibupre/detail/sha256.hpp"
#include "ibupre/errors.hpp"
#include "ibupre/frd.hpp"
#include "ibupre/gadget.hpp"
#include "ibupre/modmath.hpp"
#include "ibupre/rng.hpp"
#include "ibupre/sampler.hpp"
#include "ibupre/trapdoor.hpp"

namespace ibupre {

// ---------------------------------------------------------------------------
// parameters

struct Params {
    std::size_t n = 0;  // security dimension
    u64 q = 0;          // prime modulus
    std::size_t k = 0;  // ceil(log2 q)
    std::size_t nk = 0; // n * k
    std::size_t m_bar = 0;
    std::size_t m = 0;     // m_bar + nk
    std::size_t width = 0; // m_bar + 3 nk, the ciphertext length
    double r = 0;          // smoothing-scale constant (eps = 2^-36)
    double s_gadget = 0;   // sqrt(6) r
    u64 alpha_q = 0;       // LWE error width, floored at 2
    double s_extract = 0;  // delegation parameter for Extract
    double s_rk1 = 0;      // re-key sampling parameter, first batch
    double s_rk2 = 0;      // re-key sampling parameter, later batches (= s_rk1 sqrt(mbar))
    double thresh_ebar0 = 0; // Dec step-3 threshold for ||ebar0||
    double thresh_rest = 0;  // Dec step-3 threshold for ||e0'||, ||e1||, ||e2||
    double level1_scale = 1; // threshold multiplier for re-encrypted ciphertexts

    // budget report: whether fresh / re-encrypted decryption noise fits the
    // exact-recovery region with an 8-sigma margin
    bool level0_ok = false;
    bool level1_ok = false;
    double sigma_level0 = 0, sigma_level1 = 0, region_bound = 0;
};

namespace detail {

inline int popcount_u64(u64 x) {
    int c = 0;
    while (x) { c += int(x & 1); x >>= 1; }
    return c;
}

} // namespace detail

inline Params params_new(std::size_t n, u64 q, std::optional<std::size_t> m_bar_override = {}) {
    if (n < 1) throw DimensionMismatch("params_new: n >= 1");
    if (q < (u64(1) << 8) || q > (u64(1) << 31)) throw InvalidModulus("params_new: q in [2^8, 2^31]");
    if (!detail::is_prime_u64(q)) throw InvalidModulus("params_new: q must be prime");

    Params p;
    p.n = n;
    p.q = q;
    p.k = 0;
    while ((u64(1) << p.k) < q) ++p.k;
    p.nk = n * p.k;
    p.m_bar = m_bar_override.value_or(p.nk);
    if (p.m_bar < p.nk) throw DimensionMismatch("params_new: m_bar >= nk required");
    p.m = p.m_bar + p.nk;
    p.width = p.m_bar + 3 * p.nk;

    p.r = smoothing_r(n);
    p.s_gadget = gadget_sampling_width(n);

    const double nk3r3 = std::pow(double(p.nk), 3.0) * std::pow(p.r, 3.0);
    p.alpha_q = std::max<u64>(2, u64(std::llround(double(q) / nk3r3)));

    p.s_extract = 1.2 * s_min_estimate(p.m_bar, p.nk, p.r, n);
    // The first re-key batch samples against the delegated trapdoor R_i1,
    // whose quality is set by s_extract-sized entries; s_extract itself is
    // far below that bound, so the batch parameter is derived the same way.
    p.s_rk1 = 1.2 * s_min_estimate(p.m, p.nk, p.s_extract, n);
    p.s_rk2 = p.s_rk1 * std::sqrt(double(p.m_bar));

    p.thresh_ebar0 = double(p.alpha_q) * std::sqrt(double(p.m_bar));
    p.thresh_rest = double(p.alpha_q) * std::sqrt(2.0 * double(p.m_bar) * double(p.nk)) * p.r;
    p.level1_scale = p.s_rk2 * std::sqrt(double(p.m_bar + 2 * p.nk)) * p.r;

    if (!(p.thresh_ebar0 < double(q) / 4.0 && p.thresh_rest < double(q) / 4.0))
        throw BudgetExceeded("params_new: decryption thresholds reach q/4");

    // noise-chain budget report (typical-case sigmas, 8-sigma margin against
    // the per-row recovery region of the gadget basis)
    const double inv2pi = 1.0 / (2.0 * 3.141592653589793);
    const double aq = double(p.alpha_q);
    const double sp_typ = std::sqrt(double(p.m_bar) * aq * aq * (1.0 + inv2pi)) * p.r;
    const double E_ebar0_sq = double(p.m_bar) * aq * aq * inv2pi;
    const double E_e0_sq = E_ebar0_sq + double(p.nk) * sp_typ * sp_typ * inv2pi;
    const double sigma_ext = p.s_extract / std::sqrt(2.0 * 3.141592653589793);
    p.sigma_level0 = std::sqrt(sigma_ext * sigma_ext * E_e0_sq + sp_typ * sp_typ * inv2pi);

    const double sigma_x0 = p.s_rk1 / std::sqrt(2.0 * 3.141592653589793);
    const double sigma_x2 = p.s_rk2 / std::sqrt(2.0 * 3.141592653589793);
    const double S2 = E_ebar0_sq + 2.0 * double(p.nk) * sp_typ * sp_typ * inv2pi;
    const double sigma_et0p = sigma_x0 * std::sqrt(S2);
    const double sigma_et12 = std::sqrt(sigma_x2 * sigma_x2 * S2 + sp_typ * sp_typ * inv2pi);
    const double E_et0_sq = E_ebar0_sq + double(p.nk) * sigma_et0p * sigma_et0p;
    p.sigma_level1 = std::sqrt(sigma_ext * sigma_ext * E_et0_sq + sigma_et12 * sigma_et12);

    const double row_w = std::max(std::sqrt(5.0), std::sqrt(double(detail::popcount_u64(q))));
    p.region_bound = double(q) / 2.0;
    p.level0_ok = 8.0 * row_w * p.sigma_level0 < p.region_bound;
    p.level1_ok = 8.0 * row_w * p.sigma_level1 < p.region_bound;
    return p;
}

// PRESET-TOY: small enough for fast serialization/algebra tests; the noise
// budget report shows fresh-ciphertext decryption does not fit at this q.
inline Params preset_toy() { return params_new(4, 65537); }
// PRESET-DEMO: n=8, q = 2^30 + 3 (prime); fresh-ciphertext decryption holds
// with wide margin. Re-encrypted decryption does not fit at any q <= 2^31;
// see the budget report fields.
inline Params preset_demo() { return params_new(8, 1073741827); }

inline std::optional<Params> params_preset(std::string_view name) {
    if (name == "toy") return preset_toy();
    if (name == "demo") return preset_demo();
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// key material

struct PublicParams {
    Params params;
    Gadget gad;
    FrdContext frd;
    ModMatrix abar;   // n x mbar
    ModMatrix abar_p; // n x nk, = -abar R
    ModMatrix a1, a2; // n x nk
    std::array<ModMatrix, 4> h; // H1..H4, uniform invertible
};

struct MasterSecret {
    IntMatrix r_msk; // mbar x nk
};

struct UserSecretKey {
    Identity id;
    IntMatrix r1, r2; // m x nk each
};

struct Ciphertext {
    std::uint32_t level = 0; // 0 fresh, 1 re-encrypted
    Identity target_id;
    u64 q = 0; // base modulus; entries of b live in [0, 2q)
    ModVec b;  // length width, canonical mod 2q
};

struct ReKey {
    Identity from_id, to_id;
    IntMatrix mat; // width x width, outer-diagonal identity block structure
};

// ---------------------------------------------------------------------------
// public-matrix assembly

inline ModMatrix a_tilde_block(const PublicParams& pp, const ModMatrix& h_id) {
    return add_mod(pp.abar_p, tag_times_gadget(pp.gad, h_id));
}

inline ModMatrix a_i1(const PublicParams& pp, const ModMatrix& h_id) {
    return add_mod(pp.a1, tag_times_gadget(pp.gad, mat_mul_mod(pp.h[2], h_id)));
}

inline ModMatrix a_i2(const PublicParams& pp, const ModMatrix& h_id) {
    return add_mod(pp.a2, tag_times_gadget(pp.gad, mat_mul_mod(pp.h[3], h_id)));
}

// [Abar | Abar' + H_id G] as a tagged matrix with tag H_id (msk trapdoor)
inline TaggedMatrix a_tilde_tagged(const PublicParams& pp, const ModMatrix& h_id) {
    return TaggedMatrix{pp.abar, {a_tilde_block(pp, h_id)}, {h_id}};
}

// full A_id = [Atilde | A_i1 | A_i2] (n x width)
inline ModMatrix a_full(const PublicParams& pp, const Identity& id) {
    ModMatrix h_id = frd_encode(pp.frd, id);
    ModMatrix at = a_tilde_block(pp, h_id);
    ModMatrix b1 = a_i1(pp, h_id);
    ModMatrix b2 = a_i2(pp, h_id);
    return hconcat({&pp.abar, &at, &b1, &b2});
}

// ---------------------------------------------------------------------------
// SetUp

inline std::pair<PublicParams, MasterSecret> setup(const Params& params, Rng& rng) {
    PublicParams pp;
    pp.params = params;
    pp.gad = make_gadget(params.n, params.q);
    pp.frd = frd_init(params.n, params.q, rng.next_u64());
    pp.abar = ModMatrix::uniform(params.n, params.m_bar, params.q, rng);
    IntMatrix R = sample_z_matrix(params.m_bar, params.nk, {params.r, 0.0}, rng);
    pp.abar_p = neg_mod(mat_mul_mod(pp.abar, R));
    pp.a1 = ModMatrix::uniform(params.n, params.nk, params.q, rng);
    pp.a2 = ModMatrix::uniform(params.n, params.nk, params.q, rng);
    for (auto& hm : pp.h) {
        do {
            hm = ModMatrix::uniform(params.n, params.n, params.q, rng);
        } while (!invert_mod(hm));
    }
    return {std::move(pp), MasterSecret{std::move(R)}};
}

// the SetUp identity Abar R = -Abar' (exactly checkable)
inline bool verify_master_secret(const PublicParams& pp, const MasterSecret& msk) {
    if (msk.r_msk.rows != pp.params.m_bar || msk.r_msk.cols != pp.params.nk) return false;
    return mat_mul_mod(pp.abar, msk.r_msk) == neg_mod(pp.abar_p);
}

// ---------------------------------------------------------------------------
// Extract

inline UserSecretKey extract(const PublicParams& pp, const MasterSecret& msk, const Identity& id,
                             Rng& rng) {
    if (id.coeffs.size() != pp.params.n) throw DimensionMismatch("extract: identity length");
    if (id.is_zero()) throw ZeroIdentity();
    ModMatrix h_id = frd_encode(pp.frd, id);
    TaggedMatrix at = a_tilde_tagged(pp, h_id);
    Trapdoor msk_trap{{msk.r_msk}, pp.params.r};
    ModMatrix b1 = a_i1(pp, h_id);
    ModMatrix b2 = a_i2(pp, h_id);
    IntMatrix r1 = del_trap(at, msk_trap, b1, pp.h[0], pp.params.s_extract, pp.gad, rng);
    IntMatrix r2 = del_trap(at, msk_trap, b2, pp.h[1], pp.params.s_extract, pp.gad, rng);
    return UserSecretKey{id, std::move(r1), std::move(r2)};
}

// the Extract identity [Atilde | A_i1 | A_i2] [r1 r2; I 0; 0 I] = [H1 G | H2 G]
inline bool verify_user_key(const PublicParams& pp, const UserSecretKey& sk) {
    if (sk.id.coeffs.size() != pp.params.n || sk.id.is_zero()) return false;
    if (sk.r1.rows != pp.params.m || sk.r1.cols != pp.params.nk) return false;
    if (sk.r2.rows != pp.params.m || sk.r2.cols != pp.params.nk) return false;
    ModMatrix h_id = frd_encode(pp.frd, sk.id);
    ModMatrix at_block = a_tilde_block(pp, h_id);
    ModMatrix at = hconcat({&pp.abar, &at_block});
    ModMatrix lhs1 = add_mod(mat_mul_mod(at, sk.r1), a_i1(pp, h_id));
    if (!(lhs1 == tag_times_gadget(pp.gad, pp.h[0]))) return false;
    ModMatrix lhs2 = add_mod(mat_mul_mod(at, sk.r2), a_i2(pp, h_id));
    return lhs2 == tag_times_gadget(pp.gad, pp.h[1]);
}

// ---------------------------------------------------------------------------
// Enc

struct EncryptTrace {
    ModVec s;
    IntVec ebar0, e0p, e1, e2;
    double s_prime = 0;
};

inline Ciphertext encrypt(const PublicParams& pp, const Identity& id, const Bits& msg, Rng& rng,
                          EncryptTrace* trace = nullptr) {
    const Params& P = pp.params;
    if (id.coeffs.size() != P.n) throw DimensionMismatch("encrypt: identity length");
    if (id.is_zero()) throw ZeroIdentity();
    if (msg.size() != P.nk) throw DimensionMismatch("encrypt: message must be nk bits");

    ModMatrix Ai = a_full(pp, id);
    ModVec s(P.n);
    for (auto& v : s) v = rng.uniform_below(P.q);
    ModVec u = matT_vec_mod(Ai, s); // A_i^t s, length width

    IntVec ebar0 = sample_z_vec(P.m_bar, {double(P.alpha_q), 0.0}, rng);
    long double e0sq = norm2_sq(ebar0);
    double s_prime =
        std::sqrt(double(e0sq) + double(P.m_bar) * double(P.alpha_q) * double(P.alpha_q)) * P.r;
    IntVec e0p = sample_z_vec(P.nk, {s_prime, 0.0}, rng);
    IntVec e1 = sample_z_vec(P.nk, {s_prime, 0.0}, rng);
    IntVec e2 = sample_z_vec(P.nk, {s_prime, 0.0}, rng);

    IntVec enc = encode_msg(pp.gad, msg);
    const u64 q2 = 2 * P.q;
    ModVec b(P.width);
    auto put = [&](std::size_t idx, u64 two_u, i64 e, i64 extra) {
        i128 v = i128(two_u) + e + extra;
        i128 r = v % i128(q2);
        if (r < 0) r += q2;
        b[idx] = u64(r);
    };
    for (std::size_t i = 0; i < P.m_bar; ++i) put(i, 2 * u[i], ebar0[i], 0);
    for (std::size_t i = 0; i < P.nk; ++i) put(P.m_bar + i, 2 * u[P.m_bar + i], e0p[i], 0);
    for (std::size_t i = 0; i < P.nk; ++i) put(P.m + i, 2 * u[P.m + i], e1[i], 0);
    for (std::size_t i = 0; i < P.nk; ++i) put(P.m + P.nk + i, 2 * u[P.m + P.nk + i], e2[i], enc[i]);

    if (trace) *trace = EncryptTrace{std::move(s), std::move(ebar0), std::move(e0p),
                                     std::move(e1), std::move(e2), s_prime};
    return Ciphertext{0, id, P.q, std::move(b)};
}

// ---------------------------------------------------------------------------
// Dec

enum class DecryptFailure {
    none,
    invalid_form,    // malformed ciphertext
    wrong_identity,  // sk.id != ct.target_id
    zero_tag,        // H_id = 0
    noise_bound,     // step-3 norm checks
    not_in_lattice,  // V0 parity / membership check
    integrity_block, // the H1 block decoded to a nonzero message
    codec_failed,    // encode^-1 does not exist
};

inline const char* to_string(DecryptFailure f) {
    switch (f) {
        case DecryptFailure::none: return "ok";
        case DecryptFailure::invalid_form: return "invalid ciphertext form";
        case DecryptFailure::wrong_identity: return "secret key identity does not match ciphertext";
        case DecryptFailure::zero_tag: return "zero identity tag";
        case DecryptFailure::noise_bound: return "recovered noise exceeds threshold";
        case DecryptFailure::not_in_lattice: return "carrier vector fails lattice membership";
        case DecryptFailure::integrity_block: return "integrity block decoded nonzero";
        case DecryptFailure::codec_failed: return "message decoding failed";
    }
    return "?";
}

// Decryption. Inverts the LWE relation relative to the H2-tagged block pair:
// the secret is recovered through the payload-free H1 block (the H2 block
// carries the message coset, which a single-block inversion cannot separate
// from its own error), and the H2-block error is then recovered exactly from
// its compressed gadget inversion.
inline std::optional<Bits> decrypt(const PublicParams& pp, const UserSecretKey& sk,
                                   const Ciphertext& ct, DecryptFailure* why = nullptr) {
    const Params& P = pp.params;
    auto fail = [&](DecryptFailure f) {
        if (why) *why = f;
        return std::nullopt;
    };
    if (why) *why = DecryptFailure::none;

    const u64 q = P.q, q2 = 2 * P.q;
    if (ct.b.size() != P.width || ct.level > 1 || ct.q != P.q ||
        ct.target_id.coeffs.size() != P.n)
        return fail(DecryptFailure::invalid_form);
    for (u64 v : ct.b)
        if (v >= q2) return fail(DecryptFailure::invalid_form);
    if (ct.target_id.is_zero()) return fail(DecryptFailure::zero_tag);
    if (!(sk.id == ct.target_id)) return fail(DecryptFailure::wrong_identity);

    ModMatrix h_id = frd_encode(pp.frd, ct.target_id);
    if (h_id.is_zero()) return fail(DecryptFailure::zero_tag);
    ModMatrix Ai = a_full(pp, ct.target_id);

    ModVec bq(P.width);
    for (std::size_t i = 0; i < P.width; ++i) bq[i] = ct.b[i] % q;
    ModVec b0m(bq.begin(), bq.begin() + P.m);

    // secret through the H1 block (no message payload there)
    ModVec bp1 = intmatT_vec_mod(sk.r1, b0m, q);
    for (std::size_t j = 0; j < P.nk; ++j) bp1[j] = (bp1[j] + bq[P.m + j]) % q;
    GInversion gi1 = g_invert(pp.gad, bp1);
    auto h1t_inv = invert_mod(transpose(pp.h[0]));
    if (!h1t_inv) return fail(DecryptFailure::invalid_form);
    ModVec z = mat_vec_mod(*h1t_inv, gi1.s);

    // exact noise on the Atilde and A_i1 segments by subtraction
    ModVec ats = matT_vec_mod(Ai, z);
    IntVec e(P.width);
    const u64 half = q / 2;
    for (std::size_t i = 0; i < P.m + P.nk; ++i) {
        u64 d = (bq[i] + q - ats[i]) % q;
        e[i] = d > half ? i64(d) - i64(q) : i64(d);
    }

    // exact noise on the A_i2 segment from its own compressed inversion
    ModVec bp2 = intmatT_vec_mod(sk.r2, b0m, q);
    for (std::size_t j = 0; j < P.nk; ++j) bp2[j] = (bp2[j] + bq[P.m + P.nk + j]) % q;
    GInversion gi2 = g_invert(pp.gad, bp2);
    IntVec e0m(e.begin(), e.begin() + P.m);
    IntVec r2te0 = intmatT_intvec(sk.r2, e0m);
    for (std::size_t j = 0; j < P.nk; ++j) {
        i128 v = i128(gi2.e[j]) - r2te0[j];
        if (v > INT64_MAX || v < INT64_MIN) return fail(DecryptFailure::noise_bound);
        e[P.m + P.nk + j] = i64(v);
    }

    // step-3 norm thresholds (level-1 budgets scaled)
    const double scale = ct.level == 1 ? P.level1_scale : 1.0;
    IntVec ebar0(e.begin(), e.begin() + P.m_bar);
    IntVec e0p(e.begin() + P.m_bar, e.begin() + P.m);
    IntVec e1(e.begin() + P.m, e.begin() + P.m + P.nk);
    IntVec e2(e.begin() + P.m + P.nk, e.end());
    if (double(norm2(ebar0)) >= P.thresh_ebar0 * scale) return fail(DecryptFailure::noise_bound);
    if (double(norm2(e0p)) >= P.thresh_rest * scale) return fail(DecryptFailure::noise_bound);
    if (double(norm2(e1)) >= P.thresh_rest * scale) return fail(DecryptFailure::noise_bound);
    if (double(norm2(e2)) >= P.thresh_rest * scale) return fail(DecryptFailure::noise_bound);

    // V = b - e mod 2q; V0 must be even with V0/2 in the image lattice of Abar^t
    ModVec V(P.width);
    for (std::size_t i = 0; i < P.width; ++i) {
        i128 v = i128(ct.b[i]) - e[i];
        i128 rr = v % i128(q2);
        if (rr < 0) rr += q2;
        V[i] = u64(rr);
    }
    ModVec v0_half(P.m_bar);
    for (std::size_t i = 0; i < P.m_bar; ++i) {
        if (V[i] & 1) return fail(DecryptFailure::not_in_lattice);
        v0_half[i] = (V[i] / 2) % q;
    }
    if (!solve_mod_prime(transpose(pp.abar), v0_half)) return fail(DecryptFailure::not_in_lattice);

    // w = V^t [r1 r2; I 0; 0 I] mod 2q; H1 block is a zero check, H2 block
    // carries the message
    ModVec v0m(V.begin(), V.begin() + P.m);
    ModVec w1 = intmatT_vec_mod(sk.r1, v0m, q2);
    for (std::size_t j = 0; j < P.nk; ++j) w1[j] = (w1[j] + V[P.m + j]) % q2;
    ModVec w2 = intmatT_vec_mod(sk.r2, v0m, q2);
    for (std::size_t j = 0; j < P.nk; ++j) w2[j] = (w2[j] + V[P.m + P.nk + j]) % q2;

    auto m1 = decode_msg(pp.gad, w1);
    if (!m1) return fail(DecryptFailure::codec_failed);
    for (auto bit : *m1)
        if (bit) return fail(DecryptFailure::integrity_block);
    auto m2 = decode_msg(pp.gad, w2);
    if (!m2) return fail(DecryptFailure::codec_failed);
    return *m2;
}

// ---------------------------------------------------------------------------
// ReKeyGen

// assembled block layout of rk (rows and columns split mbar | nk | nk | nk):
//   [ I  X00 X01 X02 ]
//   [ 0  X10 X11 X12 ]
//   [ 0  X20 X21 X22 ]
//   [ 0   0   0   I  ]
inline bool rekey_structure_ok(const IntMatrix& mat, std::size_t m_bar, std::size_t nk) {
    const std::size_t W = m_bar + 3 * nk;
    if (mat.rows != W || mat.cols != W) return false;
    for (std::size_t r = 0; r < W; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            i64 v = mat.at(r, c);
            bool in_id0 = r < m_bar && c < m_bar;
            bool in_idlast = r >= m_bar + 2 * nk && c >= m_bar + 2 * nk;
            if (in_id0 || in_idlast) {
                if (v != (r == c ? 1 : 0)) return false;
            } else if (c < m_bar) {
                if (v != 0) return false; // left column strip below I
            } else if (r >= m_bar + 2 * nk) {
                if (v != 0) return false; // bottom row strip left of I
            }
        }
    return true;
}

inline ReKey rekeygen(const PublicParams& pp, const UserSecretKey& sk_i, const Identity& id_j,
                      Rng& rng) {
    const Params& P = pp.params;
    if (id_j.coeffs.size() != P.n) throw DimensionMismatch("rekeygen: identity length");
    if (id_j.is_zero()) throw ZeroIdentity();
    if (sk_i.id == id_j) throw SelfDelegation();

    ModMatrix h_i = frd_encode(pp.frd, sk_i.id);
    ModMatrix h_j = frd_encode(pp.frd, id_j);

    ModMatrix at_i_block = a_tilde_block(pp, h_i);
    ModMatrix at_i = hconcat({&pp.abar, &at_i_block}); // n x m
    ModMatrix ai1 = a_i1(pp, h_i);

    // sampling matrix [Atilde_i | A_i1] with trapdoor r1, tag H1
    TaggedMatrix samp{at_i, {ai1}, {pp.h[0]}};
    Trapdoor trap{{sk_i.r1}, P.s_extract};

    auto sample_block = [&](const PreimageSampler& sampler, const ModMatrix& target) {
        IntMatrix X(P.m + P.nk, P.nk);
        ModVec u(P.n);
        for (std::size_t c = 0; c < P.nk; ++c) {
            for (std::size_t r = 0; r < P.n; ++r) u[r] = target.at(r, c);
            IntVec col = sampler.sample(u, rng);
            for (std::size_t r = 0; r < P.m + P.nk; ++r) X.at(r, c) = col[r];
        }
        return X;
    };

    // batch targets: Abar' + H_j G; A_j1; A_j2 + Atilde_i R_i2 - H2 G
    ModMatrix t0 = add_mod(pp.abar_p, tag_times_gadget(pp.gad, h_j));
    ModMatrix t1 = a_i1(pp, h_j);
    ModMatrix t2 = sub_mod(add_mod(a_i2(pp, h_j), mat_mul_mod(at_i, sk_i.r2)),
                           tag_times_gadget(pp.gad, pp.h[1]));

    PreimageSampler sampler_rk1(samp, trap, 0, P.s_rk1, pp.gad);
    IntMatrix X0 = sample_block(sampler_rk1, t0);
    PreimageSampler sampler_rk2(samp, trap, 0, P.s_rk2, pp.gad);
    IntMatrix X1 = sample_block(sampler_rk2, t1);
    IntMatrix X2 = sample_block(sampler_rk2, t2);

    IntMatrix rk(P.width, P.width);
    for (std::size_t i = 0; i < P.m_bar; ++i) rk.at(i, i) = 1;
    for (std::size_t i = 0; i < P.nk; ++i)
        rk.at(P.m + P.nk + i, P.m + P.nk + i) = 1;
    auto place = [&](const IntMatrix& X, std::size_t col_group) {
        std::size_t coff = P.m_bar + col_group * P.nk;
        for (std::size_t r = 0; r < P.m + P.nk; ++r)
            for (std::size_t c = 0; c < P.nk; ++c) rk.at(r, coff + c) = X.at(r, c);
    };
    place(X0, 0);
    place(X1, 1);
    place(X2, 2);

    // the defining identity A_i rk = A_j must hold exactly
    ModMatrix Ai = a_full(pp, sk_i.id);
    ModMatrix Aj = a_full(pp, id_j);
    if (!(mat_mul_mod(Ai, rk) == Aj)) throw Error("rekeygen: identity A_i rk = A_j failed");
    return ReKey{sk_i.id, id_j, std::move(rk)};
}

// ---------------------------------------------------------------------------
// ReEnc

inline Ciphertext reencrypt(const ReKey& rk, const Ciphertext& ct) {
    if (ct.level != 0) throw HopLimitExceeded();
    if (!(ct.target_id == rk.from_id)) throw IdentityMismatch("ciphertext not under the re-key source");
    if (ct.b.size() != rk.mat.rows) throw DimensionMismatch("reencrypt: ciphertext length");
    ModVec b2 = vec_intmat_mod(ct.b, rk.mat, 2 * ct.q);
    return Ciphertext{1, rk.to_id, ct.q, std::move(b2)};
}

// ---------------------------------------------------------------------------
// string identities (non-normative plumbing: coordinates derived from a
// SHA-256 counter stream with rejection into [0, q))

inline Identity identity_from_string(std::string_view name, std::size_t n, u64 q) {
    Identity id{ModVec(n, 0)};
    const u64 limit = u64(-1) - (u64(-1) % q); // rejection threshold
    for (;;) {
        std::uint64_t counter = 0;
        std::size_t filled = 0;
        while (filled < n) {
            detail::Sha256 h;
            h.update(name.data(), name.size());
            std::uint8_t ctr[8];
            for (int i = 0; i < 8; ++i) ctr[i] = std::uint8_t(counter >> (8 * i));
            h.update(ctr, 8);
            auto d = h.finish();
            ++counter;
            for (int w = 0; w < 4 && filled < n; ++w) {
                u64 v = 0;
                for (int i = 0; i < 8; ++i) v |= u64(d[8 * w + i]) << (8 * i);
                if (v >= limit) continue;
                id.coeffs[filled++] = v % q;
            }
            if (counter == 0) throw Error("identity_from_string: counter wrapped");
        }
        if (!id.is_zero()) return id;
        // vanishing hash output: tweak and retry (astronomically unlikely)
        name = "retry";
    }
}

} // namespace ibupre

#endif
