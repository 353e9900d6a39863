// ibupre/trapdoor.hpp -- G-trapdoor lifecycle: generation, LWE inversion,
// Gaussian preimage sampling on cosets of the public matrix, and trapdoor
// delegation. Tagged matrices follow the generalized block form
//   [A0 | A1 | ... ] [R1 R2 ...; I 0; 0 I] = [H1 G | H2 G | ...].
#ifndef IBUPRE_TRAPDOOR_HPP
#define IBUPRE_TRAPDOOR_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ibupre/errors.hpp"
#include "ibupre/gadget.hpp"
#include "ibupre/modmath.hpp"
#include "ibupre/rng.hpp"
#include "ibupre/sampler.hpp"

namespace ibupre {

struct TaggedMatrix {
    ModMatrix base;                // n x w0
    std::vector<ModMatrix> blocks; // each n x nk
    std::vector<ModMatrix> tags;   // each n x n; invertible or zero

    std::size_t n() const { return base.rows; }
    u64 q() const { return base.modulus; }
    std::size_t base_width() const { return base.cols; }
    std::size_t block_width() const { return blocks.empty() ? 0 : blocks[0].cols; }
    std::size_t width() const {
        std::size_t w = base.cols;
        for (const auto& b : blocks) w += b.cols;
        return w;
    }

    ModMatrix concat() const {
        std::vector<const ModMatrix*> parts{&base};
        for (const auto& b : blocks) parts.push_back(&b);
        return hconcat(parts);
    }
};

struct Trapdoor {
    std::vector<IntMatrix> r_blocks; // each w0 x nk
    double gauss_param = 0.0;        // parameter the entries were sampled at
};

// ---------------------------------------------------------------------------
// generation

// A = [abar | -abar R + H G] with R ~ D_{Z,r}^{m x nk}; the identity
// A [R; I] = H G holds exactly by construction (H may be zero).
inline std::pair<TaggedMatrix, Trapdoor> trap_gen(const ModMatrix& abar, const ModMatrix& tag,
                                                  const Gadget& gad, double r_param, Rng& rng) {
    const std::size_t nk = gad.n * gad.k;
    if (abar.rows != gad.n || abar.modulus != gad.q) throw DimensionMismatch("trap_gen: abar");
    if (abar.cols < nk) throw DimensionMismatch("trap_gen: need width >= nk");
    IntMatrix R = sample_z_matrix(abar.cols, nk, {r_param, 0.0}, rng);
    ModMatrix block = sub_mod(tag_times_gadget(gad, tag), mat_mul_mod(abar, R));
    TaggedMatrix A{abar, {std::move(block)}, {tag}};
    return {std::move(A), Trapdoor{{std::move(R)}, r_param}};
}

// exact check of the defining block identity
inline bool verify_trapdoor(const TaggedMatrix& A, const Trapdoor& R, const Gadget& gad) {
    if (A.blocks.size() != R.r_blocks.size()) return false;
    for (std::size_t i = 0; i < A.blocks.size(); ++i) {
        ModMatrix lhs = add_mod(mat_mul_mod(A.base, R.r_blocks[i]), A.blocks[i]);
        if (!(lhs == tag_times_gadget(gad, A.tags[i]))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// trapdoor quality

// largest singular value by power iteration (30 rounds, fixed start)
inline double s1_estimate(const IntMatrix& m, int iters = 30) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    std::vector<double> v(m.cols, 1.0), w(m.rows);
    double s1 = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (std::size_t r = 0; r < m.rows; ++r) {
            double acc = 0;
            for (std::size_t c = 0; c < m.cols; ++c) acc += double(m.at(r, c)) * v[c];
            w[r] = acc;
        }
        std::vector<double> u(m.cols, 0.0);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) u[c] += double(m.at(r, c)) * w[r];
        double norm = 0;
        for (double x : u) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0) return 0.0;
        s1 = std::sqrt(norm); // ||M^t M v|| ~ s1^2 for unit v
        for (std::size_t c = 0; c < m.cols; ++c) v[c] = u[c] / norm;
    }
    return s1;
}

inline double gadget_sampling_width(std::size_t n) { return std::sqrt(6.0) * smoothing_r(n); }

// smallest admissible preimage parameter for a trapdoor block: the
// perturbation covariance (s^2 - r^2) I - sG^2 [R;I][R;I]^t must stay
// positive definite; 1.2 margin on the boundary.
inline double s_min(const IntMatrix& r_block, std::size_t n) {
    double s1 = s1_estimate(r_block);
    double sg = gadget_sampling_width(n);
    double r = smoothing_r(n);
    return 1.2 * std::sqrt((s1 * s1 + 1.0) * sg * sg + r * r);
}

// a-priori bound used to pick scheme parameters before any matrix exists
inline double s_min_estimate(std::size_t rows, std::size_t cols, double entry_param, std::size_t n) {
    double sigma = entry_param / std::sqrt(2.0 * 3.141592653589793);
    double s1 = sigma * (std::sqrt(double(rows)) + std::sqrt(double(cols)) + 6.0);
    double sg = gadget_sampling_width(n);
    double r = smoothing_r(n);
    return 1.2 * std::sqrt((s1 * s1 + 1.0) * sg * sg + r * r);
}

// ---------------------------------------------------------------------------
// LWE inversion

struct LweInversion {
    ModVec s; // length n
    IntVec e; // length width(A), centered representatives
};

// Invert b = A^t s + e mod q relative to the invertible tag at tag_index:
// compress by the trapdoor stack column, invert the gadget, undo the tag,
// and recompute e = b - A^t s. Exact whenever the compressed error lies in
// the per-block recovery region of the gadget basis.
inline std::optional<LweInversion> invert_lwe(const TaggedMatrix& A, const Trapdoor& R,
                                              const Gadget& gad, const ModVec& b,
                                              std::size_t tag_index,
                                              std::optional<i64> e_bound = std::nullopt) {
    const std::size_t w0 = A.base_width(), nk = gad.n * gad.k;
    if (b.size() != A.width()) throw DimensionMismatch("invert_lwe: b length");
    if (tag_index >= A.blocks.size()) throw DimensionMismatch("invert_lwe: tag index");
    const u64 q = gad.q;

    // b' = R_i^t b0 + b_i mod q
    ModVec b0(b.begin(), b.begin() + w0);
    ModVec bp = intmatT_vec_mod(R.r_blocks[tag_index], b0, q);
    std::size_t off = w0 + tag_index * nk;
    for (std::size_t j = 0; j < nk; ++j) bp[j] = (bp[j] + b[off + j]) % q;

    GInversion gi = g_invert(gad, bp);

    auto ht_inv = invert_mod(transpose(A.tags[tag_index]));
    if (!ht_inv) return std::nullopt;
    ModVec s = mat_vec_mod(*ht_inv, gi.s);

    ModMatrix Afull = A.concat();
    ModVec ats = matT_vec_mod(Afull, s);
    IntVec e(b.size());
    u64 half = q / 2;
    for (std::size_t i = 0; i < b.size(); ++i) {
        u64 d = (b[i] + q - ats[i]) % q;
        e[i] = d > half ? i64(d) - i64(q) : i64(d);
    }
    if (e_bound) {
        for (i64 x : e)
            if (x > *e_bound || x < -*e_bound) return std::nullopt;
    }
    return LweInversion{std::move(s), std::move(e)};
}

// ---------------------------------------------------------------------------
// preimage sampling

// Samples x with A x = u mod q, close to D_{L_u^perp(A), s}, by the
// perturbation method: a rounded continuous perturbation with covariance
// (s^2 - r^2) I - sG^2 T T^t plus a gadget-coset sample pushed through
// T = [R_i; ...; I; ...]. Precomputes the Cholesky factor once so bulk
// callers (del_trap, re-key generation) pay it a single time.
class PreimageSampler {
  public:
    PreimageSampler(const TaggedMatrix& A, const Trapdoor& R, std::size_t tag_index,
                    double s, const Gadget& gad)
        : A_(A), gad_(gad), tag_index_(tag_index), s_(s) {
        const std::size_t W = A.width(), w0 = A.base_width(), nk = gad.n * gad.k;
        if (tag_index >= A.blocks.size()) throw DimensionMismatch("sample_pre: tag index");
        const IntMatrix& Ri = R.r_blocks[tag_index];
        if (Ri.rows != w0 || Ri.cols != nk) throw DimensionMismatch("sample_pre: trapdoor shape");

        double smin = s_min(Ri, gad.n);
        if (s < smin) throw ParameterTooSmall("sample_pre: s below trapdoor quality bound");

        r_round_ = smoothing_r(gad.n);
        sg_ = gadget_sampling_width(gad.n);

        auto hinv = invert_mod(A.tags[tag_index]);
        if (!hinv) throw Error("sample_pre: tag not invertible");
        h_inv_ = *hinv;

        Afull_ = A.concat();
        block_off_ = w0 + tag_index * nk;
        Ri_ = Ri;

        // dense covariance (s^2 - r^2) I - sG^2 T T^t, T = [R; 0...; I; 0...].
        // Widths follow the rho_s convention, so the matrix is scaled by
        // 1/(2 pi) below to become a covariance in variance units.
        const double diag = s * s - r_round_ * r_round_;
        const double sg2 = sg_ * sg_;
        std::vector<double> cov(W * W, 0.0);
        for (std::size_t i = 0; i < W; ++i) cov[i * W + i] = diag;
        for (std::size_t i = 0; i < w0; ++i)
            for (std::size_t j = 0; j < w0; ++j) {
                double acc = 0;
                for (std::size_t t = 0; t < nk; ++t) acc += double(Ri.at(i, t)) * Ri.at(j, t);
                cov[i * W + j] -= sg2 * acc;
            }
        for (std::size_t i = 0; i < w0; ++i)
            for (std::size_t t = 0; t < nk; ++t) {
                cov[i * W + (block_off_ + t)] -= sg2 * Ri.at(i, t);
                cov[(block_off_ + t) * W + i] -= sg2 * Ri.at(i, t);
            }
        for (std::size_t t = 0; t < nk; ++t) cov[(block_off_ + t) * W + (block_off_ + t)] -= sg2;
        const double inv2pi = 1.0 / (2.0 * 3.141592653589793);
        for (auto& v : cov) v *= inv2pi;

        // Cholesky; failure means the parameter is too small for this R
        chol_.assign(W * W, 0.0);
        for (std::size_t i = 0; i < W; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = cov[i * W + j];
                for (std::size_t t = 0; t < j; ++t) acc -= chol_[i * W + t] * chol_[j * W + t];
                if (i == j) {
                    if (acc <= 0) throw ParameterTooSmall("sample_pre: covariance not positive definite");
                    chol_[i * W + i] = std::sqrt(acc);
                } else {
                    chol_[i * W + j] = acc / chol_[j * W + j];
                }
            }
        }
    }

    IntVec sample(const ModVec& u, Rng& rng) const {
        const std::size_t W = A_.width(), w0 = A_.base_width(), nk = gad_.n * gad_.k;
        const u64 q = gad_.q;
        if (u.size() != gad_.n) throw DimensionMismatch("sample_pre: coset length");

        // perturbation: p = round(L g)
        std::vector<double> gvec(W);
        for (auto& x : gvec) x = rng.normal();
        IntVec p(W);
        for (std::size_t i = 0; i < W; ++i) {
            double acc = 0;
            for (std::size_t j = 0; j <= i; ++j) acc += chol_[i * W + j] * gvec[j];
            p[i] = sample_z({r_round_, acc}, rng);
        }

        // residual syndrome v = H^{-1}(u - A p), then gadget-coset sample
        ModVec Ap = mat_vec_mod(Afull_, reduce_vec(p, q));
        ModVec diff(gad_.n);
        for (std::size_t i = 0; i < gad_.n; ++i) diff[i] = (u[i] % q + q - Ap[i]) % q;
        ModVec v = mat_vec_mod(h_inv_, diff);
        IntVec z = sample_g_coset(gad_, v, sg_, rng);

        // x = p + T z
        IntVec x = p;
        for (std::size_t i = 0; i < w0; ++i) {
            i128 acc = x[i];
            for (std::size_t t = 0; t < nk; ++t) acc += i128(Ri_.at(i, t)) * z[t];
            x[i] = i64(acc);
        }
        for (std::size_t t = 0; t < nk; ++t) x[block_off_ + t] += z[t];

        // the coset constraint must hold exactly
        ModVec Ax = mat_vec_mod(Afull_, reduce_vec(x, q));
        for (std::size_t i = 0; i < gad_.n; ++i)
            if (Ax[i] != u[i] % q) throw Error("sample_pre: coset constraint violated");
        return x;
    }

  private:
    const TaggedMatrix& A_;
    const Gadget& gad_;
    std::size_t tag_index_;
    double s_;
    double r_round_ = 0, sg_ = 0;
    std::size_t block_off_ = 0;
    ModMatrix h_inv_;
    ModMatrix Afull_;
    IntMatrix Ri_;
    std::vector<double> chol_;
};

inline IntVec sample_pre(const TaggedMatrix& A, const Trapdoor& R, std::size_t tag_index,
                         const ModVec& u, double s, const Gadget& gad, Rng& rng) {
    return PreimageSampler(A, R, tag_index, s, gad).sample(u, rng);
}

// ---------------------------------------------------------------------------
// delegation

// Given A with trapdoor R and an appended block a1, sample R' column-wise on
// the cosets of (H' G - a1) so that A R' = H' G - a1 exactly; R' is then a
// trapdoor with tag H' for the extended matrix [A | a1].
inline IntMatrix del_trap(const TaggedMatrix& A, const Trapdoor& R, const ModMatrix& a1,
                          const ModMatrix& h_new, double s, const Gadget& gad, Rng& rng) {
    const std::size_t nk = gad.n * gad.k;
    if (a1.rows != gad.n || a1.cols != nk || a1.modulus != gad.q)
        throw DimensionMismatch("del_trap: appended block");
    std::size_t tag_index = 0;
    // use the first invertible tag of A for sampling
    for (; tag_index < A.tags.size(); ++tag_index)
        if (invert_mod(A.tags[tag_index])) break;
    if (tag_index == A.tags.size()) throw Error("del_trap: no invertible tag");

    PreimageSampler sampler(A, R, tag_index, s, gad);
    ModMatrix target = sub_mod(tag_times_gadget(gad, h_new), a1);
    IntMatrix rp(A.width(), nk);
    ModVec u(gad.n);
    for (std::size_t c = 0; c < nk; ++c) {
        for (std::size_t r = 0; r < gad.n; ++r) u[r] = target.at(r, c);
        IntVec col = sampler.sample(u, rng);
        for (std::size_t r = 0; r < A.width(); ++r) rp.at(r, c) = col[r];
    }
    return rp;
}

} // namespace ibupre

#endif
