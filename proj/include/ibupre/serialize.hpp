// ibupre/serialize.hpp -- the on-disk artifact format
//
//   magic "IBUPRE01" | kind (1 byte) | n q k mbar (u64 LE each) | payload |
//   SHA-256 checksum of all preceding bytes (32 bytes)
//
// Payload entries are u64 little-endian canonical residues; signed
// small-entry matrices are stored as two's-complement 64-bit. Readers verify
// the checksum and re-validate type invariants before returning objects.
#ifndef IBUPRE_SERIALIZE_HPP
#define IBUPRE_SERIALIZE_HPP

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ibupre/detail/sha256.hpp"
#include "ibupre/errors.hpp"
#include "ibupre/scheme.hpp"

namespace ibupre {

enum class ArtifactKind : std::uint8_t {
    public_params = 1,
    master_secret = 2,
    user_secret = 3,
    ciphertext = 4,
    rekey = 5,
    params = 6,
};

inline const char* to_string(ArtifactKind k) {
    switch (k) {
        case ArtifactKind::public_params: return "public-params";
        case ArtifactKind::master_secret: return "master-secret";
        case ArtifactKind::user_secret: return "user-secret-key";
        case ArtifactKind::ciphertext: return "ciphertext";
        case ArtifactKind::rekey: return "re-encryption-key";
        case ArtifactKind::params: return "params";
    }
    return "?";
}

namespace detail {

inline constexpr char kMagic[8] = {'I', 'B', 'U', 'P', 'R', 'E', '0', '1'};

struct ByteWriter {
    std::vector<std::uint8_t> buf;

    void u8(std::uint8_t v) { buf.push_back(v); }
    void u64le(u64 v) {
        for (int i = 0; i < 8; ++i) buf.push_back(std::uint8_t(v >> (8 * i)));
    }
    void i64le(i64 v) { u64le(u64(v)); }
    void mod_matrix(const ModMatrix& m) {
        u64le(m.rows);
        u64le(m.cols);
        u64le(m.modulus);
        for (u64 v : m.a) u64le(v);
    }
    void int_matrix(const IntMatrix& m) {
        u64le(m.rows);
        u64le(m.cols);
        for (i64 v : m.a) i64le(v);
    }
    void mod_vec(const ModVec& v) {
        u64le(v.size());
        for (u64 x : v) u64le(x);
    }
};

struct ByteReader {
    const std::uint8_t* p;
    std::size_t len, off = 0;

    void need(std::size_t n) const {
        if (off + n > len) throw InvariantViolation("truncated payload");
    }
    std::uint8_t u8() {
        need(1);
        return p[off++];
    }
    u64 u64le() {
        need(8);
        u64 v = 0;
        for (int i = 0; i < 8; ++i) v |= u64(p[off + i]) << (8 * i);
        off += 8;
        return v;
    }
    i64 i64le() { return i64(u64le()); }
    ModMatrix mod_matrix() {
        u64 r = u64le(), c = u64le(), m = u64le();
        if (m == 0 || m > kMaxModulus || r > (1u << 20) || c > (1u << 20))
            throw InvariantViolation("matrix header out of range");
        ModMatrix z(std::size_t(r), std::size_t(c), m);
        for (auto& v : z.a) {
            v = u64le();
            if (v >= m) throw InvariantViolation("entry not a canonical residue");
        }
        return z;
    }
    IntMatrix int_matrix() {
        u64 r = u64le(), c = u64le();
        if (r > (1u << 20) || c > (1u << 20)) throw InvariantViolation("matrix header out of range");
        IntMatrix z{std::size_t(r), std::size_t(c)};
        for (auto& v : z.a) v = i64le();
        return z;
    }
    ModVec mod_vec(u64 modulus) {
        u64 nn = u64le();
        if (nn > (1u << 26)) throw InvariantViolation("vector too long");
        ModVec v(std::size_t(nn), 0);
        for (auto& x : v) {
            x = u64le();
            if (x >= modulus) throw InvariantViolation("entry not a canonical residue");
        }
        return v;
    }
    void done() const {
        if (off != len) throw InvariantViolation("trailing bytes in payload");
    }
};

inline std::vector<std::uint8_t> frame(ArtifactKind kind, const Params& p,
                                       const std::vector<std::uint8_t>& payload) {
    ByteWriter w;
    w.buf.insert(w.buf.end(), kMagic, kMagic + 8);
    w.u8(std::uint8_t(kind));
    w.u64le(p.n);
    w.u64le(p.q);
    w.u64le(p.k);
    w.u64le(p.m_bar);
    w.buf.insert(w.buf.end(), payload.begin(), payload.end());
    auto digest = Sha256::digest(w.buf.data(), w.buf.size());
    w.buf.insert(w.buf.end(), digest.begin(), digest.end());
    return w.buf;
}

struct Frame {
    ArtifactKind kind;
    Params params; // reconstructed via params_new(n, q, mbar)
    ByteReader payload;
};

inline Frame parse_frame(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 + 1 + 32 + 32) throw BadMagic();
    if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw BadMagic();
    auto digest = Sha256::digest(bytes.data(), bytes.size() - 32);
    if (std::memcmp(digest.data(), bytes.data() + bytes.size() - 32, 32) != 0)
        throw ChecksumMismatch();
    std::uint8_t kind = bytes[8];
    if (kind < 1 || kind > 6) throw KindMismatch("unknown kind byte");
    ByteReader hdr{bytes.data() + 9, 32};
    u64 n = hdr.u64le(), q = hdr.u64le(), k = hdr.u64le(), mbar = hdr.u64le();
    Params p = params_new(std::size_t(n), q, std::size_t(mbar));
    if (p.k != k) throw InvariantViolation("header k inconsistent with q");
    ByteReader payload{bytes.data() + 9 + 32, bytes.size() - 9 - 32 - 32};
    return Frame{ArtifactKind(kind), p, payload};
}

} // namespace detail

// ---------------------------------------------------------------------------
// per-kind encoders

inline std::vector<std::uint8_t> serialize(const Params& p) {
    return detail::frame(ArtifactKind::params, p, {});
}

inline std::vector<std::uint8_t> serialize(const PublicParams& pp) {
    detail::ByteWriter w;
    w.mod_vec(pp.frd.f);
    w.mod_matrix(pp.abar);
    w.mod_matrix(pp.abar_p);
    w.mod_matrix(pp.a1);
    w.mod_matrix(pp.a2);
    for (const auto& h : pp.h) w.mod_matrix(h);
    return detail::frame(ArtifactKind::public_params, pp.params, w.buf);
}

inline std::vector<std::uint8_t> serialize(const Params& p, const MasterSecret& msk) {
    detail::ByteWriter w;
    w.int_matrix(msk.r_msk);
    return detail::frame(ArtifactKind::master_secret, p, w.buf);
}

inline std::vector<std::uint8_t> serialize(const Params& p, const UserSecretKey& sk) {
    detail::ByteWriter w;
    w.mod_vec(sk.id.coeffs);
    w.int_matrix(sk.r1);
    w.int_matrix(sk.r2);
    return detail::frame(ArtifactKind::user_secret, p, w.buf);
}

inline std::vector<std::uint8_t> serialize(const Params& p, const std::vector<Ciphertext>& cts) {
    detail::ByteWriter w;
    w.u64le(cts.size());
    for (const auto& ct : cts) {
        w.u64le(ct.level);
        w.mod_vec(ct.target_id.coeffs);
        w.mod_vec(ct.b);
    }
    return detail::frame(ArtifactKind::ciphertext, p, w.buf);
}

inline std::vector<std::uint8_t> serialize(const Params& p, const ReKey& rk) {
    detail::ByteWriter w;
    w.mod_vec(rk.from_id.coeffs);
    w.mod_vec(rk.to_id.coeffs);
    w.int_matrix(rk.mat);
    return detail::frame(ArtifactKind::rekey, p, w.buf);
}

// ---------------------------------------------------------------------------
// per-kind decoders (invariants re-validated)

inline detail::Frame expect_kind(const std::vector<std::uint8_t>& bytes, ArtifactKind want) {
    detail::Frame f = detail::parse_frame(bytes);
    if (f.kind != want)
        throw KindMismatch(std::string("wanted ") + to_string(want) + ", found " + to_string(f.kind));
    return f;
}

inline Params deserialize_params(const std::vector<std::uint8_t>& bytes) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::params);
    f.payload.done();
    return f.params;
}

inline PublicParams deserialize_public_params(const std::vector<std::uint8_t>& bytes) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::public_params);
    PublicParams pp;
    pp.params = f.params;
    pp.gad = make_gadget(f.params.n, f.params.q);
    ModVec fpoly = f.payload.mod_vec(f.params.q);
    if (fpoly.size() != f.params.n + 1 || fpoly.back() != 1)
        throw InvariantViolation("frd polynomial must be monic of degree n");
    if (!detail::irreducible(fpoly, f.params.q))
        throw InvariantViolation("frd polynomial not irreducible");
    pp.frd = FrdContext{f.params.n, f.params.q, std::move(fpoly)};
    pp.abar = f.payload.mod_matrix();
    pp.abar_p = f.payload.mod_matrix();
    pp.a1 = f.payload.mod_matrix();
    pp.a2 = f.payload.mod_matrix();
    for (auto& h : pp.h) h = f.payload.mod_matrix();
    f.payload.done();

    const Params& P = pp.params;
    auto shape = [](const ModMatrix& m, std::size_t r, std::size_t c, u64 q) {
        return m.rows == r && m.cols == c && m.modulus == q;
    };
    if (!shape(pp.abar, P.n, P.m_bar, P.q) || !shape(pp.abar_p, P.n, P.nk, P.q) ||
        !shape(pp.a1, P.n, P.nk, P.q) || !shape(pp.a2, P.n, P.nk, P.q))
        throw InvariantViolation("public matrix shape");
    for (const auto& h : pp.h) {
        if (!shape(h, P.n, P.n, P.q)) throw InvariantViolation("tag shape");
        if (!invert_mod(h)) throw InvariantViolation("tag not invertible");
    }
    return pp;
}

// msk validity (Abar R = -Abar') is a joint property with the public
// parameters, so the reader takes them explicitly
inline MasterSecret deserialize_master_secret(const std::vector<std::uint8_t>& bytes,
                                              const PublicParams& pp) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::master_secret);
    MasterSecret msk{f.payload.int_matrix()};
    f.payload.done();
    if (f.params.q != pp.params.q || f.params.n != pp.params.n ||
        f.params.m_bar != pp.params.m_bar)
        throw InvariantViolation("master secret header mismatch");
    if (!verify_master_secret(pp, msk))
        throw InvariantViolation("master secret does not match public parameters");
    return msk;
}

inline UserSecretKey deserialize_user_secret(const std::vector<std::uint8_t>& bytes,
                                             const PublicParams& pp) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::user_secret);
    UserSecretKey sk;
    sk.id = Identity{f.payload.mod_vec(f.params.q)};
    sk.r1 = f.payload.int_matrix();
    sk.r2 = f.payload.int_matrix();
    f.payload.done();
    if (f.params.q != pp.params.q || f.params.n != pp.params.n ||
        f.params.m_bar != pp.params.m_bar)
        throw InvariantViolation("user key header mismatch");
    if (!verify_user_key(pp, sk))
        throw InvariantViolation("user key does not satisfy the extraction identity");
    return sk;
}

inline std::vector<Ciphertext> deserialize_ciphertexts(const std::vector<std::uint8_t>& bytes,
                                                       const Params& params) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::ciphertext);
    if (f.params.q != params.q || f.params.n != params.n || f.params.m_bar != params.m_bar)
        throw InvariantViolation("ciphertext header mismatch");
    u64 count = f.payload.u64le();
    if (count > (1u << 20)) throw InvariantViolation("ciphertext count out of range");
    std::vector<Ciphertext> cts;
    cts.reserve(std::size_t(count));
    for (u64 i = 0; i < count; ++i) {
        Ciphertext ct;
        u64 level = f.payload.u64le();
        if (level > 1) throw InvariantViolation("hop level out of range");
        ct.level = std::uint32_t(level);
        ct.target_id = Identity{f.payload.mod_vec(params.q)};
        ct.q = params.q;
        ct.b = f.payload.mod_vec(2 * params.q);
        if (ct.target_id.coeffs.size() != params.n || ct.target_id.is_zero())
            throw InvariantViolation("ciphertext identity");
        if (ct.b.size() != params.width) throw InvariantViolation("ciphertext length");
        cts.push_back(std::move(ct));
    }
    f.payload.done();
    return cts;
}

inline ReKey deserialize_rekey(const std::vector<std::uint8_t>& bytes, const Params& params) {
    detail::Frame f = expect_kind(bytes, ArtifactKind::rekey);
    if (f.params.q != params.q || f.params.n != params.n || f.params.m_bar != params.m_bar)
        throw InvariantViolation("re-key header mismatch");
    ReKey rk;
    rk.from_id = Identity{f.payload.mod_vec(params.q)};
    rk.to_id = Identity{f.payload.mod_vec(params.q)};
    rk.mat = f.payload.int_matrix();
    f.payload.done();
    if (rk.from_id.coeffs.size() != params.n || rk.to_id.coeffs.size() != params.n ||
        rk.from_id.is_zero() || rk.to_id.is_zero() || rk.from_id == rk.to_id)
        throw InvariantViolation("re-key identities");
    if (!rekey_structure_ok(rk.mat, params.m_bar, params.nk))
        throw InvariantViolation("re-key block structure");
    return rk;
}

// ---------------------------------------------------------------------------
// atomic file I/O

inline void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::string tmp = path + ".tmp";
    std::FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) throw Error("cannot open for writing: " + tmp);
    std::size_t written = std::fwrite(bytes.data(), 1, bytes.size(), fp);
    bool ok = (written == bytes.size()) && (std::fclose(fp) == 0);
    if (!ok) {
        std::remove(tmp.c_str());
        throw Error("short write: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw Error("rename failed: " + path);
    }
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error("cannot open for reading: " + path);
    std::fseek(fp, 0, SEEK_END);
    long sz = std::ftell(fp);
    std::fseek(fp, 0, SEEK_SET);
    std::vector<std::uint8_t> bytes(sz > 0 ? std::size_t(sz) : 0);
    std::size_t got = bytes.empty() ? 0 : std::fread(bytes.data(), 1, bytes.size(), fp);
    std::fclose(fp);
    if (got != bytes.size()) throw Error("short read: " + path);
    return bytes;
}

} // namespace ibupre

#endif
