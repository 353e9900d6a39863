// ibupre CLI: key lifecycle, file encryption, re-encryption, deterministic
// test vectors. Exit codes: 0 success, 1 usage, 2 cryptographic failure,
// 3 I/O or file-format failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "ibupre/serialize.hpp"

using namespace ibupre;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCrypto = 2;
constexpr int kExitFormat = 3;

Rng::Seed parse_seed_hex(const std::string& hex) {
    if (hex.size() > 64) throw CLI::ValidationError("--seed", "at most 64 hex characters");
    Rng::Seed seed{};
    std::string h = hex;
    if (h.size() % 2) h = "0" + h;
    for (std::size_t i = 0; i * 2 + 1 < h.size() + 1 && i < 32; ++i) {
        auto nib = [&](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw CLI::ValidationError("--seed", "invalid hex");
        };
        seed[i] = std::uint8_t(nib(h[2 * i]) * 16 + nib(h[2 * i + 1]));
    }
    return seed;
}

Rng make_rng(const std::string& seed_hex) {
    if (!seed_hex.empty()) return Rng(parse_seed_hex(seed_hex));
    Rng::Seed seed{};
    std::random_device rd;
    for (auto& b : seed) b = std::uint8_t(rd());
    return Rng(seed);
}

Params load_params_of(const std::string& pp_path, PublicParams& pp) {
    pp = deserialize_public_params(read_file(pp_path));
    return pp.params;
}

// message framing: byte blocks of floor(nk/8) bytes with PKCS#7-style
// padding in the final block; each block maps to nk bits, low bit first
std::vector<Bits> frame_message(const std::vector<std::uint8_t>& data, std::size_t nk) {
    const std::size_t block = nk / 8;
    if (block == 0) throw Error("nk too small for byte framing");
    std::vector<std::uint8_t> padded = data;
    std::size_t pad = block - (data.size() % block);
    padded.insert(padded.end(), pad, std::uint8_t(pad));
    std::vector<Bits> out;
    for (std::size_t off = 0; off < padded.size(); off += block) {
        Bits bits(nk, 0);
        for (std::size_t i = 0; i < block; ++i)
            for (int j = 0; j < 8; ++j) bits[8 * i + j] = (padded[off + i] >> j) & 1;
        out.push_back(std::move(bits));
    }
    return out;
}

std::optional<std::vector<std::uint8_t>> unframe_message(const std::vector<Bits>& blocks,
                                                         std::size_t nk) {
    const std::size_t block = nk / 8;
    std::vector<std::uint8_t> data;
    for (const auto& bits : blocks) {
        if (bits.size() != nk) return std::nullopt;
        for (std::size_t i = 8 * block; i < nk; ++i)
            if (bits[i]) return std::nullopt; // spare bits must stay clear
        for (std::size_t i = 0; i < block; ++i) {
            std::uint8_t byte = 0;
            for (int j = 0; j < 8; ++j) byte |= std::uint8_t(bits[8 * i + j]) << j;
            data.push_back(byte);
        }
    }
    if (data.empty()) return std::nullopt;
    std::uint8_t pad = data.back();
    if (pad == 0 || pad > block || pad > data.size()) return std::nullopt;
    for (std::size_t i = 0; i < pad; ++i)
        if (data[data.size() - 1 - i] != pad) return std::nullopt;
    data.resize(data.size() - pad);
    return data;
}

std::string sha_hex(const std::vector<std::uint8_t>& bytes) {
    return detail::hex_digest(detail::Sha256::digest(bytes.data(), bytes.size()));
}

std::string sha_hex_mod(const ModMatrix& m) {
    detail::ByteWriter w;
    w.mod_matrix(m);
    return sha_hex(w.buf);
}

std::string sha_hex_int(const IntMatrix& m) {
    detail::ByteWriter w;
    w.int_matrix(m);
    return sha_hex(w.buf);
}

std::string bits_string(const Bits& b) {
    std::string s;
    for (auto v : b) s.push_back(v ? '1' : '0');
    return s;
}

int run_vectors(const std::string& preset, const std::string& seed_hex, const std::string& out) {
    auto p = params_preset(preset);
    if (!p) throw CLI::ValidationError("--preset", "unknown preset");
    Rng rng = make_rng(seed_hex.empty() ? "00" : seed_hex);
    std::vector<std::string> lines;
    auto emit = [&](json j) { lines.push_back(j.dump()); };

    emit({{"type", "meta"},
          {"preset", preset},
          {"seed", seed_hex.empty() ? "00" : seed_hex},
          {"n", p->n},
          {"q", p->q},
          {"k", p->k},
          {"mbar", p->m_bar},
          {"alpha_q", p->alpha_q},
          {"level0_budget_ok", p->level0_ok},
          {"level1_budget_ok", p->level1_ok}});

    Gadget gad = make_gadget(p->n, p->q);
    json scols = json::array(), ecols = json::array();
    for (std::size_t c = 0; c < gad.k; ++c) {
        json sc = json::array(), ec = json::array();
        for (std::size_t r = 0; r < gad.k; ++r) {
            sc.push_back(gad.S.at(r, c));
            ec.push_back(gad.E1.at(r, c));
        }
        scols.push_back(sc);
        ecols.push_back(ec);
    }
    emit({{"type", "gadget"}, {"g", gad.g}, {"S_columns", scols}, {"E1_columns", ecols}});

    // codec vectors
    for (int rep = 0; rep < 3; ++rep) {
        Bits m(p->nk);
        for (auto& b : m) b = std::uint8_t(rng.uniform_below(2));
        IntVec enc = encode_msg(gad, m);
        emit({{"type", "codec"}, {"m", bits_string(m)}, {"encoded", enc}});
    }

    // gadget inversion vectors
    for (int rep = 0; rep < 3; ++rep) {
        ModVec s(p->n);
        for (auto& v : s) v = rng.uniform_below(p->q);
        IntVec e(p->nk);
        for (auto& v : e) v = i64(rng.uniform_below(5)) - 2;
        ModVec b = gadget_Gt(gad, s);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = detail::umod(i64(b[i]) + e[i], p->q);
        GInversion gi = g_invert(gad, b);
        emit({{"type", "g_invert"}, {"b", b}, {"s", gi.s}, {"e", gi.e}});
    }

    auto [pp, msk] = setup(*p, rng);
    emit({{"type", "frd"}, {"f", pp.frd.f}});
    emit({{"type", "setup"},
          {"abar_sha256", sha_hex_mod(pp.abar)},
          {"abar_prime_sha256", sha_hex_mod(pp.abar_p)},
          {"a1_sha256", sha_hex_mod(pp.a1)},
          {"a2_sha256", sha_hex_mod(pp.a2)},
          {"h_sha256",
           json::array({sha_hex_mod(pp.h[0]), sha_hex_mod(pp.h[1]), sha_hex_mod(pp.h[2]),
                        sha_hex_mod(pp.h[3])})},
          {"msk_sha256", sha_hex_int(msk.r_msk)}});

    Identity alice = identity_from_string("alice", p->n, p->q);
    json idc = json::array();
    for (u64 v : alice.coeffs) idc.push_back(v);
    ModMatrix h_alice = frd_encode(pp.frd, alice);
    json hrows = json::array();
    for (std::size_t r = 0; r < p->n; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < p->n; ++c) row.push_back(h_alice.at(r, c));
        hrows.push_back(row);
    }
    emit({{"type", "frd_encode"}, {"id", "alice"}, {"coeffs", idc}, {"H", hrows}});

    UserSecretKey sk = extract(pp, msk, alice, rng);
    emit({{"type", "extract"},
          {"id", "alice"},
          {"r1_sha256", sha_hex_int(sk.r1)},
          {"r2_sha256", sha_hex_int(sk.r2)},
          {"identity_ok", verify_user_key(pp, sk)}});

    Bits m(p->nk);
    for (auto& b : m) b = std::uint8_t(rng.uniform_below(2));
    Ciphertext ct = encrypt(pp, alice, m, rng);
    emit({{"type", "encrypt"},
          {"id", "alice"},
          {"m", bits_string(m)},
          {"ct_sha256", sha_hex(serialize(*p, std::vector<Ciphertext>{ct}))}});

    DecryptFailure why;
    auto back = decrypt(pp, sk, ct, &why);
    json dec{{"type", "decrypt"}, {"ok", back.has_value()}};
    if (back)
        dec["m"] = bits_string(*back);
    else
        dec["reason"] = to_string(why);
    emit(dec);

    std::string blob;
    for (const auto& l : lines) blob += l + "\n";
    if (out.empty()) {
        std::fputs(blob.c_str(), stdout);
    } else {
        std::vector<std::uint8_t> bytes(blob.begin(), blob.end());
        write_file_atomic(out, bytes);
    }
    return kExitOk;
}

int run_info(const std::string& in) {
    auto bytes = read_file(in);
    detail::Frame f = detail::parse_frame(bytes);
    std::printf("kind:   %s\n", to_string(f.kind));
    std::printf("n:      %zu\n", f.params.n);
    std::printf("q:      %llu\n", (unsigned long long)f.params.q);
    std::printf("k:      %zu\n", f.params.k);
    std::printf("mbar:   %zu\n", f.params.m_bar);
    std::printf("width:  %zu (ciphertext length over Z_2q)\n", f.params.width);
    std::printf("alpha_q: %llu\n", (unsigned long long)f.params.alpha_q);
    std::printf("fresh-decryption budget:        %s\n", f.params.level0_ok ? "ok" : "exceeded");
    std::printf("re-encrypted-decryption budget: %s\n", f.params.level1_ok ? "ok" : "exceeded");
    std::printf("payload: %zu bytes\n", f.payload.len);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ibupre: lattice identity-based unidirectional proxy re-encryption"};
    app.require_subcommand(1);

    // setup
    auto* c_setup = app.add_subcommand("setup", "generate public parameters and master secret");
    std::string preset = "demo", seed_hex, out_pp, out_msk;
    c_setup->add_option("--preset", preset, "parameter preset (toy|demo)")
        ->check(CLI::IsMember({"toy", "demo"}));
    c_setup->add_option("--seed", seed_hex, "hex seed (up to 64 chars); random if omitted");
    c_setup->add_option("--out-pp", out_pp, "output file for public parameters")->required();
    c_setup->add_option("--out-msk", out_msk, "output file for the master secret")->required();

    // extract
    auto* c_extract = app.add_subcommand("extract", "derive a user secret key");
    std::string x_pp, x_msk, x_id, x_out, x_seed;
    c_extract->add_option("--pp", x_pp)->required();
    c_extract->add_option("--msk", x_msk)->required();
    c_extract->add_option("--id", x_id, "identity string (hashed to Z_q^n)")->required();
    c_extract->add_option("--out", x_out)->required();
    c_extract->add_option("--seed", x_seed, "hex seed; random if omitted");

    // encrypt
    auto* c_encrypt = app.add_subcommand("encrypt", "encrypt a file to an identity");
    std::string e_pp, e_id, e_in, e_out, e_seed;
    c_encrypt->add_option("--pp", e_pp)->required();
    c_encrypt->add_option("--id", e_id)->required();
    c_encrypt->add_option("--in", e_in, "plaintext file")->required();
    c_encrypt->add_option("--out", e_out, "ciphertext file")->required();
    c_encrypt->add_option("--seed", e_seed, "hex seed; random if omitted");

    // decrypt
    auto* c_decrypt = app.add_subcommand("decrypt", "decrypt a ciphertext file");
    std::string d_pp, d_sk, d_in, d_out;
    c_decrypt->add_option("--pp", d_pp)->required();
    c_decrypt->add_option("--sk", d_sk)->required();
    c_decrypt->add_option("--in", d_in)->required();
    c_decrypt->add_option("--out", d_out, "recovered plaintext file")->required();

    // rekeygen
    auto* c_rekey = app.add_subcommand("rekeygen", "generate a re-encryption key");
    std::string r_pp, r_sk, r_from, r_to, r_out, r_seed;
    c_rekey->add_option("--pp", r_pp)->required();
    c_rekey->add_option("--sk", r_sk, "delegator secret key")->required();
    c_rekey->add_option("--from", r_from, "delegator identity string")->required();
    c_rekey->add_option("--to", r_to, "delegatee identity string")->required();
    c_rekey->add_option("--out", r_out)->required();
    c_rekey->add_option("--seed", r_seed, "hex seed; random if omitted");

    // reencrypt
    auto* c_reenc = app.add_subcommand("reencrypt", "transform a ciphertext with a re-key");
    std::string t_rk, t_in, t_out;
    c_reenc->add_option("--rk", t_rk)->required();
    c_reenc->add_option("--in", t_in)->required();
    c_reenc->add_option("--out", t_out)->required();

    // vectors
    auto* c_vec = app.add_subcommand("vectors", "emit deterministic test vectors (JSON lines)");
    std::string v_preset = "toy", v_seed = "00", v_out;
    c_vec->add_option("--preset", v_preset)->check(CLI::IsMember({"toy", "demo"}));
    c_vec->add_option("--seed", v_seed, "hex seed (deterministic output)");
    c_vec->add_option("--out", v_out, "output file (stdout if omitted)");

    // info
    auto* c_info = app.add_subcommand("info", "print a parsed artifact header");
    std::string i_in;
    c_info->add_option("--in", i_in)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_setup) {
            auto p = params_preset(preset);
            Rng rng = make_rng(seed_hex);
            auto [pp, msk] = setup(*p, rng);
            write_file_atomic(out_pp, serialize(pp));
            write_file_atomic(out_msk, serialize(*p, msk));
            std::printf("wrote %s (%s) and %s\n", out_pp.c_str(), preset.c_str(), out_msk.c_str());
            return kExitOk;
        }
        if (*c_extract) {
            PublicParams pp;
            Params P = load_params_of(x_pp, pp);
            MasterSecret msk = deserialize_master_secret(read_file(x_msk), pp);
            Identity id = identity_from_string(x_id, P.n, P.q);
            Rng rng = make_rng(x_seed);
            UserSecretKey sk = extract(pp, msk, id, rng);
            write_file_atomic(x_out, serialize(P, sk));
            std::printf("wrote %s for identity \"%s\"\n", x_out.c_str(), x_id.c_str());
            return kExitOk;
        }
        if (*c_encrypt) {
            PublicParams pp;
            Params P = load_params_of(e_pp, pp);
            Identity id = identity_from_string(e_id, P.n, P.q);
            auto data = read_file(e_in);
            Rng rng = make_rng(e_seed);
            std::vector<Ciphertext> cts;
            for (const Bits& m : frame_message(data, P.nk)) cts.push_back(encrypt(pp, id, m, rng));
            write_file_atomic(e_out, serialize(P, cts));
            std::printf("wrote %zu ciphertext block(s) to %s\n", cts.size(), e_out.c_str());
            return kExitOk;
        }
        if (*c_decrypt) {
            PublicParams pp;
            Params P = load_params_of(d_pp, pp);
            UserSecretKey sk = deserialize_user_secret(read_file(d_sk), pp);
            auto cts = deserialize_ciphertexts(read_file(d_in), P);
            std::vector<Bits> blocks;
            for (std::size_t i = 0; i < cts.size(); ++i) {
                DecryptFailure why;
                auto m = decrypt(pp, sk, cts[i], &why);
                if (!m) {
                    std::fprintf(stderr, "decryption failed on block %zu: %s\n", i, to_string(why));
                    return kExitCrypto;
                }
                blocks.push_back(std::move(*m));
            }
            auto data = unframe_message(blocks, P.nk);
            if (!data) {
                std::fprintf(stderr, "decryption failed: invalid message padding\n");
                return kExitCrypto;
            }
            write_file_atomic(d_out, *data);
            std::printf("wrote %zu plaintext byte(s) to %s\n", data->size(), d_out.c_str());
            return kExitOk;
        }
        if (*c_rekey) {
            PublicParams pp;
            Params P = load_params_of(r_pp, pp);
            UserSecretKey sk = deserialize_user_secret(read_file(r_sk), pp);
            Identity from = identity_from_string(r_from, P.n, P.q);
            Identity to = identity_from_string(r_to, P.n, P.q);
            if (!(sk.id == from)) {
                std::fprintf(stderr, "secret key does not belong to --from identity\n");
                return kExitCrypto;
            }
            Rng rng = make_rng(r_seed);
            ReKey rk = rekeygen(pp, sk, to, rng);
            write_file_atomic(r_out, serialize(P, rk));
            std::printf("wrote re-encryption key %s -> %s to %s\n", r_from.c_str(), r_to.c_str(),
                        r_out.c_str());
            return kExitOk;
        }
        if (*c_reenc) {
            auto rk_bytes = read_file(t_rk);
            detail::Frame f = detail::parse_frame(rk_bytes);
            Params P = f.params;
            ReKey rk = deserialize_rekey(rk_bytes, P);
            auto cts = deserialize_ciphertexts(read_file(t_in), P);
            std::vector<Ciphertext> out;
            for (const auto& ct : cts) out.push_back(reencrypt(rk, ct));
            write_file_atomic(t_out, serialize(P, out));
            std::printf("re-encrypted %zu block(s) to %s\n", out.size(), t_out.c_str());
            return kExitOk;
        }
        if (*c_vec) return run_vectors(v_preset, v_seed, v_out);
        if (*c_info) return run_info(i_in);
    } catch (const HopLimitExceeded& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCrypto;
    } catch (const IdentityMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCrypto;
    } catch (const ZeroIdentity& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCrypto;
    } catch (const SelfDelegation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCrypto;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    }
    return kExitUsage;
}
