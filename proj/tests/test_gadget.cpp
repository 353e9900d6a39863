#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "ibupre/gadget.hpp"
#include "ibupre/modmath.hpp"
#include "test_util.hpp"

using namespace ibupre;

namespace {

// region predicate matching P_{1/2}(q S^{-t}) with the round-half-up
// convention: -q/2 <= <S_col_j, e> < q/2 for every j
bool in_recovery_region(const Gadget& gad, const std::vector<i64>& e) {
    const std::size_t k = gad.k;
    const i64 q = i64(gad.q);
    for (std::size_t j = 0; j < k; ++j) {
        i64 t = 0;
        for (std::size_t r = 0; r < k; ++r) t += gad.S.at(r, j) * e[r];
        if (!(-q <= 2 * t && 2 * t < q)) return false;
    }
    return true;
}

// brute-force membership of v in Lambda(g^t): exists c with v = g^t c mod q
bool in_image_lattice(const Gadget& gad, const std::vector<i64>& v) {
    for (u64 c = 0; c < gad.q; ++c) {
        bool all = true;
        for (std::size_t j = 0; j < gad.k && all; ++j) {
            i64 diff = v[j] - i64(detail::mulmod_u64(gad.g[j], c, gad.q));
            if (detail::umod(diff, gad.q) != 0) all = false;
        }
        if (all) return true;
    }
    return false;
}

} // namespace

TEST_CASE("make_gadget q=5: the standard short basis, verified by cofactor expansion") {
    Gadget g = make_gadget(1, 5);
    CHECK(g.k == 3);
    CHECK(g.g == ModVec{1, 2, 4});
    IntMatrix want(3, 3);
    // columns (2,-1,0), (0,2,-1), (1,0,1) -- last is the binary digits of 5
    want.at(0, 0) = 2; want.at(1, 0) = -1; want.at(2, 0) = 0;
    want.at(0, 1) = 0; want.at(1, 1) = 2; want.at(2, 1) = -1;
    want.at(0, 2) = 1; want.at(1, 2) = 0; want.at(2, 2) = 1;
    CHECK(g.S == want);
    CHECK(testutil::det_int(g.S) == 5);
    for (std::size_t j = 0; j < 3; ++j) {
        i64 dot = 0;
        for (std::size_t r = 0; r < 3; ++r) dot += i64(g.g[r]) * g.S.at(r, j);
        CHECK(detail::umod(dot, 5) == 0);
    }
}

TEST_CASE("make_gadget q=3: k=2, S columns (2,-1),(1,1), det 3") {
    Gadget g = make_gadget(1, 3);
    CHECK(g.k == 2);
    CHECK(g.g == ModVec{1, 2});
    CHECK(g.S.at(0, 0) == 2);
    CHECK(g.S.at(1, 0) == -1);
    CHECK(g.S.at(0, 1) == 1);
    CHECK(g.S.at(1, 1) == 1);
    CHECK(testutil::det_int(g.S) == 3);
}

TEST_CASE("G (I (x) S) = 0 mod q, Kronecker structure") {
    for (auto [n, q] : std::vector<std::pair<std::size_t, u64>>{{1, 5}, {2, 13}, {3, 257}}) {
        Gadget gad = make_gadget(n, q);
        ModMatrix G = gadget_matrix(gad);
        IntMatrix IS(n * gad.k, n * gad.k);
        for (std::size_t blk = 0; blk < n; ++blk)
            for (std::size_t r = 0; r < gad.k; ++r)
                for (std::size_t c = 0; c < gad.k; ++c)
                    IS.at(blk * gad.k + r, blk * gad.k + c) = gad.S.at(r, c);
        CHECK(mat_mul_mod(G, IS).is_zero());
    }
}

TEST_CASE("E basis: exact duality qS^{-t}, block determinant q^{k-1}, columns in the image lattice") {
    for (u64 q : {3ull, 5ull, 13ull}) {
        Gadget gad = make_gadget(1, q);
        // S^t E1 = q I exactly
        IntMatrix prod = int_mat_mul(transpose(gad.S), gad.E1);
        for (std::size_t r = 0; r < gad.k; ++r)
            for (std::size_t c = 0; c < gad.k; ++c)
                CHECK(prod.at(r, c) == (r == c ? i64(q) : 0));
        // |det E1| = q^{k-1}: a basis of the image lattice, not of q Z^k
        i128 want = 1;
        for (std::size_t i = 0; i + 1 < gad.k; ++i) want *= i128(q);
        i128 d = testutil::det_int(gad.E1);
        CHECK((d == want || d == -want));
        // every column of E1 is G^t y mod q for some y (membership via solve)
        ModMatrix G = gadget_matrix(gad);
        for (std::size_t c = 0; c < gad.k; ++c) {
            ModVec col(gad.k);
            for (std::size_t r = 0; r < gad.k; ++r) col[r] = detail::umod(gad.E1.at(r, c), q);
            auto sol = solve_mod_prime(transpose(G), col);
            CHECK(sol.has_value());
        }
    }
}

TEST_CASE("g_invert: exact point and exhaustive small-case oracle at n=1, q=5") {
    Gadget gad = make_gadget(1, 5);
    const std::size_t k = gad.k;

    // b = G^t s, e = 0
    for (u64 s = 0; s < 5; ++s) {
        ModVec b = gadget_Gt(gad, {s});
        GInversion gi = g_invert(gad, b);
        CHECK(gi.s[0] == s);
        for (i64 e : gi.e) CHECK(e == 0);
    }

    // enumerate the full recovery region; it has exactly q^{k-1} = 25 points
    std::vector<std::vector<i64>> region;
    for (i64 a = -6; a <= 6; ++a)
        for (i64 b2 = -6; b2 <= 6; ++b2)
            for (i64 c = -6; c <= 6; ++c) {
                std::vector<i64> e{a, b2, c};
                if (in_recovery_region(gad, e)) region.push_back(e);
            }
    CHECK(region.size() == 25);

    for (u64 s = 0; s < 5; ++s)
        for (const auto& e : region) {
            ModVec b(k);
            for (std::size_t j = 0; j < k; ++j)
                b[j] = detail::umod(i64(detail::mulmod_u64(gad.g[j], s, 5)) + e[j], 5);
            GInversion gi = g_invert(gad, b);
            CHECK(gi.s[0] == s);
            for (std::size_t j = 0; j < k; ++j) CHECK(gi.e[j] == e[j]);
        }

    // the spec's worked example: s=3, e=(1,0,-1) -> b=(4,1,1)
    GInversion gi = g_invert(gad, ModVec{4, 1, 1});
    CHECK(gi.s[0] == 3);
    CHECK(gi.e == IntVec{1, 0, -1});
}

TEST_CASE("g_invert round trip with small errors at n=2, q=13") {
    Gadget gad = make_gadget(2, 13);
    Rng rng = Rng::from_u64(20);
    for (int rep = 0; rep < 300; ++rep) {
        ModVec s{rng.uniform_below(13), rng.uniform_below(13)};
        IntVec e(gad.n * gad.k);
        for (auto& x : e) x = i64(rng.uniform_below(3)) - 1; // |e|_inf <= 1 < q/10
        ModVec b = gadget_Gt(gad, s);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = detail::umod(i64(b[i]) + e[i], 13);
        GInversion gi = g_invert(gad, b);
        CHECK(gi.s == s);
        CHECK(gi.e == e);
    }
}

TEST_CASE("g_invert_bounded applies the caller's bound") {
    Gadget gad = make_gadget(1, 5);
    ModVec b = gadget_Gt(gad, {2});
    b[0] = (b[0] + 1) % 5;
    CHECK(g_invert_bounded(gad, b, 1).has_value());
    CHECK_FALSE(g_invert_bounded(gad, b, 0).has_value());
}

TEST_CASE("sample_g_coset: defining constraint always holds") {
    Gadget gad = make_gadget(2, 13);
    Rng rng = Rng::from_u64(21);
    double s = 9.0;
    for (int rep = 0; rep < 500; ++rep) {
        ModVec v{rng.uniform_below(13), rng.uniform_below(13)};
        IntVec x = sample_g_coset(gad, v, s, rng);
        // G x = v mod q, exact
        for (std::size_t blk = 0; blk < gad.n; ++blk) {
            i128 acc = 0;
            for (std::size_t j = 0; j < gad.k; ++j) acc += i128(gad.g[j]) * x[blk * gad.k + j];
            CHECK(detail::umod(i64(acc % 13), 13) == v[blk]);
        }
    }
}

TEST_CASE("sample_g_coset: zero-coset symmetry of the mean") {
    Gadget gad = make_gadget(1, 3);
    Rng rng = Rng::from_u64(22);
    const double s = 20.0;
    const int draws = 10000;
    std::vector<long double> mean(gad.k, 0);
    for (int i = 0; i < draws; ++i) {
        IntVec x = sample_g_coset(gad, {0}, s, rng);
        for (std::size_t j = 0; j < gad.k; ++j) mean[j] += x[j];
    }
    double se = (s / std::sqrt(2 * 3.141592653589793)) / std::sqrt(double(draws));
    for (std::size_t j = 0; j < gad.k; ++j) {
        double mj = double(mean[j] / draws);
        INFO("coordinate " << j << " mean " << mj << " se " << se);
        CHECK(std::fabs(mj) <= 5 * se);
    }
}

TEST_CASE("sample_g_coset matches brute-force coset Gaussian at n=1, q=3") {
    Gadget gad = make_gadget(1, 3);
    const double s = 7.0; // above ||S~|| r
    const std::size_t draws = 100000;
    const u64 v = 1;

    // brute-force weights over the coset within the 12s tail box
    std::map<std::vector<i64>, double> expected;
    long double total = 0;
    const i64 B = i64(12 * s);
    for (i64 x0 = -B; x0 <= B; ++x0)
        for (i64 x1 = -B; x1 <= B; ++x1) {
            if (detail::umod(x0 + 2 * x1, 3) != v) continue;
            long double w = testutil::rho(std::sqrt((long double)(x0) * x0 + (long double)(x1) * x1), s);
            expected[{x0, x1}] = double(w);
            total += w;
        }
    for (auto& [key, w] : expected) w /= double(total);

    Rng rng = Rng::from_u64(23);
    std::map<std::vector<i64>, std::size_t> counts;
    for (std::size_t i = 0; i < draws; ++i) {
        IntVec x = sample_g_coset(gad, {v}, s, rng);
        ++counts[{x[0], x[1]}];
    }
    double tv = testutil::tv_distance(counts, expected, draws);
    INFO("joint TV distance: " << tv);
    CHECK(tv < 0.05);

    // chi^2 on the same data (the gadget-level fidelity check)
    std::map<i64, std::size_t> c1;
    std::map<i64, double> e1;
    for (const auto& [key, cnt] : counts) c1[key[0]] += cnt;
    for (const auto& [key, p] : expected) e1[key[0]] += p;
    double pval = testutil::chi2_pvalue(c1, e1, draws);
    INFO("first-coordinate chi^2 p: " << pval);
    CHECK(pval > 0.001);
}

TEST_CASE("sample_g_coset rejects too-small parameters") {
    Gadget gad = make_gadget(1, 3);
    Rng rng = Rng::from_u64(24);
    CHECK_THROWS_AS(sample_g_coset(gad, {1}, 1.0, rng), ParameterTooSmall);
}

TEST_CASE("encode: zero, unit vectors, and pairwise coset distinctness at n=1 q=3") {
    Gadget gad = make_gadget(1, 3);
    const std::size_t k = gad.k;

    Bits zero(k, 0);
    for (i64 v : encode_msg(gad, zero)) CHECK(v == 0);

    for (std::size_t j = 0; j < k; ++j) {
        Bits unit(k, 0);
        unit[j] = 1;
        IntVec col = encode_msg(gad, unit);
        for (std::size_t r = 0; r < k; ++r) CHECK(col[r] == gad.E1.at(r, j));
    }

    // distinct messages stay in distinct cosets of 2 Lambda(g^t):
    // difference must not be (entrywise even and in the image lattice)
    std::vector<Bits> msgs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (std::size_t i = 0; i < msgs.size(); ++i)
        for (std::size_t j = i + 1; j < msgs.size(); ++j) {
            IntVec a = encode_msg(gad, msgs[i]), b = encode_msg(gad, msgs[j]);
            std::vector<i64> d(k);
            bool all_even = true;
            for (std::size_t t = 0; t < k; ++t) {
                d[t] = a[t] - b[t];
                if (d[t] % 2 != 0) all_even = false;
            }
            bool in_2lambda = false;
            if (all_even) {
                std::vector<i64> half(k);
                for (std::size_t t = 0; t < k; ++t) half[t] = d[t] / 2;
                in_2lambda = in_image_lattice(gad, half);
            }
            CHECK_FALSE(in_2lambda);
        }
}

TEST_CASE("decode inverts encode for all messages at n=1, q in {3,5}") {
    for (u64 q : {3ull, 5ull}) {
        Gadget gad = make_gadget(1, q);
        const std::size_t k = gad.k;
        for (std::size_t enc = 0; enc < (std::size_t(1) << k); ++enc) {
            Bits m(k);
            for (std::size_t j = 0; j < k; ++j) m[j] = (enc >> j) & 1;
            IntVec w = encode_msg(gad, m);
            ModVec w2(k);
            for (std::size_t j = 0; j < k; ++j) w2[j] = detail::umod(w[j], 2 * q);
            auto back = decode_msg(gad, w2);
            REQUIRE(back.has_value());
            CHECK(*back == m);
        }
    }
}

TEST_CASE("decode is invariant under 2 Lambda(G^t) and 2q shifts (coset-shift oracle, n=1 q=5)") {
    Gadget gad = make_gadget(1, 5);
    const std::size_t k = gad.k;
    Rng rng = Rng::from_u64(25);
    for (int rep = 0; rep < 500; ++rep) {
        Bits m(k);
        for (auto& bit : m) bit = std::uint8_t(rng.uniform_below(2));
        IntVec w = encode_msg(gad, m);
        // + 2 (G^t y mod q) + 2q z
        u64 y = rng.uniform_below(5);
        ModVec gty = gadget_Gt(gad, {y});
        ModVec shifted(k);
        for (std::size_t j = 0; j < k; ++j) {
            i64 z = i64(rng.uniform_below(7)) - 3;
            shifted[j] = detail::umod(w[j] + 2 * i64(gty[j]) + 10 * z, 10);
        }
        auto back = decode_msg(gad, shifted);
        REQUIRE(back.has_value());
        CHECK(*back == m);
    }
}

TEST_CASE("decode signals non-integral combinations (explicit E^{-1} computation, n=1 q=5)") {
    Gadget gad = make_gadget(1, 5);
    // S^t (1,0,0) = (2,0,1); 2 is not divisible by q=5, so decode must fail
    auto r = decode_msg(gad, ModVec{1, 0, 0});
    CHECK_FALSE(r.has_value());
}

TEST_CASE("make_gadget input validation") {
    CHECK_THROWS_AS(make_gadget(1, 4), InvalidModulus);  // composite
    CHECK_THROWS_AS(make_gadget(1, 2), InvalidModulus);  // below 3
    CHECK_THROWS_AS(make_gadget(0, 5), DimensionMismatch);
}
