#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include <set>
#include <utility>
#include <vector>

#include "lognorm/quadratic.hpp"
#include "lognorm/util.hpp"

using namespace lognorm;

namespace {

QuadElt elt(long D, const mpq_class& a, const mpq_class& b) { return {D, a, b}; }

// Smallest unit above one by direct search: the least v >= 1 with
// u^2 - D v^2 = +-4 solvable, and for that v the least such u.
std::pair<mpz_class, mpz_class> smallest_unit_direct(long D) {
    for (mpz_class v = 1;; ++v) {
        mpz_class base = mpz_class(D) * v * v;
        mpz_class found = -1;
        for (int delta : {-4, 4}) {
            mpz_class u2 = base + delta;
            if (u2 <= 0) continue;
            if (mpz_perfect_square_p(u2.get_mpz_t())) {
                mpz_class u;
                mpz_sqrt(u.get_mpz_t(), u2.get_mpz_t());
                if (found < 0 || u < found) found = u;
            }
        }
        if (found > 0) return {found, v};
    }
}

std::vector<long> fundamental_range(long lo, long hi) {
    std::vector<long> out;
    for (long D = lo; D <= hi; ++D)
        if (D >= 5 && is_fundamental_discriminant(D)) out.push_back(D);
    return out;
}

} // namespace

TEST_CASE("fundamental units match their closed forms") {
    struct Row {
        long D;
        mpq_class a, b;
        int norm;
    };
    const std::vector<Row> rows = {
        {5, mpq_class(1, 2), mpq_class(1, 2), -1},
        {8, 1, mpq_class(1, 2), -1},
        {12, 2, mpq_class(1, 2), 1},
        {13, mpq_class(3, 2), mpq_class(1, 2), -1},
        {40, 3, mpq_class(1, 2), -1},
        {229, mpq_class(15, 2), mpq_class(1, 2), -1},
    };
    for (const auto& r : rows) {
        CAPTURE(r.D);
        QuadElt e = fundamental_unit(r.D);
        CHECK(e.a == r.a);
        CHECK(e.b == r.b);
        CHECK(e.norm() == r.norm);
    }
}

TEST_CASE("fundamental units are minimal against direct search") {
    for (long D : fundamental_range(5, 150)) {
        CAPTURE(D);
        QuadElt e = fundamental_unit(D);
        auto [u, v] = smallest_unit_direct(D);
        CHECK(2 * e.a == u);
        CHECK(2 * e.b == v);
    }
}

TEST_CASE("element arithmetic and inverses") {
    QuadElt e = fundamental_unit(40);
    QuadElt one{40, 1, 0};
    CHECK(e * e.inv() == one);
    CHECK(e.pow(3) * e.pow(-3) == one);
    CHECK(e.pow(2) == e * e);
    CHECK((e + e.conj()).is_rational());
    CHECK((e + e.conj()).a == e.trace());
    CHECK((e * e.conj()).a == e.norm());
    CHECK_THROWS_AS(QuadElt(40, 0, 0).inv(), NotInvertible);
    CHECK_THROWS_AS(one * QuadElt(8, 1, 0), InvalidConfig);
}

TEST_CASE("narrow class numbers match frozen table values") {
    struct Row {
        long D;
        unsigned long h_narrow, h_wide;
        int unit_norm;
        std::vector<unsigned long> narrow_factors;
    };
    const std::vector<Row> rows = {
        {5, 1, 1, -1, {}},        {8, 1, 1, -1, {}},
        {12, 2, 1, 1, {2}},       {13, 1, 1, -1, {}},
        {24, 2, 1, 1, {2}},       {40, 2, 2, -1, {2}},
        {60, 4, 2, 1, {2, 2}},    {65, 2, 2, -1, {2}},
        {105, 4, 2, 1, {2, 2}},   {229, 3, 3, -1, {3}},
        {257, 3, 3, -1, {3}},     {401, 5, 5, -1, {5}},
    };
    for (const auto& r : rows) {
        CAPTURE(r.D);
        ClassGroupData cg = class_group_bqf(r.D);
        CHECK(cg.h_narrow == r.h_narrow);
        CHECK(cg.h_wide == r.h_wide);
        CHECK(cg.unit_norm == r.unit_norm);
        CHECK(cg.narrow_factors == r.narrow_factors);
    }
}

TEST_CASE("composition group order equals the reduced cycle count") {
    for (long D : fundamental_range(5, 500)) {
        CAPTURE(D);
        ClassGroupData cg = class_group_bqf(D);
        auto cycles = reduced_form_cycles(D);
        CHECK(cg.h_narrow == cycles.size());
        unsigned long prod = 1;
        for (unsigned long f : cg.narrow_factors) prod *= f;
        CHECK(prod == cg.h_narrow);
        unsigned long expect_wide = cg.unit_norm == -1 ? cg.h_narrow : cg.h_narrow / 2;
        CHECK(cg.h_wide == expect_wide);
        for (const auto& cycle : cycles) {
            CHECK(cycle.size() % 2 == 0);
            for (const QuadForm& f : cycle) {
                CHECK(f.b > 0);
                CHECK(f.b * f.b < D);
                mpz_class lo = 2 * abs(f.a) - f.b, hi = 2 * abs(f.a) + f.b;
                CHECK(lo * lo < D);
                CHECK(hi * hi > D);
                CHECK(f.b * f.b - 4 * f.a * f.c == D);
            }
        }
    }
}

TEST_CASE("prime ideal over three in the field of ten") {
    QuadIdeal p3 = prime_ideal(40, 3);
    CHECK(p3.a == 3);
    CHECK(p3.b == -2);
    CHECK_THROWS_AS(principalize(p3), NonPrincipalizable);

    QuadIdeal p3sq = ideal_pow(p3, 2);
    QuadElt g = principalize(p3sq);
    mpq_class n = g.norm();
    CHECK((n == 9 || n == -9));
    CHECK(quad_valuation(g, 3, 0) == 2);
    CHECK(quad_valuation(g, 3, 1) == 0);
    // one plus the square root of ten generates exactly this ideal
    CHECK(ideal_is(p3sq, elt(40, 1, mpq_class(1, 2))));
    CHECK(principal_ideal(40, elt(40, 1, mpq_class(1, 2))) == p3sq);

    QuadIdeal conj{40, 3, 2};
    QuadIdeal prod = ideal_mul(p3, conj);
    CHECK(prod.a == 1); // primitive part of (3) is the full order
}

TEST_CASE("class of order three principalizes at the cube") {
    QuadIdeal p3 = prime_ideal(229, 3);
    CHECK(p3.a == 3);
    CHECK(p3.b == 1);
    CHECK_THROWS_AS(principalize(p3), NonPrincipalizable);
    CHECK_THROWS_AS(principalize(ideal_pow(p3, 2)), NonPrincipalizable);
    QuadElt g = principalize(ideal_pow(p3, 3));
    mpq_class n = g.norm();
    CHECK((n == 27 || n == -27));
    CHECK(quad_valuation(g, 3, 0) == 3);
    CHECK(quad_valuation(g, 3, 1) == 0);
}

TEST_CASE("place ordering pins the generator of a split prime") {
    QuadIdeal i7 = prime_ideal(8, 7);
    CHECK(i7.a == 7);
    CHECK(i7.b == -6);
    CHECK(ideal_is(i7, elt(8, 3, mpq_class(1, 2))));   // three plus root two
    CHECK(!ideal_is(i7, elt(8, 3, mpq_class(-1, 2)))); // its conjugate
    QuadElt g = principalize(i7);
    mpq_class n = g.norm();
    CHECK((n == 7 || n == -7));
    CHECK(quad_valuation(elt(8, 3, mpq_class(1, 2)), 7, 0) == 1);
    CHECK(quad_valuation(elt(8, 3, mpq_class(1, 2)), 7, 1) == 0);
    CHECK(quad_valuation(elt(8, 3, mpq_class(-1, 2)), 7, 0) == 0);
    CHECK(quad_valuation(elt(8, 3, mpq_class(-1, 2)), 7, 1) == 1);
}

TEST_CASE("ideal multiplication is associative on split primes") {
    QuadIdeal a = prime_ideal(105, 2);
    QuadIdeal b = prime_ideal(105, 13);
    QuadIdeal c = prime_ideal(105, 23);
    CHECK(ideal_mul(ideal_mul(a, b), c) == ideal_mul(a, ideal_mul(b, c)));
    // unit ideal absorbs
    QuadIdeal one{105, 1, 1};
    CHECK(ideal_mul(one, a) == a);
}

TEST_CASE("principal ideals of rationals and units") {
    CHECK(principal_ideal(40, elt(40, 3, 0)).a == 1);
    QuadElt e = fundamental_unit(40);
    CHECK(principal_ideal(40, e).a == 1);
    QuadElt g = principalize(QuadIdeal{40, 1, 0});
    CHECK((g.norm() == 1 || g.norm() == -1));
}

TEST_CASE("valuations at split, inert, and ramified primes") {
    // split: seven in the field of two
    CHECK(quad_valuation(elt(8, 3, mpq_class(1, 2)), 7, 0) == 1);
    // inert: three in the field of two
    CHECK(quad_valuation(elt(8, 3, mpq_class(3, 2)), 3, 0) == 1); // 3(1 + root 2)
    CHECK(quad_valuation(elt(8, 1, mpq_class(1, 2)), 3, 0) == 0);
    CHECK(quad_valuation(elt(8, mpq_class(1, 3), mpq_class(1, 3)), 3, 0) == -1);
    // ramified: two in the field of two, uniformizer valuation one, prime two
    CHECK(quad_valuation(elt(8, 0, 1), 2, 0) == 3);  // 2 root 2
    CHECK(quad_valuation(elt(8, 2, 0), 2, 0) == 2);  // the prime itself
    CHECK(quad_valuation(elt(8, 1, mpq_class(1, 2)), 2, 0) == 0); // unit 1 + root 2

    CHECK(quad_places_over(8, 7) == 2);
    CHECK(quad_places_over(8, 3) == 1);
    CHECK(quad_places_over(8, 2) == 1);
}

TEST_CASE("valuations sum to the norm valuation over every prime") {
    const std::vector<QuadElt> xs = {
        elt(40, mpq_class(7, 3), mpq_class(1, 6)), elt(40, 1, mpq_class(1, 2)),
        elt(40, -5, mpq_class(3, 2)),              elt(229, 2, mpq_class(1, 2)),
        elt(229, mpq_class(1, 5), 3),
    };
    const std::vector<unsigned long> qs = {2, 3, 5, 7, 13};
    for (const QuadElt& x : xs) {
        for (unsigned long q : qs) {
            CAPTURE(x.D);
            CAPTURE(q);
            mpz_class qz(q);
            long total = 0;
            int chi = kronecker(mpz_class(x.D), qz);
            if (chi == 1) {
                total = quad_valuation(x, q, 0) + quad_valuation(x, q, 1);
            } else if (chi == -1) {
                total = 2 * quad_valuation(x, q, 0);
            } else {
                total = quad_valuation(x, q, 0);
            }
            CHECK(total == val_p(x.norm(), qz));
        }
    }
}

TEST_CASE("split places separate conjugates at two") {
    // 17 = 1 mod 8, so two splits; (3 + root 17)/2 has norm -2
    QuadElt x = elt(17, mpq_class(3, 2), mpq_class(1, 2));
    long v0 = quad_valuation(x, 2, 0);
    long v1 = quad_valuation(x, 2, 1);
    CHECK(v0 + v1 == 1);
    CHECK(v0 * v1 == 0);
    CHECK(quad_valuation(x.conj(), 2, 0) == v1);
    CHECK(quad_valuation(x.conj(), 2, 1) == v0);
    QuadIdeal p2 = prime_ideal(17, 2);
    CHECK(p2.a == 2);
    CHECK(p2.b == 1);
}

TEST_CASE("configuration guards") {
    CHECK_THROWS_AS(fundamental_unit(7), InvalidConfig);   // 3 mod 4
    CHECK_THROWS_AS(fundamental_unit(45), InvalidConfig);  // not squarefree
    CHECK_THROWS_AS(fundamental_unit(4), InvalidConfig);
    CHECK_THROWS_AS(prime_ideal(40, 7), NotSplit);
    CHECK_THROWS_AS(prime_ideal(40, 6), InvalidConfig);
    CHECK_THROWS_AS(quad_valuation(elt(8, 1, 1), 7, 2), InvalidConfig);
    CHECK_THROWS_AS(quad_valuation(elt(8, 1, 1), 3, 1), InvalidConfig);
    CHECK_THROWS_AS(quad_valuation(elt(8, 0, 0), 7, 0), InvalidConfig);
    CHECK_THROWS_AS(principalize(QuadIdeal{40, 3, 1}), InvalidConfig);
}

TEST_CASE("wide class coordinates form verified discrete logarithms") {
    // frozen small cases: D = 40 has wide group of order two and the prime
    // over 3 is a nontrivial class; D = 229 has wide class number three
    ClassGroupData g40 = class_group_bqf(40);
    REQUIRE(g40.wide_factors == std::vector<unsigned long>{2});
    QuadIdeal p3 = prime_ideal(40, 3);
    CHECK(wide_class_coords(g40, p3) == std::vector<long>{1});
    CHECK(wide_class_coords(g40, ideal_pow(p3, 2)) == std::vector<long>{0});
    CHECK(wide_class_coords(g40, ideal_conj(p3)) == std::vector<long>{1});
    CHECK(wide_class_coords(g40, ideal_mul(p3, ideal_conj(p3))) ==
          std::vector<long>{0});

    ClassGroupData g229 = class_group_bqf(229);
    REQUIRE(g229.wide_factors == std::vector<unsigned long>{3});
    QuadIdeal q3 = prime_ideal(229, 3);
    long c = wide_class_coords(g229, q3)[0];
    CHECK(c != 0);
    CHECK(wide_class_coords(g229, ideal_conj(q3))[0] == 3 - c);
    CHECK(wide_class_coords(g229, ideal_pow(q3, 3)) == std::vector<long>{0});

    // coordinates are a homomorphism to the cyclic decomposition, conjugation
    // inverts a class, and zero coordinates mean a principalizable ideal
    for (long D : {40L, 105L, 229L, 257L}) {
        ClassGroupData G = class_group_bqf(D);
        std::vector<QuadIdeal> ideals;
        for (unsigned long p : {2UL, 3UL, 5UL, 7UL, 11UL, 13UL, 17UL, 19UL,
                                23UL, 29UL, 31UL, 37UL, 41UL, 43UL, 47UL})
            if (kronecker(mpz_class(D), mpz_class(p)) == 1)
                ideals.push_back(prime_ideal(D, p));
        REQUIRE(ideals.size() >= 3);
        const size_t r = G.wide_factors.size();
        for (size_t i = 0; i < ideals.size(); ++i) {
            std::vector<long> ci = wide_class_coords(G, ideals[i]);
            REQUIRE(ci.size() == r);
            std::vector<long> cc = wide_class_coords(G, ideal_conj(ideals[i]));
            for (size_t k = 0; k < r; ++k) {
                long d = static_cast<long>(G.wide_factors[k]);
                CHECK((ci[k] + cc[k]) % d == 0);
            }
            for (size_t j = i; j < ideals.size(); ++j) {
                std::vector<long> cj = wide_class_coords(G, ideals[j]);
                std::vector<long> cp =
                    wide_class_coords(G, ideal_mul(ideals[i], ideals[j]));
                bool zero = true;
                for (size_t k = 0; k < r; ++k) {
                    long d = static_cast<long>(G.wide_factors[k]);
                    CHECK((ci[k] + cj[k] - cp[k]) % d == 0);
                    if (cp[k] != 0) zero = false;
                }
                QuadIdeal prod = ideal_mul(ideals[i], ideals[j]);
                if (zero) {
                    QuadElt gen = principalize(prod);
                    CHECK(ideal_is(prod, gen));
                } else {
                    CHECK_THROWS_AS(principalize(prod), NonPrincipalizable);
                }
            }
        }
    }
}
