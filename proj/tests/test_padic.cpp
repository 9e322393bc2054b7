#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include "lognorm/padic.hpp"

using namespace lognorm;

namespace {

// Oracle: partial sums of log(1+t) = sum (-1)^(i+1) t^i / i in exact
// rational arithmetic, reduced ell-adically.  For |t|_ell <= 1/ell the
// tail beyond i terms has valuation >= i - log_ell(i), so truncating at
// terms_for(digits) determines the value mod ell^digits.
mpz_class oracle_log_rational(unsigned long ell, long t, int digits) {
    int terms = 4 * digits + 16;
    mpq_class sum = 0;
    mpq_class tpow = 1;
    for (int i = 1; i <= terms; ++i) {
        tpow *= t;
        mpq_class term = tpow / i;
        if (i % 2 == 0) term = -term;
        sum += term;
    }
    // reduce mod ell^digits: numerator * den^{-1}
    mpz_class mod = pow_z(ell, (unsigned long)digits);
    mpz_class den = sum.get_den(), num = sum.get_num();
    mpz_class dinv;
    REQUIRE(mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), mod.get_mpz_t()) != 0);
    mpz_class r = (num % mod) * dinv % mod;
    if (r < 0) r += mod;
    return r;
}

// Oracle: Teichmueller lift by brute-force powering with mpz only.
mpz_class oracle_teichmuller(unsigned long ell, long u, int N) {
    mpz_class mod = pow_z(ell, (unsigned long)N);
    mpz_class x = u;
    mpz_class e = pow_z(ell, (unsigned long)(N + 2));
    mpz_class r;
    mpz_powm(r.get_mpz_t(), x.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
    return r;
}

} // namespace

TEST_CASE("context guards") {
    CHECK_THROWS_AS(PadicContext(2, 24), InvalidConfig);
    CHECK_THROWS_AS(PadicContext(9, 24), InvalidConfig);
    CHECK_THROWS_AS(PadicContext(3, 7), InvalidConfig);
    PadicContext ok(3, 8);
    CHECK(ok.certified() == 4);
}

TEST_CASE("ring arithmetic and valuation") {
    PadicContext C(3, 24);
    PadicInt a(C, 12);      // 12 = 4 * 3
    CHECK(a.val() == 1);
    PadicInt b(C, 9);
    CHECK(b.val() == 2);
    CHECK((a * b).val() == 3);
    CHECK((a + b).val() == 1);
    PadicInt z(C, 0);
    CHECK(z.zero_at_precision());
    CHECK(z.val() == 24);
    // subtraction-and-valuation comparison
    PadicInt c(C, 12 + 81);
    CHECK((a - c).val() == 4);
    CHECK(a.congruent(c, 4));
    CHECK(!a.congruent(c, 5));
}

TEST_CASE("division and precision bookkeeping") {
    PadicContext C(3, 24);
    PadicInt a(C, 18);
    PadicInt q = a.shift_down(2); // 18/9 = 2
    CHECK(q.residue() == 2);
    CHECK(q.prec() == 22);
    CHECK_THROWS_AS(a.shift_down(3), NotInvertible);
    PadicInt u(C, 5);
    CHECK((u * u.inv()).residue() == 1);
    PadicInt t(C, 6);
    CHECK_THROWS_AS(t.inv(), NotInvertible);
    // multiplying by something of positive valuation recovers precision headroom
    PadicInt nine(C, 9);
    CHECK((q * nine).prec() == 24);
}

TEST_CASE("teichmuller: frozen values and character") {
    PadicContext C(3, 24);
    // omega(5) = -1: 5 = 2 mod 3, and -1 is the only root of unity = 2 mod 3
    PadicInt w = teichmuller(PadicInt(C, 5));
    CHECK(w.residue() == C.modulus() - 1);
    CHECK(w.residue() == oracle_teichmuller(3, 5, 24));
    // omega(4) = 1
    CHECK(teichmuller(PadicInt(C, 4)).residue() == 1);
    // omega is multiplicative and fixed by x -> x^ell
    PadicInt w7 = teichmuller(PadicInt(C, 7));
    CHECK(w7.residue() == oracle_teichmuller(3, 7, 24));
    CHECK((w7.pow_ui(3)).residue() == w7.residue());
    PadicContext C5(5, 20);
    PadicInt w2 = teichmuller(PadicInt(C5, 2));
    CHECK(w2.residue() == oracle_teichmuller(5, 2, 20));
    // order 4 character: omega(2)^2 = omega(4) = -1
    CHECK((w2 * w2).residue() == C5.modulus() - 1);
}

TEST_CASE("iwasawa log: frozen series values") {
    PadicContext C(3, 24);
    PadicInt l4 = iwasawa_log(PadicInt(C, 4));
    CHECK(l4.val() == 1);
    // independent rational-series oracle, compared on the certified digits
    mpz_class expect = oracle_log_rational(3, 3, 12); // log(1+3)
    mpz_class got = l4.residue() % pow_z(3, 12);
    CHECK(got == expect);
    // Log(ell) = 0 and Log(torsion) = 0
    CHECK(iwasawa_log(PadicInt(C, 3)).zero_at_precision());
    CHECK(iwasawa_log(PadicInt(C, -1)).zero_at_precision());
    CHECK(iwasawa_log(teichmuller(PadicInt(C, 5))).zero_at_precision());
    // Log(9 * 4) = Log(4)
    PadicInt l36 = iwasawa_log(PadicInt(C, 36));
    CHECK((l36 - l4).zero_at_precision());
    PadicContext C5(5, 20);
    PadicInt l6 = iwasawa_log(PadicInt(C5, 6));
    CHECK(l6.val() == 1);
    CHECK(l6.residue() % pow_z(5, 10) == oracle_log_rational(5, 5, 10));
}

TEST_CASE("iwasawa log is a homomorphism") {
    for (unsigned long ell : {3ul, 5ul}) {
        PadicContext C(ell, 24);
        gmp_randclass rng(gmp_randinit_default);
        rng.seed(20260818);
        for (int trial = 0; trial < 50; ++trial) {
            mpz_class x = rng.get_z_range(C.modulus() - 2) + 1;
            mpz_class y = rng.get_z_range(C.modulus() - 2) + 1;
            PadicInt a(C, x), b(C, y);
            if (a.zero_at_precision() || b.zero_at_precision()) continue;
            PadicInt lhs = iwasawa_log(a * b);
            PadicInt rhs = iwasawa_log(a) + iwasawa_log(b);
            int p = std::min({lhs.prec(), rhs.prec(), C.certified()});
            CHECK(lhs.congruent(rhs, p));
        }
    }
}

TEST_CASE("split decomposition: frozen examples") {
    PadicContext C(3, 24);
    // 12 = 4 * 3: unit part 4 = 1 mod 3, so sign +1, alpha = Log4/Log4 = 1
    auto d12 = decompose_split_local(PadicInt(C, 12));
    CHECK(d12.sign == 1);
    CHECK(d12.k == 1);
    CHECK(d12.alpha.congruent(PadicInt(C, 1, d12.alpha.prec()), C.certified()));
    // 5 = 2 mod 3: Teichmueller character is -1, so sign -1,
    // alpha = Log(5)/Log(4)  (oracle check below closes the loop)
    auto d5 = decompose_split_local(PadicInt(C, 5));
    CHECK(d5.sign == -1);
    CHECK(d5.k == 0);
    PadicInt back = principal_power(C, d5.alpha);
    if (d5.sign < 0) back = -back;
    CHECK(back.congruent(PadicInt(C, 5, back.prec()), C.certified()));
    // ell = 5: 2 has Teichmueller character of order 4
    PadicContext C5(5, 16);
    CHECK_THROWS_AS(decompose_split_local(PadicInt(C5, 2)), NotDecomposable);
    // but 7 = 2 mod 5? 7 mod 5 = 2 -> also not decomposable;  6 = 1 mod 5 is
    auto d6 = decompose_split_local(PadicInt(C5, 6));
    CHECK(d6.sign == 1);
    CHECK(d6.k == 0);
    CHECK_THROWS_AS(decompose_split_local(PadicInt(C5, 7)), NotDecomposable);
}

TEST_CASE("split decomposition round-trip on random decomposables") {
    for (unsigned long ell : {3ul, 5ul}) {
        PadicContext C(ell, 24);
        gmp_randclass rng(gmp_randinit_default);
        rng.seed(97 + ell);
        for (int trial = 0; trial < 40; ++trial) {
            // construct sign * (1+ell)^a * ell^k
            int sign = (rng.get_z_range(2) == 0) ? 1 : -1;
            long k = mpz_class(rng.get_z_range(5)).get_si();
            mpz_class a = rng.get_z_range(C.ell_pow(C.precision() - 1));
            PadicInt x = principal_power(C, PadicInt(C, a));
            if (sign < 0) x = -x;
            x = x.shift_up((int)k);
            auto d = decompose_split_local(x);
            CHECK(d.sign == sign);
            CHECK(d.k == k);
            PadicInt adiff = d.alpha - PadicInt(C, a, d.alpha.prec());
            CHECK(adiff.congruent(PadicInt(C, 0, adiff.prec()),
                                  std::min(adiff.prec(), C.certified())));
        }
    }
}

TEST_CASE("kernel of Log is torsion times ell powers") {
    PadicContext C(3, 24);
    // if Log(x) = 0 at precision then alpha = 0 at precision
    PadicInt x = PadicInt(C, -9); // -1 * 3^2
    auto d = decompose_split_local(x);
    CHECK(d.sign == -1);
    CHECK(d.k == 2);
    CHECK(d.alpha.zero_at_precision());
}

TEST_CASE("rational embedding") {
    PadicContext C(3, 24);
    PadicInt half = PadicInt::from_rational(C, mpq_class(1, 2));
    CHECK((half + half).residue() == 1);
    CHECK_THROWS_AS(PadicInt::from_rational(C, mpq_class(1, 3)), NotInvertible);
}
