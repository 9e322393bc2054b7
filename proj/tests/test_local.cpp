#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include <random>
#include <vector>

#include "lognorm/errors.hpp"
#include "lognorm/local.hpp"
#include "lognorm/padic.hpp"
#include "lognorm/quadratic.hpp"

using namespace lognorm;

namespace {

LocalElt C(const LocalRing& R, const std::vector<long>& v) {
    std::vector<mpq_class> q;
    for (long t : v) q.emplace_back(t);
    return LocalElt::from_coords(R, q);
}

mpq_class half(long n) {
    mpq_class q(n, 2);
    q.canonicalize();
    return q;
}

bool same_vec(const std::vector<PadicInt>& a, const std::vector<PadicInt>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) return false;
    return true;
}

std::vector<PadicInt> vec_add(const std::vector<PadicInt>& a,
                              const std::vector<PadicInt>& b) {
    std::vector<PadicInt> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

std::vector<PadicInt> vec_scale(const PadicInt& k, const std::vector<PadicInt>& a) {
    std::vector<PadicInt> r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = k * a[i];
    return r;
}

} // namespace

TEST_CASE("ring shapes and construction guards") {
    PadicContext c3(3, 24), c5(5, 20);

    LocalRing R8 = LocalRing::quadratic(c3, 8);
    CHECK(R8.degree() == 2);
    CHECK(R8.ram_index() == 1);
    CHECK(R8.res_degree() == 2);
    CHECK(R8.disc_tag() == 8);

    LocalRing R12 = LocalRing::quadratic(c3, 12);
    CHECK(R12.ram_index() == 2);
    CHECK(R12.res_degree() == 1);

    LocalRing R40 = LocalRing::quadratic(c5, 40);
    CHECK(R40.ram_index() == 2);
    CHECK(R40.res_degree() == 1);

    LocalRing Rc = LocalRing::real_cyclotomic9(c3);
    CHECK(Rc.degree() == 3);
    CHECK(Rc.ram_index() == 3);
    CHECK(Rc.res_degree() == 1);
    CHECK(Rc.disc_tag() == 0);

    CHECK_THROWS_AS(LocalRing::quadratic(c3, 13), InvalidConfig); // split
    CHECK_THROWS_AS(LocalRing::quadratic(c3, 7), InvalidConfig);  // not fundamental
    CHECK_THROWS_AS(LocalRing::real_cyclotomic9(c5), InvalidConfig);

    CHECK_THROWS_AS(LocalElt::from_coords(R8, {mpq_class(1)}), InvalidConfig);
    QuadElt u5(5, 1, 1);
    CHECK_THROWS_AS(LocalElt::from_quad(R8, u5), InvalidConfig);
    CHECK_THROWS_AS(LocalElt::from_quad(Rc, u5), InvalidConfig);
    CHECK(!(R8 == R12));
    CHECK(R8 == LocalRing::quadratic(c3, 8));
}

TEST_CASE("power-basis arithmetic matches exact quadratic arithmetic") {
    PadicContext c3(3, 24), c5(5, 20);
    std::mt19937_64 rng(20260818);
    std::uniform_int_distribution<long> coef(-20, 20);

    struct Probe {
        const PadicContext* ctx;
        long D;
    };
    for (Probe pr : {Probe{&c3, 8}, Probe{&c3, 12}, Probe{&c5, 40}}) {
        LocalRing R = LocalRing::quadratic(*pr.ctx, pr.D);
        LocalElt g = LocalElt::generator(R);
        // x * x = D
        CHECK(g * g == LocalElt::from_rational(R, pr.D));
        for (int trial = 0; trial < 25; ++trial) {
            QuadElt u(pr.D, half(coef(rng)), half(coef(rng)));
            QuadElt v(pr.D, half(coef(rng)), half(coef(rng)));
            LocalElt lu = LocalElt::from_quad(R, u);
            LocalElt lv = LocalElt::from_quad(R, v);
            CHECK(LocalElt::from_quad(R, u + v) == lu + lv);
            CHECK(LocalElt::from_quad(R, u - v) == lu - lv);
            CHECK(LocalElt::from_quad(R, u * v) == lu * lv);
            CHECK(local_norm(lu) == PadicInt::from_rational(*pr.ctx, u.norm()));
            CHECK(local_trace(lu) == PadicInt::from_rational(*pr.ctx, u.trace()));
        }
    }
}

TEST_CASE("cubic ring identities and frozen norms") {
    PadicContext c3(3, 24);
    LocalRing Rc = LocalRing::real_cyclotomic9(c3);
    LocalElt t = LocalElt::generator(Rc);

    // t^3 = 3t - 1
    CHECK(t * t * t == C(Rc, {-1, 3, 0}));
    CHECK(t.pow_ui(0) == LocalElt::from_rational(Rc, 1));
    // (2 - t)^3 = 9 - 15t + 6t^2
    CHECK(C(Rc, {2, -1, 0}).pow_ui(3) == C(Rc, {9, -15, 6}));

    auto scalar = [&](long v) { return PadicInt(c3, mpz_class(v)); };
    CHECK(local_norm(t) == scalar(-1));
    CHECK(local_norm(C(Rc, {2, -1, 0})) == scalar(3));
    CHECK(local_norm(C(Rc, {1, 1, 0})) == scalar(-3));
    CHECK(local_norm(C(Rc, {-1, 1, 0})) == scalar(1));
    CHECK(local_norm(C(Rc, {2, 1, 0})) == scalar(1));
    CHECK(local_norm(LocalElt::from_rational(Rc, 7)) == scalar(343));

    CHECK(local_trace(t) == scalar(0));
    CHECK(local_trace(t * t) == scalar(6));
    CHECK(local_trace(C(Rc, {2, -1, 0})) == scalar(6));
    CHECK(local_trace(C(Rc, {4, 9, -5})) == scalar(3 * 4 + 6 * -5));

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long> coef(-10, 10);
    for (int trial = 0; trial < 30; ++trial) {
        LocalElt x = C(Rc, {coef(rng), coef(rng), coef(rng)});
        LocalElt y = C(Rc, {coef(rng), coef(rng), coef(rng)});
        CHECK(local_norm(x * y) == local_norm(x) * local_norm(y));
        CHECK(local_trace(x + y) == local_trace(x) + local_trace(y));
    }
}

TEST_CASE("valuations across the supported rings") {
    PadicContext c3(3, 24), c5(5, 20);
    LocalRing R8 = LocalRing::quadratic(c3, 8);
    LocalRing R12 = LocalRing::quadratic(c3, 12);
    LocalRing R40 = LocalRing::quadratic(c5, 40);
    LocalRing Rc = LocalRing::real_cyclotomic9(c3);

    // inert: v(ell) = 1
    CHECK(local_valuation(LocalElt::from_rational(R8, 3)) == 1);
    CHECK(local_valuation(LocalElt::from_rational(R8, 9)) == 2);
    CHECK(local_valuation(LocalElt::generator(R8)) == 0);
    CHECK(local_valuation(C(R8, {1, 1})) == 0);
    CHECK(local_valuation(C(R8, {3, 3})) == 1);

    // ramified: v(ell) = 2, the generator is a uniformizer
    CHECK(local_valuation(LocalElt::generator(R12)) == 1);
    CHECK(local_valuation(LocalElt::from_rational(R12, 3)) == 2);
    CHECK(local_valuation(C(R12, {3, 1})) == 1);

    CHECK(local_valuation(LocalElt::generator(R40)) == 1);
    CHECK(local_valuation(LocalElt::from_rational(R40, 5)) == 2);
    CHECK(local_valuation(C(R40, {10, 1})) == 1);

    // totally ramified cubic: v(3) = 3, 2 - t is a uniformizer
    CHECK(local_valuation(C(Rc, {2, -1, 0})) == 1);
    CHECK(local_valuation(LocalElt::from_rational(Rc, 3)) == 3);
    CHECK(local_valuation(LocalElt::from_rational(Rc, 9)) == 6);
    CHECK(local_valuation(LocalElt::generator(Rc)) == 0);
    CHECK(local_valuation(C(Rc, {-1, 1, 0})) == 0);
    CHECK(local_valuation(C(Rc, {6, -3, 0})) == 4);

    CHECK_THROWS_AS(local_valuation(LocalElt::from_rational(R8, 0)),
                    PrecisionExhausted);
}

TEST_CASE("uniformizer cube splits into ell times a unit") {
    PadicContext c3(3, 24);
    LocalRing Rc = LocalRing::real_cyclotomic9(c3);
    LocalElt cube = C(Rc, {2, -1, 0}).pow_ui(3);
    // every coordinate of (2-t)^3 = 9 - 15t + 6t^2 is divisible by three;
    // dividing them out leaves the unit 3 - 5t + 2t^2
    std::vector<PadicInt> wc;
    for (const auto& co : cube.coords()) wc.push_back(co.shift_down(1));
    LocalElt w(Rc, wc);
    CHECK(w == C(Rc, {3, -5, 2}));
    CHECK(local_valuation(w) == 0);
    CHECK(local_norm(w) == PadicInt(c3, 1));
}

TEST_CASE("logarithm is a homomorphism with torsion kernel") {
    PadicContext c3(3, 24), c5(5, 20);
    LocalRing R8 = LocalRing::quadratic(c3, 8);
    LocalRing R12 = LocalRing::quadratic(c3, 12);
    LocalRing R40 = LocalRing::quadratic(c5, 40);
    LocalRing Rc = LocalRing::real_cyclotomic9(c3);

    CHECK(local_log_scale(R8) == 24);  // (3^2 - 1) * 3
    CHECK(local_log_scale(R12) == 6);  // (3 - 1) * 3
    CHECK(local_log_scale(R40) == 20); // (5 - 1) * 5
    CHECK(local_log_scale(Rc) == 6);

    struct Suite {
        LocalRing R;
        LocalElt u1, u2;
    };
    std::vector<Suite> suites;
    suites.push_back({R8, LocalElt::generator(R8), C(R8, {1, 3})});
    suites.push_back({R12, C(R12, {1, 1}), C(R12, {2, 1})});
    suites.push_back({R40, C(R40, {1, 1}), C(R40, {2, 1})});
    suites.push_back({Rc, LocalElt::generator(Rc), C(Rc, {2, 1, 0})});

    for (const auto& s : suites) {
        REQUIRE(local_valuation(s.u1) == 0);
        REQUIRE(local_valuation(s.u2) == 0);
        auto l1 = local_log(s.u1);
        auto l2 = local_log(s.u2);
        CHECK(same_vec(local_log(s.u1 * s.u2), vec_add(l1, l2)));
        CHECK(same_vec(local_log(s.u1.pow_ui(7)),
                       vec_scale(PadicInt(s.R.ctx(), 7), l1)));

        // torsion kernel: 1 and -1 map to zero at full precision
        for (long sgn : {1L, -1L}) {
            auto lz = local_log(LocalElt::from_rational(s.R, sgn));
            for (const auto& co : lz) {
                CHECK(co.zero_at_precision());
                CHECK(co.prec() == s.R.ctx().precision());
            }
        }
    }

    CHECK_THROWS_AS(local_log(LocalElt::generator(R12)), NotUnit);
    CHECK_THROWS_AS(local_log(LocalElt::from_rational(R8, 3)), NotUnit);
}

TEST_CASE("scalar logarithm agrees with the one-dimensional logarithm") {
    PadicContext c3(3, 24), c5(5, 20);

    struct Probe {
        LocalRing R;
        long a;
    };
    std::vector<Probe> probes = {
        {LocalRing::quadratic(c3, 8), 5},
        {LocalRing::quadratic(c3, 12), 5},
        {LocalRing::quadratic(c5, 40), 7},
        {LocalRing::real_cyclotomic9(c3), 2},
    };
    for (const auto& p : probes) {
        const PadicContext& ctx = p.R.ctx();
        auto lg = local_log(LocalElt::from_rational(p.R, p.a));
        PadicInt expect = PadicInt(ctx, mpz_class(local_log_scale(p.R))) *
                          iwasawa_log(PadicInt(ctx, mpz_class(p.a)));
        CHECK(lg[0] == expect);
        for (size_t i = 1; i < lg.size(); ++i) CHECK(lg[i] == PadicInt(ctx, 0));
    }
}
