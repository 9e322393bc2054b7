#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include "lognorm/cyclotomic.hpp"
#include "lognorm/util.hpp"

using namespace lognorm;

namespace {

mpz_class poly_eval_at_one(const std::vector<mpz_class>& p) {
    mpz_class s = 0;
    for (const auto& c : p) s += c;
    return s;
}

} // namespace

TEST_CASE("cyclotomic polynomials: frozen coefficients") {
    CHECK(cyclotomic_poly(1) == std::vector<mpz_class>{-1, 1});
    CHECK(cyclotomic_poly(2) == std::vector<mpz_class>{1, 1});
    CHECK(cyclotomic_poly(3) == std::vector<mpz_class>{1, 1, 1});
    CHECK(cyclotomic_poly(4) == std::vector<mpz_class>{1, 0, 1});
    CHECK(cyclotomic_poly(9) == std::vector<mpz_class>{1, 0, 0, 1, 0, 0, 1});
    CHECK(cyclotomic_poly(12) == std::vector<mpz_class>{1, 0, -1, 0, 1});
    CHECK(cyclotomic_poly(15) ==
          std::vector<mpz_class>{1, -1, 0, 1, -1, 1, 0, -1, 1});
    // degree is always phi(M)
    for (unsigned long m : {5ul, 8ul, 27ul, 40ul, 45ul, 81ul})
        CHECK(cyclotomic_poly(m).size() == euler_phi(m) + 1);
}

TEST_CASE("cyclotomic polynomial values at 1 detect prime powers") {
    CHECK(poly_eval_at_one(cyclotomic_poly(3)) == 3);
    CHECK(poly_eval_at_one(cyclotomic_poly(9)) == 3);
    CHECK(poly_eval_at_one(cyclotomic_poly(27)) == 3);
    CHECK(poly_eval_at_one(cyclotomic_poly(5)) == 5);
    CHECK(poly_eval_at_one(cyclotomic_poly(8)) == 2);
    CHECK(poly_eval_at_one(cyclotomic_poly(12)) == 1);
    CHECK(poly_eval_at_one(cyclotomic_poly(15)) == 1);
    CHECK(poly_eval_at_one(cyclotomic_poly(45)) == 1);
}

TEST_CASE("ring arithmetic and galois composition") {
    auto ring = CycloRing::get(9);
    CHECK(ring->degree() == 6);
    CycloElt z = CycloElt::zeta_pow(ring, 1);
    // zeta^9 = 1 and zeta^6 = -1 - zeta^3 on the power basis
    CHECK(CycloElt::zeta_pow(ring, 9) == CycloElt::one(ring));
    CycloElt z6 = CycloElt::zeta_pow(ring, 6);
    CycloElt expect = CycloElt::from_rational(ring, -1) - CycloElt::zeta_pow(ring, 3);
    CHECK(z6 == expect);
    // sigma_a sigma_b = sigma_ab
    CycloElt x = z + CycloElt::zeta_pow(ring, 4) * mpq_class(3) +
                 CycloElt::from_rational(ring, mpq_class(1, 2));
    CHECK(x.galois(2).galois(5) == x.galois(10 % 9));
    CHECK(x.galois(4).galois(7) == x.galois(28 % 9));
    // sigma_a(zeta^k) = zeta^(ak)
    CHECK(z.galois(5) == CycloElt::zeta_pow(ring, 5));
    // addition/multiplication sanity: (1+z)(1-z) = 1 - z^2
    CHECK((CycloElt::one(ring) + z) * (CycloElt::one(ring) - z) ==
          CycloElt::one(ring) - CycloElt::zeta_pow(ring, 2));
}

TEST_CASE("inverse via extended euclid") {
    auto ring5 = CycloRing::get(5);
    CycloElt u = CycloElt::one_minus_zeta(ring5, 1);
    CHECK(u * u.inv() == CycloElt::one(ring5));
    CycloElt z = CycloElt::zeta_pow(ring5, 2);
    CHECK(z * z.inv() == CycloElt::one(ring5));
    CHECK(z.inv() == CycloElt::zeta_pow(ring5, -2));
    CHECK_THROWS_AS(CycloElt::zero(ring5).inv(), NotInvertible);
    // rational inverse
    CycloElt r = CycloElt::from_rational(ring5, mpq_class(3, 7));
    CHECK(r.inv() == CycloElt::from_rational(ring5, mpq_class(7, 3)));
}

TEST_CASE("absolute norms of 1 - zeta") {
    for (auto [m, want] : std::vector<std::pair<unsigned long, long>>{
             {9, 3}, {5, 5}, {8, 2}, {12, 1}, {15, 1}, {27, 3}}) {
        auto ring = CycloRing::get(m);
        CHECK(absolute_norm(CycloElt::one_minus_zeta(ring, 1)) == mpq_class(want));
    }
}

TEST_CASE("distribution relation: norm from Q(zeta_9) to Q(zeta_3)") {
    auto ring = CycloRing::get(9);
    CycloElt top = CycloElt::one_minus_zeta(ring, 1);
    // Gal(Q(zeta_9)/Q(zeta_3)) = residues 1 mod 3 in (Z/9)^x
    CycloElt nm = galois_norm_to_fixed_field(top, {1, 4, 7});
    CHECK(nm == CycloElt::one_minus_zeta(ring, 3));
    // dual route through the redundant-representation product
    CycloElt nm2 = subgroup_norm_product(9, {1, 4, 7});
    CHECK(nm2 == nm);
}

TEST_CASE("real cyclotomic eta norms down to Q") {
    auto ring = CycloRing::get(9);
    CycloElt eta = CycloElt::one_minus_zeta(ring, 1) * CycloElt::one_minus_zeta(ring, -1);
    // coset representatives of <-1> in (Z/9)^x
    CycloElt nm = galois_norm_to_fixed_field(eta, {1, 2, 4});
    CHECK(nm.is_rational());
    CHECK(nm.rational_value() == 3);
    // full absolute norm squares it
    CHECK(absolute_norm(eta) == 9);
}

TEST_CASE("gauss sums square to the discriminant") {
    for (long D : {5L, 8L, 12L, 13L, 40L}) {
        auto ring = CycloRing::get(static_cast<unsigned long>(D));
        CycloElt g = gauss_sum_sqrt(ring, D);
        CHECK((g * g) == CycloElt::from_rational(ring, D));
    }
    // also inside a larger conductor
    auto ring45 = CycloRing::get(45);
    CycloElt g5 = gauss_sum_sqrt(ring45, 5);
    CHECK((g5 * g5) == CycloElt::from_rational(ring45, 5));
}

TEST_CASE("quadratic extraction round trip") {
    auto ring = CycloRing::get(45);
    CycloElt g = gauss_sum_sqrt(ring, 5);
    CycloElt y = CycloElt::from_rational(ring, mpq_class(3, 7)) + g * mpq_class(2, 7);
    QuadCoords qc = extract_quadratic(y, 5);
    CHECK(qc.a == mpq_class(3, 7));
    CHECK(qc.b == mpq_class(2, 7));
    // rational elements extract with b = 0
    QuadCoords r = extract_quadratic(CycloElt::from_rational(ring, 11), 5);
    CHECK(r.a == 11);
    CHECK(r.b == 0);
    // elements outside the quadratic subfield are rejected
    CHECK_THROWS_AS(extract_quadratic(CycloElt::zeta_pow(ring, 1), 5),
                    InvalidConfig);
}

TEST_CASE("subgroup product lands in the expected quadratic field") {
    // product of (1 - zeta_15^c) over the classes c with chi_5(c) = 1;
    // the value is the circular unit (3 - sqrt(5))/2 under the canonical
    // embedding zeta_15 = e^(2 pi i/15)
    CycloElt P = subgroup_norm_product(15, {1, 4, 11, 14});
    QuadCoords qc = extract_quadratic(P, 5);
    CHECK(qc.a == mpq_class(3, 2));
    CHECK(qc.b == mpq_class(-1, 2));
    // norm consistency: N(P) = a^2 - 5 b^2 = +1, and the absolute norm
    // from Q(zeta_15) is its 4th power
    mpq_class nk = qc.a * qc.a - 5 * qc.b * qc.b;
    CHECK(nk == 1);
    CHECK(absolute_norm(P) == 1);
}

TEST_CASE("power basis expression for the real cyclotomic field") {
    auto ring = CycloRing::get(9);
    CycloElt t = CycloElt::zeta_pow(ring, 1) + CycloElt::zeta_pow(ring, -1);
    CycloElt y = t * t - t + CycloElt::from_rational(ring, 2);
    auto coeffs = express_in_power_basis(y, t, 3);
    REQUIRE(coeffs.size() == 3);
    CHECK(coeffs[0] == 2);
    CHECK(coeffs[1] == -1);
    CHECK(coeffs[2] == 1);
    // t satisfies t^3 - 3t + 1 = 0
    CycloElt rel = t * t * t - t * mpq_class(3) + CycloElt::one(ring);
    CHECK(rel.is_zero());
    // elements outside the real subfield are rejected
    CHECK_THROWS_AS(express_in_power_basis(CycloElt::zeta_pow(ring, 1), t, 3),
                    InvalidConfig);
}

TEST_CASE("pow matches repeated multiplication") {
    auto ring = CycloRing::get(7);
    CycloElt x = CycloElt::one(ring) + CycloElt::zeta_pow(ring, 1);
    CycloElt p = CycloElt::one(ring);
    for (int i = 0; i < 11; ++i) p = p * x;
    CHECK(x.pow(11) == p);
    CHECK(x.pow(0) == CycloElt::one(ring));
}

TEST_CASE("config guards") {
    CHECK_THROWS_AS(cyclotomic_poly(0), ConductorOverflow);
    CHECK_THROWS_AS(cyclotomic_poly(1000001), ConductorOverflow);
    auto ring = CycloRing::get(9);
    CycloElt z = CycloElt::zeta_pow(ring, 1);
    CHECK_THROWS_AS(z.galois(3), InvalidConfig); // not coprime to 9
    CHECK_THROWS_AS(subgroup_norm_product(9, {3}), InvalidConfig);
    CHECK_THROWS_AS(gauss_sum_sqrt(ring, 5), InvalidConfig); // 5 does not divide 9
}
