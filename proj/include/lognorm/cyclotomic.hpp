#pragma once

#include <gmpxx.h>

#include <memory>
#include <vector>

#include "lognorm/errors.hpp"
#include "lognorm/util.hpp"

namespace lognorm {

// Phi_M(x) as integer coefficients, constant term first.
std::vector<mpz_class> cyclotomic_poly(unsigned long M);

// The ring Q[x]/Phi_M(x) with power basis zeta^i, 0 <= i < phi(M).
// Galois group = (Z/M)^x acting by zeta -> zeta^a.  Immutable, cached
// per conductor via CycloRing::get.
class CycloRing {
public:
    static std::shared_ptr<const CycloRing> get(unsigned long M);

    unsigned long conductor() const { return M_; }
    unsigned long degree() const { return phi_; }
    const std::vector<mpz_class>& poly() const { return phi_poly_; }

    // Reduce a length-M coefficient vector (exponents mod M) to the
    // power basis; exact polynomial division by the monic Phi_M.
    std::vector<mpz_class> reduce_redundant(std::vector<mpz_class> w) const;
    std::vector<mpq_class> reduce_redundant(std::vector<mpq_class> w) const;

private:
    explicit CycloRing(unsigned long M);
    unsigned long M_, phi_;
    std::vector<mpz_class> phi_poly_;
};

// Element of Q(zeta_M) on the power basis.  Value type.
class CycloElt {
public:
    CycloElt() = default;
    CycloElt(std::shared_ptr<const CycloRing> ring, std::vector<mpq_class> c);

    static CycloElt zero(std::shared_ptr<const CycloRing> ring);
    static CycloElt one(std::shared_ptr<const CycloRing> ring);
    static CycloElt from_rational(std::shared_ptr<const CycloRing> ring,
                                  const mpq_class& q);
    static CycloElt zeta_pow(std::shared_ptr<const CycloRing> ring, long k);
    static CycloElt one_minus_zeta(std::shared_ptr<const CycloRing> ring, long k);

    const CycloRing& ring() const { return *ring_; }
    std::shared_ptr<const CycloRing> ring_ptr() const { return ring_; }
    const std::vector<mpq_class>& coeffs() const { return c_; }

    bool is_zero() const;
    bool is_rational() const;
    mpq_class rational_value() const; // requires is_rational

    CycloElt operator+(const CycloElt& o) const;
    CycloElt operator-(const CycloElt& o) const;
    CycloElt operator*(const CycloElt& o) const;
    CycloElt operator*(const mpq_class& s) const;
    bool operator==(const CycloElt& o) const;

    CycloElt galois(uint64_t a) const;      // sigma_a, gcd(a, M) = 1
    CycloElt pow(const mpz_class& e) const; // e >= 0
    CycloElt inv() const;                   // extended Euclid mod Phi_M

    // largest bit size over numerators and denominators (height guard)
    size_t height_bits() const;

private:
    std::shared_ptr<const CycloRing> ring_;
    std::vector<mpq_class> c_; // length phi(M)
};

// Product of (1 - zeta_d^c) over the residues c in S (subset of (Z/d)^x),
// computed in a redundant length-d workspace and reduced once.
CycloElt subgroup_norm_product(unsigned long d, const std::vector<uint64_t>& S);

// Norm of x to the fixed field of H <= (Z/M)^x: product of sigma_h(x),
// h in H.  Intended for moderate conductors.
CycloElt galois_norm_to_fixed_field(const CycloElt& x, const std::vector<uint64_t>& H);

// Norm of x from Q(zeta_M) all the way down to Q; the result is asserted
// rational.
mpq_class absolute_norm(const CycloElt& x);

// Quadratic Gauss sum for a fundamental discriminant D > 0 inside
// Q(zeta_M) with D | M: g = sum over c in (Z/D)^x of chi_D(c) zeta_M^(cM/D).
// Under the embedding zeta_M = e^(2 pi i / M) this equals +sqrt(D).
CycloElt gauss_sum_sqrt(std::shared_ptr<const CycloRing> ring, long D);

// Express y in Q(zeta_M) as a + b*sqrt(D) via the Gauss sum convention;
// every identity used is verified exactly, and InvalidConfig is thrown
// if y does not lie in the quadratic subfield.
struct QuadCoords {
    mpq_class a, b;
};
QuadCoords extract_quadratic(const CycloElt& y, long D);

// Express y as a rational combination of 1, t, ..., t^(deg-1); throws
// InvalidConfig if y is not in that span.  Exact solve plus verification.
std::vector<mpq_class> express_in_power_basis(const CycloElt& y, const CycloElt& t,
                                              int deg);

} // namespace lognorm
