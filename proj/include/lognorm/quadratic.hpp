#pragma once

#include <gmpxx.h>

#include <optional>
#include <vector>

#include "lognorm/errors.hpp"

namespace lognorm {

// Element a + b*sqrt(D) of a real quadratic field, exact coordinates.
struct QuadElt {
    long D = 0;
    mpq_class a, b;

    QuadElt() = default;
    QuadElt(long D_, mpq_class a_, mpq_class b_)
        : D(D_), a(std::move(a_)), b(std::move(b_)) {}

    QuadElt conj() const { return {D, a, -b}; }
    mpq_class norm() const { return a * a - mpq_class(D) * b * b; }
    mpq_class trace() const { return 2 * a; }
    bool is_rational() const { return b == 0; }
    bool is_zero() const { return a == 0 && b == 0; }

    QuadElt operator+(const QuadElt& o) const;
    QuadElt operator-(const QuadElt& o) const;
    QuadElt operator*(const QuadElt& o) const;
    QuadElt inv() const;
    QuadElt pow(long e) const; // any sign
    bool operator==(const QuadElt& o) const { return D == o.D && a == o.a && b == o.b; }
};

// Integral ideal of the maximal order, canonical HNF shape
// [a, (-b + sqrt(D))/2] with a > 0, b == D mod 2, b^2 == D mod 4a,
// normalized -a < b <= a ... stored via (a, b) with c = (b*b - D)/(4a).
struct QuadIdeal {
    long D = 0;
    mpz_class a;
    mpz_class b;

    mpz_class c() const { return (b * b - D) / (4 * a); }
    bool operator==(const QuadIdeal& o) const { return D == o.D && a == o.a && b == o.b; }
    bool operator<(const QuadIdeal& o) const {
        if (a != o.a) return a < o.a;
        return b < o.b;
    }
};

// Binary quadratic form a x^2 + b xy + c y^2 of discriminant D > 0.
struct QuadForm {
    mpz_class a, b, c;
    bool operator==(const QuadForm& o) const { return a == o.a && b == o.b && c == o.c; }
    bool operator<(const QuadForm& o) const {
        if (a != o.a) return a < o.a;
        if (b != o.b) return b < o.b;
        return c < o.c;
    }
};

// Continued-fraction fundamental unit of the maximal order: returns the
// unit > 1 with norm +1 or -1; exactness asserted.
QuadElt fundamental_unit(long D);

struct ClassGroupData {
    long D = 0;
    unsigned long h_narrow = 0;          // number of reduced-form cycles
    unsigned long h_wide = 0;            // index in the ordinary sense
    int unit_norm = 0;                   // norm of the fundamental unit
    std::vector<unsigned long> narrow_factors; // cyclic factor orders, descending
    std::vector<unsigned long> wide_factors;
    // small split primes whose ideal classes generate the wide group,
    // with a square root of D mod 4p giving the ideal [p, (-b+sqrt D)/2]
    std::vector<std::pair<unsigned long, mpz_class>> generators;
    // discrete-log tables: every reduced form mapped to its cycle index
    // (sorted for binary search), the cycle index collapsed to the wide
    // class index, and each wide class written in coordinates relative to
    // a verified cyclic basis matching wide_factors (principal = zeros).
    std::vector<std::pair<QuadForm, unsigned long>> form_to_narrow;
    std::vector<unsigned long> narrow_to_wide;
    std::vector<std::vector<long>> wide_coords;
};

// Narrow class group by reduced-cycle enumeration, with the composition
// group order verified against the cycle count; wide data derived via the
// fundamental unit norm.
ClassGroupData class_group_bqf(long D);

// All reduced indefinite forms of discriminant D, grouped into rho-cycles.
std::vector<std::vector<QuadForm>> reduced_form_cycles(long D);

// The prime ideal above p given by a root b of x^2 = D (mod 4p).
QuadIdeal prime_ideal(long D, unsigned long p);
// Ideal arithmetic (maximal order, fundamental D).
QuadIdeal ideal_mul(const QuadIdeal& x, const QuadIdeal& y);
QuadIdeal ideal_pow(const QuadIdeal& x, unsigned long e);
// Primitive part of the principal ideal generated by x.
QuadIdeal principal_ideal(long D, const QuadElt& x);
// Exact module equality (x) == I, content included.
bool ideal_is(const QuadIdeal& I, const QuadElt& x);

// Find gamma with (gamma) = I, allowing generators of either norm sign;
// throws NonPrincipalizable if the class is nontrivial.  The returned
// generator is verified exactly against the ideal.
QuadElt principalize(const QuadIdeal& I);

// Conjugate ideal (image under sqrt(D) -> -sqrt(D)), renormalized.
QuadIdeal ideal_conj(const QuadIdeal& I);

// Index of the wide ideal class of I among the classes enumerated by
// class_group_bqf (0 = principal), and its coordinates with respect to
// the cyclic decomposition recorded in wide_factors.
unsigned long wide_class_index(const ClassGroupData& G, const QuadIdeal& I);
std::vector<long> wide_class_coords(const ClassGroupData& G, const QuadIdeal& I);

// Valuation of x at the prime ideal over q determined by (D|q);
// for split q the two places are ordered by the smaller lift of the
// root r with r^2 = D (mod q) (place 0 takes the smaller residue).
long quad_valuation(const QuadElt& x, unsigned long q, int place);

// Square root of D modulo q^T at a split prime, lifted from the smaller
// of the two roots modulo q (for q = 2: the root congruent to 1 mod 4).
// Place 0 of quad_valuation is the embedding sqrt(D) -> hensel_sqrt(D,q,T).
mpz_class hensel_sqrt(long D, unsigned long q, unsigned long T);
// number of places over q: 2 if split, else 1
int quad_places_over(long D, unsigned long q);

} // namespace lognorm
