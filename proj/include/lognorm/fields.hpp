#pragma once

#include <gmpxx.h>

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "lognorm/cyclotomic.hpp"
#include "lognorm/errors.hpp"
#include "lognorm/quadratic.hpp"

namespace lognorm {

// ---------------------------------------------------------------------------
// Abelian fields, presented as fixed fields of subgroups of (Z/M)^x acting
// on Q(zeta_M).  Galois theory is residue-class bookkeeping throughout.
// ---------------------------------------------------------------------------

class AbelianField {
public:
    // fixed field of the (validated) subgroup H of (Z/M)^x, given by full
    // enumeration
    static AbelianField from_subgroup(unsigned long M, std::vector<uint64_t> H);
    // Q(zeta_M)^+, the fixed field of {+-1}
    static AbelianField real_cyclotomic(unsigned long M);
    // Q(sqrt D) inside Q(zeta_M) for a fundamental D > 0 dividing M:
    // the fixed field of the kernel of the quadratic character of D
    static AbelianField real_quadratic_in(unsigned long M, long D);

    unsigned long modulus() const { return M_; }   // ambient conductor
    unsigned long degree() const { return degree_; }
    bool totally_real() const { return totally_real_; }
    const std::vector<uint64_t>& fixing_subgroup() const { return H_; }
    // coset representatives of H in (Z/M)^x: the Galois group of the field
    const std::vector<uint64_t>& galois_reps() const { return delta_; }
    std::shared_ptr<const CycloRing> ambient() const { return ring_; }

    // true iff sigma_h(x) == x for every h in H (checked on a generating
    // set of H)
    bool contains(const CycloElt& x) const;
    // product of sigma_h(x) over all of H: the norm from the ambient
    // cyclotomic field onto this field
    CycloElt norm_from_ambient(const CycloElt& x) const;
    // a small generating set of H (found greedily; used by contains)
    const std::vector<uint64_t>& subgroup_generators() const { return h_gens_; }

    bool operator==(const AbelianField& o) const {
        return M_ == o.M_ && H_ == o.H_;
    }

private:
    AbelianField() = default;
    unsigned long M_ = 0;
    unsigned long degree_ = 0;
    bool totally_real_ = false;
    std::vector<uint64_t> H_;      // sorted
    std::vector<uint64_t> delta_;  // sorted least coset representatives
    std::vector<uint64_t> h_gens_;
    std::shared_ptr<const CycloRing> ring_;
};

// ---------------------------------------------------------------------------
// Base fields of cyclotomic towers and elements of those base fields.
// ---------------------------------------------------------------------------

enum class BaseKind { Rationals, RealQuadratic, RealCyclotomic };

struct BaseField {
    BaseKind kind = BaseKind::Rationals;
    long D = 0;                  // fundamental discriminant (RealQuadratic)
    unsigned long conductor = 1; // 1, D, or an ell-power >= 9

    static BaseField rationals();
    static BaseField real_quadratic(long D);
    static BaseField real_cyclotomic(unsigned long conductor);

    bool operator==(const BaseField& o) const {
        return kind == o.kind && D == o.D && conductor == o.conductor;
    }
};

// An element of the base field: a rational, a quadratic element, or a
// cyclotomic element written in the base layer's ambient ring.
struct FieldElt {
    std::variant<mpq_class, QuadElt, CycloElt> v;

    static FieldElt rational(mpq_class q) { return {std::move(q)}; }
    static FieldElt quad(QuadElt x) { return {std::move(x)}; }
    static FieldElt cyclo(CycloElt x) { return {std::move(x)}; }
};

FieldElt fe_mul(const FieldElt& a, const FieldElt& b);
FieldElt fe_pow(const FieldElt& a, const mpz_class& e); // any sign of e
bool fe_eq(const FieldElt& a, const FieldElt& b);
bool fe_is_zero(const FieldElt& a);
// the rational value of a, independent of its representation; nullopt when
// a is irrational
std::optional<mpq_class> fe_rational_value(const FieldElt& a);
bool fe_is_pm_one(const FieldElt& a);

// ---------------------------------------------------------------------------
// The cyclotomic ell-tower over a base field.  Layer n is the subfield of
// Q(zeta_{M_n}) fixed by H_n, with M_n = f° * ell^(max(e,1)+n) where
// f = f°·ell^e is the base conductor, and
//   H_n = { a : a fixes the base field, a^(ell-1) = 1 mod ell-part }.
// [K_n : K] = ell^n, with Gal(K_n/K) generated by the compatible residues
// gamma_n = CRT(1 mod f°, 1 + ell^max(e,1) mod ell-part).
// ---------------------------------------------------------------------------

class TowerContext {
public:
    TowerContext(BaseField base, unsigned long ell, unsigned n_max,
                 size_t height_bound_bits = size_t(1) << 20);

    const BaseField& base() const { return base_; }
    unsigned long ell() const { return ell_; }
    unsigned n_max() const { return n_max_; }
    unsigned long base_degree() const { return base_degree_; }

    unsigned long layer_modulus(unsigned n) const;
    const AbelianField& layer(unsigned n) const;
    // generator of Gal(K_n/K) as a residue mod M_n; the residues are
    // compatible under reduction between layers
    uint64_t gamma(unsigned n) const;

    // rewrite x from the ambient ring of layer `from` into the ambient
    // ring of layer `to` (from <= to; exact substitution of zeta-powers)
    CycloElt lift(const CycloElt& x, unsigned from, unsigned to) const;

    // product of sigma_{gamma^(t*ell^to)}(x) for t < ell^(from-to),
    // computed in the ambient ring of layer `at` (at >= from >= to).
    // For x in K_from this is the norm N_{K_from/K_to}(x); the result is
    // checked to be fixed by the tower part of the smaller field's group.
    CycloElt norm_down(const CycloElt& x, unsigned at, unsigned from,
                       unsigned to) const;

    // the subgroup of (Z/M_at)^x fixing layer j (enumerated, sorted)
    std::vector<uint64_t> fixing_subgroup_at(unsigned at, unsigned j) const;

    // ---- base-field coordinates ----
    // embed a base element into the ambient ring of layer `at`
    CycloElt embed_base(const FieldElt& x, unsigned at) const;
    // exact extraction of a base-field element from its layer-`at`
    // representation (throws InvalidConfig if y is not in the base field)
    FieldElt to_base(const CycloElt& y, unsigned at) const;
    // power-basis generator of a real cyclotomic base: theta = zeta + 1/zeta
    // of the base conductor, represented at layer `at`
    CycloElt base_theta(unsigned at) const;

    size_t height_bound_bits() const { return height_bound_; }

private:
    BaseField base_;
    unsigned long ell_;
    unsigned n_max_;
    unsigned long fprime_;      // prime-to-ell part of the base conductor
    unsigned ell_exp_floor_;    // max(e, 1)
    unsigned long base_degree_;
    size_t height_bound_;
    std::vector<AbelianField> layers_;
    std::vector<uint64_t> gammas_;

    bool base_fixes(uint64_t a, unsigned long M) const;
    void check_height(const CycloElt& x) const;
};

// ---------------------------------------------------------------------------
// Unit-type lattices of the base field (multiplicative generator sets).
// ---------------------------------------------------------------------------

enum class LatticeKind { Units, EllUnits, SUnits, Circular, LogUnits, NormSubgroup };

struct UnitLattice {
    LatticeKind kind = LatticeKind::Units;
    unsigned long torsion_order = 2; // {+-1}; its ell-part is trivial, ell odd
    bool exact = true;               // generating set exact vs finite index
    std::vector<unsigned long> support; // rational primes under the places used
    std::vector<FieldElt> gens;
    BaseField field = BaseField::rationals();
    // Exponent presentation: when the generators are ell-adic kernel vectors
    // whose exponents are too large to materialize, the lattice is spanned by
    // prod ambient_gens[j]^exponents[i][j] (one row per generator) together
    // with the torsion.  gens is empty in that case and these two are empty
    // whenever gens is authoritative.
    std::vector<FieldElt> ambient_gens;
    std::vector<std::vector<mpz_class>> exponents;
    // diagnostic set by precision-limited constructions (empty = none)
    std::string anomaly;
};

// number of presented non-torsion generators
unsigned lattice_rank(const UnitLattice& L);

// Exact S-unit generators of the base field, S a set of rational primes
// containing ell: torsion -1, fundamental or circular units, and per-place
// generators obtained by principalizing powers of the places (quadratic)
// or from the totally ramified circular number (whitelisted real
// cyclotomic fields).  kind == EllUnits exactly when S == {ell}.
UnitLattice s_units(const BaseField& K, unsigned long ell,
                    std::vector<unsigned long> S);

// Sinnott circular numbers of layer n: for every divisor d > 1 of the
// layer modulus, the norm to K_n of 1 - zeta_d, together with all Galois
// translates; rational values +-1 are dropped, duplicates removed.
// Elements are returned in the ambient ring of layer n.
std::vector<CycloElt> circular_generators(const TowerContext& T, unsigned n);

// Bundled exact data of a real quadratic field: fundamental unit and both
// class groups.
struct QuadraticFieldData {
    long D = 0;
    QuadElt eps;
    int unit_norm = 0;
    ClassGroupData classes;
};
QuadraticFieldData quadratic_field_data(long D);

} // namespace lognorm
