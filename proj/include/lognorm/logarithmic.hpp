#pragma once

#include <gmpxx.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lognorm/fields.hpp"
#include "lognorm/local.hpp"
#include "lognorm/padic.hpp"

namespace lognorm {

// ---------------------------------------------------------------------------
// Logarithmic valuations.  Away from ell the logarithmic valuation of a
// place coincides with the usual normalized valuation and the place has
// degree Log(Np) under the Iwasawa logarithm.  Above ell it is
//     vtilde_p(x) = -Log(N_{K_p/Q_ell}(x)) / lambda_p,
// where lambda_p = ell^{v_min} generates the ideal of Iwasawa logarithms of
// local norms, v_min scanned over the deterministic probe set
// {1 + ell} u {1 + ell * theta^j} on a power basis of the field.  The
// degree of an ell-place is lambda_p, which makes the product formula
//     sum_p vtilde_p(x) * deg_p = 0
// an exact identity: both sides telescope to Log(N_{K/Q}(x)).
// ---------------------------------------------------------------------------

struct LogPlace {
    unsigned long q = 0;     // underlying rational prime
    int index = 0;           // 0, or 0/1 for the two places of a split prime
    unsigned res_degree = 1; // f
    unsigned ram_index = 1;  // e
    bool above_ell = false;
    PadicInt lambda; // ell-places only: the normalizer ell^{v_min}
    PadicInt degree; // Log(Np) away from ell, lambda above ell

    bool operator==(const LogPlace& o) const { return q == o.q && index == o.index; }
    bool operator<(const LogPlace& o) const {
        return q != o.q ? q < o.q : index < o.index;
    }
};

// Finite formal Z_ell-combination of places together with its total degree.
// Tame places with coefficient zero are dropped from the support; the
// places above ell are kept even when their coefficient vanishes, since a
// zero there is a statement at finite precision.
struct LogDivisor {
    std::vector<std::pair<LogPlace, PadicInt>> support; // sorted by place
    PadicInt degree;                                    // sum coeff * deg_p

    bool zero_at_precision() const;
    // coefficient lookup; nullptr when the place is not in the support
    const PadicInt* coefficient(unsigned long q, int index = 0) const;
};

// ---------------------------------------------------------------------------
// Per-field context: the padic workspace, the places above ell with their
// normalizers, and the valuation/divisor primitives.  Results holding
// PadicInt values reference the context's padic data; the context owns it
// through a shared handle which the aggregate results below also carry.
// ---------------------------------------------------------------------------

class LogarithmicContext {
public:
    LogarithmicContext(BaseField K, unsigned long ell, int precision);

    const BaseField& field() const { return K_; }
    unsigned long ell() const { return ell_; }
    const PadicContext& padic() const { return *ctx_; }
    std::shared_ptr<const PadicContext> padic_handle() const { return ctx_; }
    unsigned degree() const { return degree_; }

    const std::vector<LogPlace>& ell_places() const { return ell_places_; }
    // the places of the field above a rational prime q (q == ell included)
    std::vector<LogPlace> places_above(unsigned long q) const;

    // vtilde_p(x); ordinary exact valuation away from ell (embedded in
    // Z_ell at full precision), the normalized -Log(N)/lambda above ell
    PadicInt log_valuation(const FieldElt& x, const LogPlace& p) const;

    // divisor of x: coefficients vtilde_p(x) over the support of x plus the
    // ell-places; degree is checked to vanish at certified precision
    LogDivisor principal_log_divisor(const FieldElt& x) const;

    // exact rational norm N_{K/Q}(x)
    mpq_class field_norm(const FieldElt& x) const;

    // Iwasawa logarithm of a nonzero rational: Log(ell) = 0, torsion killed
    PadicInt log_rational(const mpq_class& x) const;

private:
    BaseField K_;
    unsigned long ell_ = 0;
    unsigned degree_ = 1;
    std::shared_ptr<const PadicContext> ctx_;
    std::optional<AbelianField> abelian_; // Galois data (real cyclotomic base)
    std::vector<LogPlace> ell_places_;
    mpz_class split_root_; // sqrt(D) mod ell^N when ell splits in Q(sqrt D)

    PadicInt log_local_norm(const FieldElt& x, const LogPlace& p) const;
    void build_ell_places();
};

// ---------------------------------------------------------------------------
// The logarithmic class group: degree-zero divisors supported on the places
// above a generating support set S, modulo the principal logarithmic
// divisors of the S-units.  Computed by Smith reduction of the relation
// matrix over Z/ell^N with minimal-valuation pivoting.  Finiteness is a
// theorem of Gross-Kuzmin type and is never assumed: a quotient factor not
// hit by any relation at working precision is reported through the
// finiteness flag instead of being silently truncated.
// ---------------------------------------------------------------------------

struct LogClassGroup {
    std::vector<unsigned long> factor_orders;  // nontrivial cyclic orders,
                                               // ascending divisibility
    std::vector<LogDivisor> generator_divisors; // one per nontrivial factor
    bool finite = true;
    unsigned pseudo_free_rank = 0; // factors unresolved at precision
    int precision = 0;             // working modulus exponent
    int margin = 0;                // digits between the largest elementary
                                   // divisor and the working precision
    std::string anomaly;           // set when finite is false
    std::vector<unsigned long> support; // primes under the presentation
    std::shared_ptr<const PadicContext> ctx; // keep-alive for PadicInt data

    mpz_class order() const; // product of the factor orders; finite only
};

// S empty selects the support deterministically: ell plus the smallest
// primes whose place classes generate the class group.  An explicit S must
// contain ell and satisfy the same generation property.
LogClassGroup log_class_group(const BaseField& K, unsigned long ell,
                              int precision,
                              const std::vector<unsigned long>& S = {});

// ---------------------------------------------------------------------------
// Logarithmic units: the kernel of every logarithmic valuation on the
// S-unit lattice (S = {ell} by default), saturated.  When the field has a
// unique place above ell and every generator has norm +-ell^k the kernel
// condition is exactly zero and the lattice is returned exactly; otherwise
// the result is an exponent presentation over the S-unit generators whose
// kernel vectors are certified at precision and re-verified against the
// full-precision valuation data.
// ---------------------------------------------------------------------------

UnitLattice log_units(const BaseField& K, unsigned long ell, int precision,
                      std::vector<unsigned long> S = {});

// ---------------------------------------------------------------------------
// Semi-localization: images of the lattice generators in the product of
// the completions at the ell-places.  Completions of degree one are
// reported with their full multiplicative decomposition
//     x = omega * (1+ell)^alpha * ell^v
// (Teichmueller part, principal-unit exponent, ordinary valuation) plus
// the logarithmic-uniformizer exponent vtilde_p(x).  Higher-degree
// completions carry the power-basis image.  The report includes the rank
// of the Iwasawa-logarithm image at precision against the rank predicted
// by the Leopoldt conjecture; their difference is the observed defect.
// ---------------------------------------------------------------------------

struct LocalComponent {
    LogPlace place;
    bool qp_form = true; // completion is Q_ell itself
    // qp_form: unit part of the image (full image = qp_value * ell^v)
    PadicInt qp_value;
    PadicInt teichmuller_part;
    PadicInt principal_unit_exponent;
    long ordinary_valuation = 0;
    PadicInt log_uniformizer_exponent; // vtilde at this place
    // higher-degree completion: power-basis image
    std::optional<LocalElt> ext_value;
};

struct SemiLocalImage {
    std::vector<LocalComponent> components; // one per ell-place, in order
};

struct SemiLocalization {
    std::vector<SemiLocalImage> images; // one per presented generator
    unsigned expected_log_rank = 0;
    unsigned observed_log_rank = 0;
    unsigned leopoldt_defect = 0; // expected - observed
    int precision = 0;
    std::shared_ptr<const PadicContext> ctx; // keep-alive for PadicInt data
};

SemiLocalization semi_localize(const UnitLattice& L, unsigned long ell,
                               int precision);

// ---------------------------------------------------------------------------
// Helpers shared by the tests and the tower-level index machinery.
// ---------------------------------------------------------------------------

// ell-part of the order of Cl' = Cl / <classes of the places above ell>
// for a real quadratic field.  When the field has a unique, totally
// ramified place above ell this equals the order of the logarithmic class
// group.
unsigned long cl_prime_ell_part(long D, unsigned long ell);

// Same-lattice test at precision: mutual inclusion of two unit lattices of
// the same field, compared through exact valuations at the support places
// and Iwasawa-logarithm coordinates at the ell-places.
bool lattices_agree(const UnitLattice& A, const UnitLattice& B,
                    unsigned long ell, int precision);

} // namespace lognorm
