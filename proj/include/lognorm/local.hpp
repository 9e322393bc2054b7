#pragma once

#include <gmpxx.h>

#include <vector>

#include "lognorm/errors.hpp"
#include "lognorm/padic.hpp"
#include "lognorm/quadratic.hpp"

namespace lognorm {

// The ring of integers of a finite extension of Q_ell presented as
// Z_ell[x]/(f) for a monic integral minimal polynomial f whose root
// generates the maximal order.  Supported shapes:
//   - quadratic x^2 - D for fundamental D, ell odd and nonsplit in D
//     (inert: e = 1, f = 2; ramified: e = 2, f = 1),
//   - the real cyclotomic cubic x^3 - 3x + 1 over Q_3 (e = 3, f = 1),
//     the completion of the degree-nine real cyclotomic field at three.
class LocalRing {
public:
    static LocalRing quadratic(const PadicContext& ctx, long D);
    static LocalRing real_cyclotomic9(const PadicContext& ctx);

    const PadicContext& ctx() const { return *ctx_; }
    unsigned degree() const { return static_cast<unsigned>(minpoly_.size() - 1); }
    unsigned ram_index() const { return e_; }
    unsigned res_degree() const { return f_; }
    const std::vector<mpz_class>& minpoly() const { return minpoly_; }
    // discriminant tag of a quadratic ring, zero for the cubic ring
    long disc_tag() const { return D_; }
    bool operator==(const LocalRing& o) const {
        return ctx_ == o.ctx_ && minpoly_ == o.minpoly_;
    }

private:
    LocalRing(const PadicContext& ctx, std::vector<mpz_class> poly, unsigned e,
              unsigned f, long D)
        : ctx_(&ctx), minpoly_(std::move(poly)), e_(e), f_(f), D_(D) {}
    const PadicContext* ctx_;
    std::vector<mpz_class> minpoly_; // ascending, monic
    unsigned e_, f_;
    long D_;
};

// Element of a LocalRing in power-basis coordinates 1, x, ..., x^(d-1),
// each coordinate a PadicInt with its own certified precision.
class LocalElt {
public:
    LocalElt(LocalRing ring, std::vector<PadicInt> coords);
    static LocalElt from_rational(const LocalRing& R, const mpq_class& a);
    static LocalElt from_coords(const LocalRing& R, const std::vector<mpq_class>& c);
    static LocalElt from_quad(const LocalRing& R, const QuadElt& x);
    static LocalElt generator(const LocalRing& R);

    const LocalRing& ring() const { return ring_; }
    const std::vector<PadicInt>& coords() const { return c_; }
    bool zero_at_precision() const;

    LocalElt operator+(const LocalElt& o) const;
    LocalElt operator-(const LocalElt& o) const;
    LocalElt operator-() const;
    LocalElt operator*(const LocalElt& o) const;
    LocalElt pow_ui(unsigned long e) const;
    bool operator==(const LocalElt& o) const; // equality at joint precision

private:
    LocalRing ring_;
    std::vector<PadicInt> c_;
};

// Norm and trace to Q_ell (determinant and trace of the multiplication
// matrix in the power basis).
PadicInt local_norm(const LocalElt& x);
PadicInt local_trace(const LocalElt& x);

// Valuation normalized on the uniformizer: v(pi) = 1, v(ell) = e.
// Computed as v_ell(norm)/f; throws PrecisionExhausted when the norm is
// indistinguishable from zero at working precision.
long local_valuation(const LocalElt& x);

// Scaled logarithm of a unit: the power-basis coordinates of
// log(x^s) with s = (ell^f - 1) * ell.  The s-th power kills the
// Teichmueller component and lands inside the convergence domain of the
// series for every supported ring, so the result is an integral
// coordinate vector; the map u -> log(u^s) is a homomorphism into the
// additive group whose kernel on units is exactly the torsion.
std::vector<PadicInt> local_log(const LocalElt& x);
// the exponent s used by local_log on this ring
unsigned long local_log_scale(const LocalRing& R);

} // namespace lognorm
