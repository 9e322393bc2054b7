#pragma once

#include <gmpxx.h>

#include <memory>
#include <string>
#include <vector>

#include "lognorm/errors.hpp"
#include "lognorm/util.hpp"

namespace lognorm {

// Fixed working precision over Z/ell^N, viewed as a truncation of Z_ell.
// ell is an odd prime >= 3 and N >= 8.  Everything is computed modulo
// ell^N; results quoted by public entry points are certified modulo
// ell^(N/2), the upper half of the digit range serving as a guard band
// against precision loss in logarithms and exact divisions.
class PadicContext {
public:
    PadicContext(unsigned long ell, int N);

    unsigned long ell() const { return ell_; }
    int precision() const { return N_; }
    int certified() const { return N_ / 2; }
    const mpz_class& modulus() const { return pow_[N_]; }
    const mpz_class& ell_pow(int k) const;
    const mpz_class& ell_z() const { return pow_[1]; }

private:
    unsigned long ell_;
    int N_;
    std::vector<mpz_class> pow_; // ell^0 .. ell^N
};

// An element of Z_ell known modulo ell^prec, prec <= N.  The residue is
// kept canonical in [0, ell^prec).  prec degrades only under division by
// powers of ell (and the series operations built on it); ring operations
// propagate the interval bound min rule.
class PadicInt {
public:
    PadicInt() : ctx_(nullptr), prec_(0) {}
    PadicInt(const PadicContext& ctx, const mpz_class& value);
    PadicInt(const PadicContext& ctx, const mpz_class& value, int prec);
    static PadicInt from_rational(const PadicContext& ctx, const mpq_class& q);

    const PadicContext& ctx() const { return *ctx_; }
    const mpz_class& residue() const { return r_; }
    int prec() const { return prec_; }

    // v_ell of the known part, capped at prec; val() == prec() means the
    // element is indistinguishable from zero at this precision.
    int val() const;
    bool zero_at_precision() const { return r_ == 0; }
    bool is_unit() const { return !zero_at_precision() && val() == 0; }

    PadicInt operator+(const PadicInt& o) const;
    PadicInt operator-(const PadicInt& o) const;
    PadicInt operator-() const;
    PadicInt operator*(const PadicInt& o) const;
    bool operator==(const PadicInt& o) const; // equality at the joint precision

    PadicInt inv() const;                  // units only; throws NotInvertible
    PadicInt div_exact(const PadicInt& o) const; // o a unit, or val(o) <= val(this)
    PadicInt shift_down(int k) const;      // exact division by ell^k; prec -= k
    PadicInt shift_up(int k) const;        // multiplication by ell^k
    PadicInt pow_ui(unsigned long e) const;
    PadicInt reduce_to(int prec) const;

    // x ~ y iff val(x - y) >= p
    bool congruent(const PadicInt& o, int p) const;

    std::string str() const; // "val + O(...)" friendly debug form
    // base-ell digits of the unit part, least significant first
    std::vector<unsigned> unit_digits() const;

private:
    const PadicContext* ctx_;
    mpz_class r_;
    int prec_;
    void canonicalize();
};

// Teichmueller lift of the reduction of u: the unique (ell-1)-st root of
// unity congruent to u mod ell.  u must be a unit.
PadicInt teichmuller(const PadicInt& u);

// Iwasawa logarithm on Q_ell^x, normalized by Log(ell) = 0 and Log = 0 on
// torsion.  Computed by raising the unit part to (ell-1) * ell^k with
// k = ceil(log_ell N), running the truncated log(1+z) series with a
// rigorous tail cutoff, and dividing back.  Throws PrecisionExhausted if
// the certified output precision would fall below N/2.
PadicInt iwasawa_log(const PadicInt& x);

// x = sign * (1+ell)^alpha * ell^k per the multiplicative decomposition of
// Q_ell^x with ell odd.  Requires the Teichmueller character of x to have
// order <= 2; otherwise throws NotDecomposable.
struct SplitDecomposition {
    int sign;       // +1 or -1
    PadicInt alpha; // exponent of 1+ell
    long k;         // exponent of ell
};
SplitDecomposition decompose_split_local(const PadicInt& x);

// (1+ell)^alpha for alpha in Z_ell; well defined mod ell^N since the
// principal-unit group has exponent dividing ell^(N-1) there.
PadicInt principal_power(const PadicContext& ctx, const PadicInt& alpha);
// u^alpha for u = 1 mod ell
PadicInt principal_power_of(const PadicInt& u, const PadicInt& alpha);

} // namespace lognorm
