#include "lognorm/padic.hpp"

#include <cmath>
#include <sstream>

namespace lognorm {

PadicContext::PadicContext(unsigned long ell, int N) : ell_(ell), N_(N) {
    if (ell < 3 || ell % 2 == 0 || !is_prime_u64(ell))
        throw InvalidConfig("PadicContext: ell must be an odd prime >= 3");
    if (N < 8) throw InvalidConfig("PadicContext: N must be >= 8");
    if (N > 4096) throw InvalidConfig("PadicContext: N unreasonably large");
    pow_.resize(N + 1);
    pow_[0] = 1;
    for (int i = 1; i <= N; ++i) pow_[i] = pow_[i - 1] * (long)ell;
}

const mpz_class& PadicContext::ell_pow(int k) const {
    if (k < 0 || k > N_) throw InvalidConfig("ell_pow: exponent out of range");
    return pow_[k];
}

PadicInt::PadicInt(const PadicContext& ctx, const mpz_class& value)
    : ctx_(&ctx), r_(value), prec_(ctx.precision()) {
    canonicalize();
}

PadicInt::PadicInt(const PadicContext& ctx, const mpz_class& value, int prec)
    : ctx_(&ctx), r_(value), prec_(prec) {
    if (prec < 0 || prec > ctx.precision())
        throw InvalidConfig("PadicInt: precision out of range");
    canonicalize();
}

PadicInt PadicInt::from_rational(const PadicContext& ctx, const mpq_class& q) {
    mpz_class den = q.get_den();
    long vden = (den == 1) ? 0 : val_p(den, ctx.ell_z());
    if (vden > 0)
        throw NotInvertible("from_rational: denominator not an ell-adic integer");
    mpz_class dinv;
    if (!mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), ctx.modulus().get_mpz_t()))
        throw NotInvertible("from_rational: denominator not invertible");
    return PadicInt(ctx, q.get_num() * dinv);
}

void PadicInt::canonicalize() {
    mpz_mod(r_.get_mpz_t(), r_.get_mpz_t(), ctx_->ell_pow(prec_).get_mpz_t());
}

int PadicInt::val() const {
    if (r_ == 0) return prec_;
    long v = val_p(r_, ctx_->ell_z());
    return (int)std::min<long>(v, prec_);
}

PadicInt PadicInt::operator+(const PadicInt& o) const {
    int p = std::min(prec_, o.prec_);
    return PadicInt(*ctx_, r_ + o.r_, p);
}

PadicInt PadicInt::operator-(const PadicInt& o) const {
    int p = std::min(prec_, o.prec_);
    return PadicInt(*ctx_, r_ - o.r_, p);
}

PadicInt PadicInt::operator-() const { return PadicInt(*ctx_, -r_, prec_); }

PadicInt PadicInt::operator*(const PadicInt& o) const {
    // x known mod ell^pa with val va, y mod ell^pb with val vb:
    // xy is known mod ell^min(pa+vb, pb+va), capped at N
    int va = val(), vb = o.val();
    int p = std::min({prec_ + vb, o.prec_ + va, ctx_->precision()});
    return PadicInt(*ctx_, r_ * o.r_, p);
}

bool PadicInt::operator==(const PadicInt& o) const {
    int p = std::min(prec_, o.prec_);
    return congruent(o, p);
}

bool PadicInt::congruent(const PadicInt& o, int p) const {
    if (p > std::min(prec_, o.prec_))
        throw PrecisionExhausted("congruent: requested precision exceeds known digits");
    mpz_class d = r_ - o.r_;
    mpz_mod(d.get_mpz_t(), d.get_mpz_t(), ctx_->ell_pow(p).get_mpz_t());
    return d == 0;
}

PadicInt PadicInt::inv() const {
    if (!is_unit()) throw NotInvertible("inv: not a unit at this precision");
    mpz_class r;
    if (!mpz_invert(r.get_mpz_t(), r_.get_mpz_t(), ctx_->ell_pow(prec_).get_mpz_t()))
        throw NotInvertible("inv: not invertible");
    return PadicInt(*ctx_, r, prec_);
}

PadicInt PadicInt::div_exact(const PadicInt& o) const {
    if (o.is_unit()) return *this * o.inv();
    int k = o.val();
    if (o.zero_at_precision())
        throw NotInvertible("div_exact: divisor is zero at precision");
    if (val() < k) throw NotInvertible("div_exact: quotient not integral");
    PadicInt num = shift_down(k);
    PadicInt den = o.shift_down(k);
    return num * den.inv();
}

PadicInt PadicInt::shift_down(int k) const {
    if (k == 0) return *this;
    if (k < 0) return shift_up(-k);
    if (val() < k)
        throw NotInvertible("shift_down: element not divisible by ell^k");
    int p = prec_ - k;
    if (p <= 0) throw PrecisionExhausted("shift_down: no digits left");
    mpz_class q;
    if (r_ == 0) {
        q = 0;
    } else {
        mpz_divexact(q.get_mpz_t(), r_.get_mpz_t(), ctx_->ell_pow(k).get_mpz_t());
    }
    return PadicInt(*ctx_, q, p);
}

PadicInt PadicInt::shift_up(int k) const {
    if (k == 0) return *this;
    if (k < 0) return shift_down(-k);
    int p = std::min(prec_ + k, ctx_->precision());
    return PadicInt(*ctx_, r_ * ctx_->ell_pow(std::min(k, ctx_->precision())), p);
}

PadicInt PadicInt::pow_ui(unsigned long e) const {
    PadicInt acc(*ctx_, 1, prec_);
    PadicInt base = *this;
    while (e) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

PadicInt PadicInt::reduce_to(int prec) const {
    if (prec > prec_)
        throw PrecisionExhausted("reduce_to: cannot gain precision");
    return PadicInt(*ctx_, r_, prec);
}

std::string PadicInt::str() const {
    std::ostringstream os;
    os << r_.get_str() << " + O(" << ctx_->ell() << "^" << prec_ << ")";
    return os.str();
}

std::vector<unsigned> PadicInt::unit_digits() const {
    std::vector<unsigned> digits;
    if (zero_at_precision()) return digits;
    mpz_class u = r_ / ctx_->ell_pow(val());
    int n = prec_ - val();
    for (int i = 0; i < n; ++i) {
        mpz_class d = u % (long)ctx_->ell();
        digits.push_back((unsigned)d.get_ui());
        u /= (long)ctx_->ell();
    }
    return digits;
}

PadicInt teichmuller(const PadicInt& u) {
    if (!u.is_unit()) throw NotUnit("teichmuller: argument must be a unit");
    const PadicContext& C = u.ctx();
    // iterate x -> x^ell; gains at least one digit of agreement per step
    PadicInt x = u;
    for (int i = 0; i <= u.prec() + 1; ++i) {
        PadicInt nx = x.pow_ui(C.ell());
        if (nx == x) return nx;
        x = nx;
    }
    throw PrecisionExhausted("teichmuller: no convergence (internal)");
}

namespace {

// log(1+z) for val(z) >= 1, truncated with a rigorous tail bound:
// after the cutoff every term z^i/i has valuation >= prec(z), because
// i*val(z) - v_ell(i) is eventually increasing in i.
PadicInt log_principal_series(const PadicInt& z) {
    const PadicContext& C = z.ctx();
    if (!z.zero_at_precision() && z.val() < 1)
        throw InvalidConfig("log series: argument not principal");
    int v = z.zero_at_precision() ? z.prec() : z.val();
    PadicInt sum(C, 0, z.prec());
    if (z.zero_at_precision()) return sum;
    PadicInt zpow = z;
    long i = 1;
    while (true) {
        // term = (-1)^(i+1) z^i / i
        long vi = 0;
        long ii = i;
        while (ii % (long)C.ell() == 0) { ++vi, ii /= (long)C.ell(); }
        PadicInt term = zpow.shift_down((int)vi) * PadicInt(C, ii, z.prec()).inv();
        if (i % 2 == 0) term = -term;
        sum = sum + term;
        ++i;
        // tail bound: for all j >= i, j*v - v_ell(j) >= i*v - log_ell(j)...
        // conservative: stop once i*v >= prec(z) + 2*log_ell(i) + 2
        double log_ell_i = std::log((double)i) / std::log((double)C.ell());
        if ((double)i * v >= (double)z.prec() + 2.0 * log_ell_i + 2.0) break;
        if (i > 8 * C.precision() + 64)
            throw PrecisionExhausted("log series: cutoff bound not reached");
        zpow = zpow * z;
    }
    return sum;
}

} // namespace

PadicInt iwasawa_log(const PadicInt& x) {
    const PadicContext& C = x.ctx();
    if (x.zero_at_precision())
        throw NotInvertible("iwasawa_log: argument is zero at precision");
    // strip the ell part: Log(ell) = 0
    PadicInt u = x.shift_down(x.val());
    // kill torsion and push into the domain of the series:
    // w = u^((ell-1) * ell^k), k = ceil(log_ell N)
    int k = 0;
    {
        unsigned long t = 1;
        while ((long)t < C.precision()) { t *= C.ell(); ++k; }
    }
    PadicInt w = u.pow_ui(C.ell() - 1);
    for (int i = 0; i < k; ++i) w = w.pow_ui(C.ell());
    PadicInt series = log_principal_series(w - PadicInt(C, 1, w.prec()));
    // divide by (ell-1) * ell^k
    PadicInt res = series.div_exact(PadicInt(C, C.ell() - 1, series.prec()));
    if (res.val() < k && !res.zero_at_precision())
        throw PrecisionExhausted("iwasawa_log: unexpected valuation before descaling");
    res = res.shift_down(k);
    if (res.prec() < C.certified())
        throw PrecisionExhausted("iwasawa_log: certified precision below N/2");
    return res;
}

SplitDecomposition decompose_split_local(const PadicInt& x) {
    const PadicContext& C = x.ctx();
    if (x.zero_at_precision())
        throw NotDecomposable("decompose: zero at precision");
    long kv = x.val();
    PadicInt u = x.shift_down((int)kv);
    PadicInt omega = teichmuller(u);
    PadicInt one(C, 1, omega.prec());
    int sign;
    if (omega.congruent(one, omega.prec())) {
        sign = 1;
    } else if ((-omega).congruent(one, omega.prec())) {
        sign = -1;
    } else {
        throw NotDecomposable("decompose: Teichmueller character has order > 2");
    }
    // alpha = Log(x) / Log(1+ell); both have valuation exactly 1
    PadicInt lx = iwasawa_log(x);
    PadicInt lb = iwasawa_log(PadicInt(C, (long)C.ell() + 1));
    if (lb.val() != 1)
        throw PrecisionExhausted("decompose: Log(1+ell) valuation != 1 (internal)");
    PadicInt alpha = lx.shift_down(1) * lb.shift_down(1).inv();
    if (alpha.prec() < C.certified())
        throw PrecisionExhausted("decompose: alpha below certified precision");
    return SplitDecomposition{sign, alpha, kv};
}

PadicInt principal_power(const PadicContext& ctx, const PadicInt& alpha) {
    return principal_power_of(PadicInt(ctx, (long)ctx.ell() + 1), alpha);
}

PadicInt principal_power_of(const PadicInt& u, const PadicInt& alpha) {
    const PadicContext& C = u.ctx();
    PadicInt one(C, 1, u.prec());
    if (!(u - one).zero_at_precision() && (u - one).val() < 1)
        throw InvalidConfig("principal_power_of: base not a principal unit");
    // (1 + ell t)^(ell^(N-1)) = 1 mod ell^N, so the exponent only matters
    // modulo ell^(N-1); use the canonical residue of alpha there.
    mpz_class e = alpha.residue();
    mpz_mod(e.get_mpz_t(), e.get_mpz_t(),
            C.ell_pow(std::min(alpha.prec(), C.precision() - 1)).get_mpz_t());
    PadicInt acc(C, 1, u.prec());
    PadicInt base = u;
    mpz_class ee = e;
    while (ee != 0) {
        if (mpz_odd_p(ee.get_mpz_t())) acc = acc * base;
        base = base * base;
        mpz_fdiv_q_2exp(ee.get_mpz_t(), ee.get_mpz_t(), 1);
    }
    // perturbing the exponent by ell^p moves the result by a factor
    // congruent to 1 mod ell^(p+1), so only p+1 digits are determined
    int certified = std::min(u.prec(), alpha.prec() + 1);
    return acc.reduce_to(std::min(acc.prec(), certified));
}

} // namespace lognorm
