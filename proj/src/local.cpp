#include "lognorm/local.hpp"

#include <utility>

#include "lognorm/util.hpp"

namespace lognorm {

namespace {

void require_same_ring(const LocalElt& x, const LocalElt& y) {
    if (!(x.ring() == y.ring()))
        throw InvalidConfig("local elements lie in different rings");
}

// ceil(log_ell(i)) for i >= 1
unsigned ceil_log(unsigned long ell, unsigned long i) {
    unsigned k = 0;
    unsigned long p = 1;
    while (p < i) {
        p *= ell;
        ++k;
    }
    return k;
}

} // namespace

LocalRing LocalRing::quadratic(const PadicContext& ctx, long D) {
    if (D < 5 || !is_fundamental_discriminant(D))
        throw InvalidConfig("discriminant must be fundamental and at least 5");
    int chi = kronecker(mpz_class(D), mpz_class(ctx.ell()));
    if (chi == 1)
        throw InvalidConfig("split prime: use the two scalar embeddings instead");
    unsigned e = (chi == 0) ? 2 : 1;
    unsigned f = (chi == 0) ? 1 : 2;
    return LocalRing(ctx, {mpz_class(-D), 0, 1}, e, f, D);
}

LocalRing LocalRing::real_cyclotomic9(const PadicContext& ctx) {
    if (ctx.ell() != 3)
        throw InvalidConfig("the real cyclotomic cubic ring lives over three");
    return LocalRing(ctx, {1, -3, 0, 1}, 3, 1, 0);
}

LocalElt::LocalElt(LocalRing ring, std::vector<PadicInt> coords)
    : ring_(std::move(ring)), c_(std::move(coords)) {
    if (c_.size() != ring_.degree())
        throw InvalidConfig("coordinate count does not match the ring degree");
}

LocalElt LocalElt::from_rational(const LocalRing& R, const mpq_class& a) {
    std::vector<PadicInt> c(R.degree());
    c[0] = PadicInt::from_rational(R.ctx(), a);
    for (unsigned i = 1; i < R.degree(); ++i) c[i] = PadicInt(R.ctx(), 0);
    return LocalElt(R, std::move(c));
}

LocalElt LocalElt::from_coords(const LocalRing& R, const std::vector<mpq_class>& q) {
    if (q.size() != R.degree())
        throw InvalidConfig("coordinate count does not match the ring degree");
    std::vector<PadicInt> c(R.degree());
    for (unsigned i = 0; i < R.degree(); ++i)
        c[i] = PadicInt::from_rational(R.ctx(), q[i]);
    return LocalElt(R, std::move(c));
}

LocalElt LocalElt::from_quad(const LocalRing& R, const QuadElt& x) {
    if (R.disc_tag() == 0 || x.D != R.disc_tag())
        throw InvalidConfig("element does not come from this ring's field");
    return from_coords(R, {x.a, x.b});
}

LocalElt LocalElt::generator(const LocalRing& R) {
    std::vector<PadicInt> c(R.degree());
    for (unsigned i = 0; i < R.degree(); ++i)
        c[i] = PadicInt(R.ctx(), i == 1 ? 1 : 0);
    return LocalElt(R, std::move(c));
}

bool LocalElt::zero_at_precision() const {
    for (const auto& v : c_)
        if (!v.zero_at_precision()) return false;
    return true;
}

LocalElt LocalElt::operator+(const LocalElt& o) const {
    require_same_ring(*this, o);
    std::vector<PadicInt> c(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) c[i] = c_[i] + o.c_[i];
    return LocalElt(ring_, std::move(c));
}

LocalElt LocalElt::operator-(const LocalElt& o) const {
    require_same_ring(*this, o);
    std::vector<PadicInt> c(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) c[i] = c_[i] - o.c_[i];
    return LocalElt(ring_, std::move(c));
}

LocalElt LocalElt::operator-() const {
    std::vector<PadicInt> c(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) c[i] = -c_[i];
    return LocalElt(ring_, std::move(c));
}

LocalElt LocalElt::operator*(const LocalElt& o) const {
    require_same_ring(*this, o);
    const unsigned d = ring_.degree();
    const auto& f = ring_.minpoly();
    std::vector<PadicInt> w(2 * d - 1, PadicInt(ring_.ctx(), 0));
    for (unsigned i = 0; i < d; ++i)
        for (unsigned j = 0; j < d; ++j) w[i + j] = w[i + j] + c_[i] * o.c_[j];
    // reduce x^k = -(f[d-1] x^(k-1) + ... + f[0] x^(k-d)) for k from high down
    for (unsigned k = 2 * d - 2; k >= d && k < w.size(); --k) {
        PadicInt lead = w[k];
        for (unsigned j = 0; j < d; ++j)
            w[k - d + j] = w[k - d + j] - lead * PadicInt(ring_.ctx(), f[j]);
        w[k] = PadicInt(ring_.ctx(), 0);
    }
    w.resize(d);
    return LocalElt(ring_, std::move(w));
}

LocalElt LocalElt::pow_ui(unsigned long e) const {
    LocalElt acc = from_rational(ring_, 1);
    LocalElt base = *this;
    while (e != 0) {
        if (e & 1UL) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

bool LocalElt::operator==(const LocalElt& o) const {
    if (!(ring_ == o.ring_)) return false;
    for (size_t i = 0; i < c_.size(); ++i)
        if (!(c_[i] == o.c_[i])) return false;
    return true;
}

namespace {

// columns of the multiplication-by-x matrix in the power basis
std::vector<LocalElt> mult_columns(const LocalElt& x) {
    const unsigned d = x.ring().degree();
    std::vector<LocalElt> cols;
    cols.reserve(d);
    LocalElt cur = x;
    LocalElt gen = LocalElt::generator(x.ring());
    for (unsigned j = 0; j < d; ++j) {
        cols.push_back(cur);
        if (j + 1 < d) cur = cur * gen;
    }
    return cols;
}

} // namespace

PadicInt local_norm(const LocalElt& x) {
    const unsigned d = x.ring().degree();
    auto cols = mult_columns(x);
    auto m = [&](unsigned i, unsigned j) { return cols[j].coords()[i]; };
    if (d == 1) return m(0, 0);
    if (d == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (d == 3)
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    throw InvalidConfig("unsupported ring degree");
}

PadicInt local_trace(const LocalElt& x) {
    const unsigned d = x.ring().degree();
    auto cols = mult_columns(x);
    PadicInt t = cols[0].coords()[0];
    for (unsigned j = 1; j < d; ++j) t = t + cols[j].coords()[j];
    return t;
}

long local_valuation(const LocalElt& x) {
    PadicInt n = local_norm(x);
    if (n.zero_at_precision())
        throw PrecisionExhausted("valuation not determined at working precision");
    long v = n.val();
    if (v % x.ring().res_degree() != 0)
        throw Anomaly("norm valuation not divisible by the residue degree");
    return v / x.ring().res_degree();
}

unsigned long local_log_scale(const LocalRing& R) {
    unsigned long q = 1;
    for (unsigned i = 0; i < R.res_degree(); ++i) q *= R.ctx().ell();
    return (q - 1) * R.ctx().ell();
}

std::vector<PadicInt> local_log(const LocalElt& x) {
    const LocalRing& R = x.ring();
    const PadicContext& ctx = R.ctx();
    if (local_valuation(x) != 0) throw NotUnit("logarithm of a non-unit");
    const unsigned long s = local_log_scale(R);
    LocalElt z = x.pow_ui(s) - LocalElt::from_rational(R, 1);
    const unsigned d = R.degree();
    if (z.zero_at_precision()) {
        std::vector<PadicInt> out(d);
        for (unsigned i = 0; i < d; ++i) out[i] = PadicInt(ctx, 0);
        return out;
    }
    const long e = R.ram_index();
    const long m = local_valuation(z);
    // every unit's s-th power satisfies v(u^s - 1) >= e in the supported
    // rings; m >= e gives both series convergence and monotonicity of the
    // per-term valuation bound below, so a violation is a genuine defect
    if (m < e) throw Anomaly("scaled unit escaped the convergence domain");
    // sum (-1)^(i+1) z^i / i until every remaining term vanishes
    // coordinatewise at working precision: i*m - e*ceil(log_ell i) >= e*N
    const long target = static_cast<long>(ctx.precision()) * e;
    std::vector<PadicInt> acc(d);
    for (unsigned k = 0; k < d; ++k) acc[k] = PadicInt(ctx, 0);
    LocalElt term = z;
    for (unsigned long i = 1; i <= 100000; ++i) {
        if (i > 1) term = term * z;
        long vi = val_p(mpz_class(i), mpz_class(ctx.ell()));
        unsigned long iu = i;
        for (long t = 0; t < vi; ++t) iu /= ctx.ell();
        PadicInt inv_unit = PadicInt(ctx, mpz_class(iu)).inv();
        for (unsigned k = 0; k < d; ++k) {
            PadicInt contrib = (term.coords()[k] * inv_unit).shift_down(static_cast<int>(vi));
            acc[k] = (i % 2 == 1) ? acc[k] + contrib : acc[k] - contrib;
        }
        long next = static_cast<long>(i + 1) * m -
                    e * static_cast<long>(ceil_log(ctx.ell(), i + 1));
        if (next >= target) return acc;
    }
    throw BoundExceeded("logarithm series did not terminate");
}

} // namespace lognorm
