#include "lognorm/logarithmic.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "lognorm/util.hpp"

namespace lognorm {

namespace {

// ---- small helpers ----------------------------------------------------

void require_odd_prime(unsigned long ell) {
    if (ell < 3 || !is_prime_u64(ell))
        throw InvalidConfig("ell must be an odd prime");
}

// v_ell(x) and the ell-free part of a nonzero integer
std::pair<long, mpz_class> strip_ell(const mpz_class& x, unsigned long ell) {
    if (x == 0) throw InvalidConfig("cannot strip a zero integer");
    mpz_class u;
    mpz_class e(ell);
    long v = static_cast<long>(
        mpz_remove(u.get_mpz_t(), x.get_mpz_t(), e.get_mpz_t()));
    return {v, u};
}

mpz_class centered_lift(const mpz_class& r, const mpz_class& mod) {
    mpz_class c = r % mod;
    if (c < 0) c += mod;
    if (2 * c > mod) c -= mod;
    return c;
}

// true iff |q| is a power of ell (ell^0 allowed)
bool is_pm_ell_power(const mpq_class& q, unsigned long ell) {
    if (q == 0) return false;
    mpz_class num = abs(mpz_class(q.get_num()));
    mpz_class den = q.get_den();
    return strip_ell(num, ell).second == 1 && strip_ell(den, ell).second == 1;
}

size_t fe_height_bits(const FieldElt& g) {
    size_t h = 1;
    auto rat = [&](const mpq_class& q) {
        h = std::max(h, mpz_sizeinbase(q.get_num().get_mpz_t(), 2));
        h = std::max(h, mpz_sizeinbase(q.get_den().get_mpz_t(), 2));
    };
    if (const auto* q = std::get_if<mpq_class>(&g.v)) {
        rat(*q);
    } else if (const auto* u = std::get_if<QuadElt>(&g.v)) {
        rat(u->a);
        rat(u->b);
    } else {
        h = std::get<CycloElt>(g.v).height_bits();
    }
    return h;
}

// Newton lift of a simple root r0 of x^3 - 3x + 1 modulo q to modulo q^m.
mpz_class lift_cubic_root(unsigned long q, unsigned long m, unsigned long r0) {
    mpz_class qz(q), r(r0), M(q), target;
    mpz_pow_ui(target.get_mpz_t(), qz.get_mpz_t(), m);
    // explicit return types force evaluation of the gmpxx expression
    // templates before their operand temporaries go out of scope
    auto f = [](const mpz_class& x) -> mpz_class { return x * x * x - 3 * x + 1; };
    auto fp = [](const mpz_class& x) -> mpz_class { return 3 * x * x - 3; };
    while (M < target) {
        mpz_class M2 = M * M;
        if (M2 > target) M2 = target;
        mpz_class d = fp(r) % M2, inv;
        if (d < 0) d += M2;
        if (mpz_invert(inv.get_mpz_t(), d.get_mpz_t(), M2.get_mpz_t()) == 0)
            throw Anomaly("cubic root lift hit a non-invertible derivative");
        r = (r - f(r) % M2 * inv) % M2;
        if (r < 0) r += M2;
        M = M2;
    }
    if (f(r) % target != 0) throw Anomaly("cubic root lift failed to converge");
    return r;
}

// ---- Smith reduction over Z/ell^W with minimal-valuation pivoting ------

struct PadicSnf {
    unsigned rows = 0, cols = 0;
    int work_prec = 0;      // W: input entries certified modulo ell^W
    int effective_prec = 0; // W minus the accumulated pivot valuations
    std::vector<int> pivot_vals; // ascending
    // unimodular integer column transform and its inverse, entries mod ell^W
    std::vector<std::vector<mpz_class>> V;    // cols x cols
    std::vector<std::vector<mpz_class>> Vinv; // cols x cols
};

// Diagonalize A (rows x cols of PadicInt over a common context) by integer
// row and column operations, always pivoting on an entry of minimal
// ell-adic valuation.  The pivot valuations come out ascending, so the
// diagonal is ell^{v_0} | ell^{v_1} | ...; columns that never produce a
// pivot are annihilated by no relation at the effective precision.
PadicSnf padic_snf(const std::vector<std::vector<PadicInt>>& A,
                   const PadicContext& ctx) {
    PadicSnf out;
    out.rows = static_cast<unsigned>(A.size());
    out.cols = out.rows ? static_cast<unsigned>(A[0].size()) : 0;
    int W = ctx.precision();
    for (const auto& row : A) {
        if (row.size() != out.cols) throw Anomaly("ragged relation matrix");
        for (const PadicInt& x : row) W = std::min(W, x.prec());
    }
    // entries may sit below the context's certified band (valuations above
    // ell divide a logarithm by the normalizer); the reduction itself only
    // needs enough room to distinguish the elementary divisors it reports
    const int floor_prec = std::max(4, ctx.certified() / 2);
    if (W < floor_prec)
        throw PrecisionExhausted("relation matrix entries below the working floor");
    out.work_prec = W;
    out.effective_prec = W;
    if (out.cols == 0) return out;

    const mpz_class mod = ctx.ell_pow(W);
    const mpz_class ellz(ctx.ell());
    std::vector<std::vector<mpz_class>> M(out.rows,
                                          std::vector<mpz_class>(out.cols));
    for (unsigned i = 0; i < out.rows; ++i)
        for (unsigned j = 0; j < out.cols; ++j) {
            mpz_class r = A[i][j].residue() % mod;
            if (r < 0) r += mod;
            M[i][j] = r;
        }
    out.V.assign(out.cols, std::vector<mpz_class>(out.cols, 0));
    out.Vinv.assign(out.cols, std::vector<mpz_class>(out.cols, 0));
    for (unsigned j = 0; j < out.cols; ++j) out.V[j][j] = out.Vinv[j][j] = 1;

    auto val_of = [&](const mpz_class& x, int cap) {
        if (x == 0) return cap;
        mpz_class u;
        int v = static_cast<int>(
            mpz_remove(u.get_mpz_t(), x.get_mpz_t(), ellz.get_mpz_t()));
        return std::min(v, cap);
    };

    unsigned t = 0;
    const unsigned tmax = std::min(out.rows, out.cols);
    while (t < tmax) {
        // an entry at or above the certified band (or the remaining
        // effective precision) cannot be told apart from zero, so it can
        // never serve as a pivot; the columns it leaves behind surface as
        // kernel vectors or unresolved factors, never as fabricated ones
        const int cutoff = std::min(out.effective_prec, ctx.certified());
        int best = cutoff;
        unsigned bi = t, bj = t;
        for (unsigned i = t; i < out.rows; ++i)
            for (unsigned j = t; j < out.cols; ++j) {
                int v = val_of(M[i][j], cutoff);
                if (v < best) {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        if (best >= cutoff) break;
        std::swap(M[bi], M[t]);
        if (bj != t) {
            for (unsigned i = 0; i < out.rows; ++i) std::swap(M[i][bj], M[i][t]);
            for (unsigned i = 0; i < out.cols; ++i)
                std::swap(out.V[i][bj], out.V[i][t]);
            std::swap(out.Vinv[bj], out.Vinv[t]);
        }
        const int v = best;
        mpz_class unit = M[t][t] / pow_z(ctx.ell(), v), uinv;
        if (mpz_invert(uinv.get_mpz_t(), unit.get_mpz_t(), mod.get_mpz_t()) == 0)
            throw Anomaly("pivot unit part is not invertible");
        // clear the pivot column by row operations
        for (unsigned i = 0; i < out.rows; ++i) {
            if (i == t || M[i][t] == 0) continue;
            mpz_class c = (M[i][t] / pow_z(ctx.ell(), v)) * uinv % mod;
            for (unsigned j = t; j < out.cols; ++j)
                M[i][j] = (M[i][j] - c * M[t][j]) % mod;
        }
        // clear the pivot row by column operations, tracked in V and Vinv
        for (unsigned j = 0; j < out.cols; ++j) {
            if (j == t || M[t][j] == 0) continue;
            mpz_class c = (M[t][j] / pow_z(ctx.ell(), v)) * uinv % mod;
            for (unsigned i = 0; i < out.rows; ++i)
                M[i][j] = (M[i][j] - c * M[i][t]) % mod;
            for (unsigned i = 0; i < out.cols; ++i)
                out.V[i][j] = (out.V[i][j] - c * out.V[i][t]) % mod;
            for (unsigned i = 0; i < out.cols; ++i)
                out.Vinv[t][i] = (out.Vinv[t][i] + c * out.Vinv[j][i]) % mod;
        }
        out.pivot_vals.push_back(v);
        out.effective_prec -= v;
        if (out.effective_prec < floor_prec)
            throw PrecisionExhausted("pivot valuations consumed the guard band");
        ++t;
    }
    for (auto& row : M)
        for (auto& x : row)
            if ((x %= mod) < 0) x += mod;
    for (auto& row : out.V)
        for (auto& x : row)
            if ((x %= mod) < 0) x += mod;
    for (auto& row : out.Vinv)
        for (auto& x : row)
            if ((x %= mod) < 0) x += mod;
    return out;
}

// ---- class-group support selection (real quadratic) --------------------

std::set<std::vector<long>> coord_closure(
    const std::vector<std::vector<long>>& gens,
    const std::vector<unsigned long>& factors) {
    std::set<std::vector<long>> seen;
    std::vector<long> zero(factors.size(), 0);
    seen.insert(zero);
    std::vector<std::vector<long>> frontier{zero};
    while (!frontier.empty()) {
        std::vector<std::vector<long>> next;
        for (const auto& x : frontier)
            for (const auto& g : gens) {
                std::vector<long> y(x.size());
                for (size_t i = 0; i < x.size(); ++i)
                    y[i] = static_cast<long>(
                        (x[i] + g[i]) % static_cast<long>(factors[i]));
                if (seen.insert(y).second) next.push_back(y);
            }
        frontier = std::move(next);
    }
    return seen;
}

// smallest primes whose place classes, together with the classes of the
// places above ell, generate the class group; deterministic by size
std::vector<unsigned long> quadratic_support(long D, unsigned long ell) {
    ClassGroupData G = class_group_bqf(D);
    unsigned long h = 1;
    for (unsigned long f : G.wide_factors) h *= f;
    std::vector<unsigned long> S{ell};
    if (h == 1) return S;
    std::vector<std::vector<long>> gens;
    if (kronecker(mpz_class(D), mpz_class(ell)) != -1)
        gens.push_back(wide_class_coords(G, prime_ideal(D, ell)));
    auto covered = [&]() { return coord_closure(gens, G.wide_factors).size() == h; };
    if (covered()) return S;
    for (uint64_t q : primes_up_to(1000)) {
        if (q == ell) continue;
        if (kronecker(mpz_class(D), mpz_class(q)) == -1) continue;
        std::vector<long> c = wide_class_coords(G, prime_ideal(D, q));
        if (coord_closure(gens, G.wide_factors).count(c)) continue;
        gens.push_back(c);
        S.push_back(q);
        if (covered()) return S;
    }
    throw Anomaly("class group not generated by the places of small primes");
}

} // namespace

// ---- LogDivisor ---------------------------------------------------------

bool LogDivisor::zero_at_precision() const {
    for (const auto& [p, c] : support)
        if (!c.zero_at_precision()) return false;
    return true;
}

const PadicInt* LogDivisor::coefficient(unsigned long q, int index) const {
    for (const auto& [p, c] : support)
        if (p.q == q && p.index == index) return &c;
    return nullptr;
}

// ---- LogarithmicContext -------------------------------------------------

LogarithmicContext::LogarithmicContext(BaseField K, unsigned long ell,
                                       int precision)
    : K_(std::move(K)), ell_(ell) {
    require_odd_prime(ell);
    ctx_ = std::make_shared<PadicContext>(ell, precision);
    switch (K_.kind) {
        case BaseKind::Rationals:
            degree_ = 1;
            break;
        case BaseKind::RealQuadratic:
            degree_ = 2;
            break;
        case BaseKind::RealCyclotomic: {
            if (K_.conductor % ell != 0)
                throw UnsupportedField(
                    "real cyclotomic base supported only at the prime of its conductor");
            abelian_ = AbelianField::real_cyclotomic(K_.conductor);
            degree_ = static_cast<unsigned>(abelian_->degree());
            break;
        }
    }
    build_ell_places();
}

PadicInt LogarithmicContext::log_rational(const mpq_class& x) const {
    if (x == 0) throw InvalidConfig("logarithm of zero");
    auto [vn, un] = strip_ell(mpz_class(x.get_num()), ell_);
    auto [vd, ud] = strip_ell(mpz_class(x.get_den()), ell_);
    (void)vn;
    (void)vd;
    PadicInt ln = iwasawa_log(PadicInt(*ctx_, un));
    if (ud == 1) return ln;
    return ln - iwasawa_log(PadicInt(*ctx_, ud));
}

mpq_class LogarithmicContext::field_norm(const FieldElt& x) const {
    if (const auto* q = std::get_if<mpq_class>(&x.v)) {
        mpq_class r(*q);
        for (unsigned i = 1; i < degree_; ++i) r *= *q;
        return r;
    }
    if (const auto* u = std::get_if<QuadElt>(&x.v)) {
        if (K_.kind != BaseKind::RealQuadratic || u->D != K_.D)
            throw InvalidConfig("quadratic element outside the context field");
        return u->norm();
    }
    const auto& c = std::get<CycloElt>(x.v);
    if (K_.kind != BaseKind::RealCyclotomic ||
        c.ring().conductor() != K_.conductor)
        throw InvalidConfig("cyclotomic element outside the context field");
    if (!abelian_->contains(c))
        throw InvalidConfig("element is not fixed by the field's group");
    CycloElt prod = c;
    const auto& reps = abelian_->galois_reps();
    for (size_t i = 1; i < reps.size(); ++i) prod = prod * c.galois(reps[i]);
    if (!prod.is_rational())
        throw Anomaly("Galois norm of a field element is not rational");
    return prod.rational_value();
}

void LogarithmicContext::build_ell_places() {
    auto probe_lambda = [&](const std::vector<PadicInt>& log_norms) {
        int vmin = ctx_->precision();
        for (const PadicInt& L : log_norms) vmin = std::min(vmin, L.val());
        if (vmin < 1)
            throw Anomaly("a local norm logarithm is an ell-adic unit");
        if (vmin >= ctx_->certified())
            throw PrecisionExhausted(
                "normalizer not determined by the probe set at this precision");
        return PadicInt(*ctx_, ctx_->ell_pow(vmin));
    };

    switch (K_.kind) {
        case BaseKind::Rationals: {
            LogPlace p;
            p.q = ell_;
            p.above_ell = true;
            p.lambda = probe_lambda({log_rational(mpq_class(1 + ell_))});
            p.degree = p.lambda;
            ell_places_.push_back(p);
            return;
        }
        case BaseKind::RealQuadratic: {
            int chi = kronecker(mpz_class(K_.D), mpz_class(ell_));
            if (chi == 1) {
                split_root_ = hensel_sqrt(
                    K_.D, ell_, static_cast<unsigned long>(ctx_->precision()));
                for (int idx = 0; idx < 2; ++idx) {
                    LogPlace p;
                    p.q = ell_;
                    p.index = idx;
                    p.above_ell = true;
                    std::vector<PadicInt> probes;
                    for (const QuadElt& y :
                         {QuadElt{K_.D, mpq_class(1 + ell_), 0},
                          QuadElt{K_.D, 1, mpq_class(ell_)}}) {
                        probes.push_back(
                            log_local_norm(FieldElt::quad(y), p));
                    }
                    p.lambda = probe_lambda(probes);
                    p.degree = p.lambda;
                    ell_places_.push_back(p);
                }
            } else {
                LogPlace p;
                p.q = ell_;
                p.above_ell = true;
                p.res_degree = (chi == -1) ? 2 : 1;
                p.ram_index = (chi == 0) ? 2 : 1;
                std::vector<PadicInt> probes;
                for (const QuadElt& y : {QuadElt{K_.D, mpq_class(1 + ell_), 0},
                                         QuadElt{K_.D, 1, mpq_class(ell_)}})
                    probes.push_back(log_rational(y.norm()));
                p.lambda = probe_lambda(probes);
                p.degree = p.lambda;
                ell_places_.push_back(p);
            }
            return;
        }
        case BaseKind::RealCyclotomic: {
            LogPlace p;
            p.q = ell_;
            p.above_ell = true;
            p.res_degree = 1;
            p.ram_index = degree_;
            auto R = abelian_->ambient();
            CycloElt theta = CycloElt::zeta_pow(R, 1) + CycloElt::zeta_pow(R, -1);
            std::vector<PadicInt> probes{log_rational(
                field_norm(FieldElt::rational(mpq_class(1 + ell_))))};
            CycloElt tj = CycloElt::one(R);
            for (unsigned j = 1; j < degree_; ++j) {
                tj = tj * theta;
                CycloElt probe =
                    CycloElt::from_rational(R, 1) + tj * mpq_class(ell_);
                probes.push_back(log_rational(field_norm(FieldElt::cyclo(probe))));
            }
            p.lambda = probe_lambda(probes);
            p.degree = p.lambda;
            ell_places_.push_back(p);
            return;
        }
    }
    throw Anomaly("unhandled base kind");
}

PadicInt LogarithmicContext::log_local_norm(const FieldElt& x,
                                            const LogPlace& p) const {
    if (!p.above_ell) throw InvalidConfig("local norm logarithm needs p | ell");
    switch (K_.kind) {
        case BaseKind::Rationals:
            return log_rational(std::get<mpq_class>(x.v));
        case BaseKind::RealQuadratic: {
            QuadElt u = [&] {
                if (const auto* q = std::get_if<mpq_class>(&x.v))
                    return QuadElt{K_.D, *q, 0};
                return std::get<QuadElt>(x.v);
            }();
            if (u.D != K_.D) throw InvalidConfig("wrong discriminant");
            int chi = kronecker(mpz_class(K_.D), mpz_class(ell_));
            if (chi != 1) return log_rational(u.norm());
            // completion of degree one: embed by the chosen square root
            mpz_class C;
            mpz_lcm(C.get_mpz_t(), u.a.get_den().get_mpz_t(),
                    u.b.get_den().get_mpz_t());
            mpz_class A = u.a.get_num() * (C / u.a.get_den());
            mpz_class B = u.b.get_num() * (C / u.b.get_den());
            mpz_class r = split_root_;
            if (p.index == 1) r = ctx_->modulus() - r;
            mpz_class img = (A + B * r) % ctx_->modulus();
            if (img < 0) img += ctx_->modulus();
            if (img == 0)
                throw PrecisionExhausted(
                    "element indistinguishable from zero in the completion");
            PadicInt num(*ctx_, img);
            PadicInt L = iwasawa_log(num.shift_down(num.val()));
            if (C == 1) return L;
            return L - log_rational(mpq_class(C));
        }
        case BaseKind::RealCyclotomic:
            return log_rational(field_norm(x));
    }
    throw Anomaly("unhandled base kind");
}

std::vector<LogPlace> LogarithmicContext::places_above(unsigned long q) const {
    if (q == 0 || !is_prime_u64(q)) throw InvalidConfig("prime required");
    if (q == ell_) return ell_places_;
    std::vector<LogPlace> out;
    PadicInt logq = log_rational(mpq_class(q));
    auto tame = [&](int index, unsigned f, unsigned e) {
        LogPlace p;
        p.q = q;
        p.index = index;
        p.res_degree = f;
        p.ram_index = e;
        p.degree = (f == 1) ? logq : PadicInt(*ctx_, f) * logq;
        return p;
    };
    switch (K_.kind) {
        case BaseKind::Rationals:
            out.push_back(tame(0, 1, 1));
            return out;
        case BaseKind::RealQuadratic: {
            int chi = kronecker(mpz_class(K_.D), mpz_class(q));
            if (chi == 1) {
                out.push_back(tame(0, 1, 1));
                out.push_back(tame(1, 1, 1));
            } else if (chi == -1) {
                out.push_back(tame(0, 2, 1));
            } else {
                out.push_back(tame(0, 1, 2));
            }
            return out;
        }
        case BaseKind::RealCyclotomic: {
            if (K_.conductor != 9)
                throw UnsupportedField(
                    "tame places implemented for the conductor-nine field only");
            // x^3 - 3x + 1 has square discriminant 81: for q != 3 the
            // factorization is three simple roots or inert
            std::vector<unsigned long> roots;
            for (unsigned long r = 0; r < q; ++r)
                if ((mpz_class(r) * r * r - 3 * mpz_class(r) + 1) % q == 0)
                    roots.push_back(r);
            if (roots.empty()) {
                out.push_back(tame(0, 3, 1));
                return out;
            }
            if (roots.size() != 3)
                throw Anomaly("cyclic cubic with an irregular factorization");
            for (int i = 0; i < 3; ++i) out.push_back(tame(i, 1, 1));
            return out;
        }
    }
    throw Anomaly("unhandled base kind");
}

PadicInt LogarithmicContext::log_valuation(const FieldElt& x,
                                           const LogPlace& p) const {
    if (fe_is_zero(x)) throw InvalidConfig("valuation of zero");
    if (p.above_ell) {
        PadicInt L = log_local_norm(x, p);
        int k = p.lambda.val();
        if (!L.zero_at_precision() && L.val() < k)
            throw Anomaly("local norm logarithm escapes the normalizer ideal");
        return -L.shift_down(k);
    }
    switch (K_.kind) {
        case BaseKind::Rationals:
            return PadicInt(*ctx_,
                            mpz_class(val_p(std::get<mpq_class>(x.v),
                                            mpz_class(p.q))));
        case BaseKind::RealQuadratic: {
            QuadElt u = [&] {
                if (const auto* q = std::get_if<mpq_class>(&x.v))
                    return QuadElt{K_.D, *q, 0};
                return std::get<QuadElt>(x.v);
            }();
            return PadicInt(*ctx_,
                            mpz_class(quad_valuation(u, p.q, p.index)));
        }
        case BaseKind::RealCyclotomic: {
            const auto& c = std::get<CycloElt>(x.v);
            mpq_class N = field_norm(x); // also validates membership
            if (p.res_degree == 3) {
                long v = val_p(N, mpz_class(p.q));
                if (v % 3 != 0)
                    throw Anomaly("inert valuation not divisible by the degree");
                return PadicInt(*ctx_, mpz_class(v / 3));
            }
            auto R = abelian_->ambient();
            CycloElt theta = CycloElt::zeta_pow(R, 1) + CycloElt::zeta_pow(R, -1);
            std::vector<mpq_class> co = express_in_power_basis(c, theta, 3);
            mpz_class den(1);
            for (const mpq_class& t : co)
                mpz_lcm(den.get_mpz_t(), den.get_mpz_t(),
                        t.get_den().get_mpz_t());
            std::vector<mpz_class> A(3);
            for (int i = 0; i < 3; ++i)
                A[i] = co[i].get_num() * (den / co[i].get_den());
            mpz_class qz(p.q);
            long vden = val_p(den, qz);
            long vnum_bound =
                val_p(mpq_class(N * den * den * den), qz);
            unsigned long m = static_cast<unsigned long>(vnum_bound) + 4;
            std::vector<unsigned long> roots;
            for (unsigned long r = 0; r < p.q; ++r)
                if ((mpz_class(r) * r * r - 3 * mpz_class(r) + 1) % p.q == 0)
                    roots.push_back(r);
            if (static_cast<size_t>(p.index) >= roots.size())
                throw InvalidConfig("invalid place index");
            mpz_class qm;
            mpz_pow_ui(qm.get_mpz_t(), qz.get_mpz_t(), m);
            mpz_class r = lift_cubic_root(p.q, m, roots[p.index]);
            mpz_class img = (A[0] + A[1] * r + A[2] * r * r) % qm;
            if (img < 0) img += qm;
            if (img == 0) throw Anomaly("valuation exceeded its norm bound");
            return PadicInt(*ctx_, mpz_class(val_p(img, qz) - vden));
        }
    }
    throw Anomaly("unhandled base kind");
}

LogDivisor LogarithmicContext::principal_log_divisor(const FieldElt& x) const {
    if (fe_is_zero(x)) throw InvalidConfig("divisor of zero");
    LogDivisor out;
    out.degree = PadicInt(*ctx_, 0);
    if (fe_is_pm_one(x)) return out;

    // support bound: factor the norm of an integral multiple and the
    // denominator separately (cancellation in the norm can hide places)
    mpz_class den(1), normint;
    switch (K_.kind) {
        case BaseKind::Rationals: {
            const mpq_class& r = std::get<mpq_class>(x.v);
            den = r.get_den();
            normint = r.get_num();
            break;
        }
        case BaseKind::RealQuadratic: {
            QuadElt u = [&] {
                if (const auto* q = std::get_if<mpq_class>(&x.v))
                    return QuadElt{K_.D, *q, 0};
                return std::get<QuadElt>(x.v);
            }();
            mpz_lcm(den.get_mpz_t(), u.a.get_den().get_mpz_t(),
                    u.b.get_den().get_mpz_t());
            QuadElt w{u.D, u.a * den, u.b * den};
            normint = mpz_class(w.norm().get_num());
            break;
        }
        case BaseKind::RealCyclotomic: {
            const auto& c = std::get<CycloElt>(x.v);
            for (const mpq_class& t : c.coeffs())
                mpz_lcm(den.get_mpz_t(), den.get_mpz_t(),
                        t.get_den().get_mpz_t());
            mpq_class N = field_norm(FieldElt::cyclo(c * mpq_class(den)));
            if (N.get_den() != 1)
                throw Anomaly("integral element with fractional norm");
            normint = N.get_num();
            break;
        }
    }
    std::map<uint64_t, int> primes = factor_z(abs(normint));
    for (const auto& [q, e] : factor_z(den)) primes[q] += e;
    primes[ell_] += 0;

    for (const auto& [q, e] : primes) {
        (void)e;
        for (const LogPlace& p : places_above(q)) {
            PadicInt c = log_valuation(x, p);
            if (!p.above_ell && c.zero_at_precision()) continue;
            out.support.emplace_back(p, c);
            out.degree = out.degree + c * p.degree;
        }
    }
    std::sort(out.support.begin(), out.support.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (out.degree.prec() < ctx_->certified())
        throw PrecisionExhausted("divisor degree below certified precision");
    if (!out.degree.zero_at_precision())
        throw Anomaly("principal logarithmic divisor with nonzero degree");
    return out;
}

// ---- logarithmic class group ---------------------------------------------

mpz_class LogClassGroup::order() const {
    if (!finite)
        throw PrecisionExhausted(
            "order of a logarithmic class group not certified finite");
    mpz_class o(1);
    for (unsigned long f : factor_orders) o *= f;
    return o;
}

LogClassGroup log_class_group(const BaseField& K, unsigned long ell,
                              int precision,
                              const std::vector<unsigned long>& S) {
    LogarithmicContext ctx(K, ell, precision);
    LogClassGroup out;
    out.precision = precision;
    out.ctx = ctx.padic_handle();

    std::vector<unsigned long> supp = S;
    if (supp.empty()) {
        switch (K.kind) {
            case BaseKind::Rationals:
            case BaseKind::RealCyclotomic:
                supp = {ell};
                break;
            case BaseKind::RealQuadratic:
                supp = quadratic_support(K.D, ell);
                break;
        }
    } else {
        std::sort(supp.begin(), supp.end());
        supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
        if (!std::binary_search(supp.begin(), supp.end(), ell))
            throw InvalidConfig("the support must contain ell");
        if (K.kind == BaseKind::RealQuadratic) {
            ClassGroupData G = class_group_bqf(K.D);
            unsigned long h = 1;
            for (unsigned long f : G.wide_factors) h *= f;
            std::vector<std::vector<long>> gens;
            for (unsigned long q : supp)
                if (kronecker(mpz_class(K.D), mpz_class(q)) != -1)
                    gens.push_back(wide_class_coords(G, prime_ideal(K.D, q)));
            if (coord_closure(gens, G.wide_factors).size() != h)
                throw InvalidConfig(
                    "support classes do not generate the class group");
        }
    }
    std::sort(supp.begin(), supp.end());
    out.support = supp;

    std::vector<LogPlace> places;
    for (unsigned long q : supp)
        for (const LogPlace& p : ctx.places_above(q)) places.push_back(p);
    std::sort(places.begin(), places.end());

    if (places.size() <= 1) {
        out.margin = ctx.padic().certified();
        return out; // no degree-zero divisors beyond the principal ones
    }

    UnitLattice L = s_units(K, ell, supp);

    // drop the column of the minimal-valuation degree: the remaining
    // coordinates are a basis of the degree-zero divisors on the support
    size_t pivot = 0;
    for (size_t i = 1; i < places.size(); ++i)
        if (places[i].degree.val() < places[pivot].degree.val()) pivot = i;

    std::vector<std::vector<PadicInt>> rows;
    for (const FieldElt& g : L.gens) {
        if (fe_is_pm_one(g)) continue;
        std::vector<PadicInt> row;
        PadicInt deg(ctx.padic(), 0);
        for (size_t i = 0; i < places.size(); ++i) {
            PadicInt c = ctx.log_valuation(g, places[i]);
            deg = deg + c * places[i].degree;
            if (i != pivot) row.push_back(c);
        }
        if (!deg.zero_at_precision())
            throw Anomaly("relation violates the product formula");
        rows.push_back(std::move(row));
    }

    PadicSnf snf = padic_snf(rows, ctx.padic());
    const unsigned m = static_cast<unsigned>(places.size()) - 1;
    const unsigned r = static_cast<unsigned>(snf.pivot_vals.size());
    out.margin = snf.effective_prec;
    for (int v : snf.pivot_vals) {
        if (v == 0) continue;
        if (v >= ctx.padic().certified())
            throw PrecisionExhausted(
                "elementary divisor exceeds the certified range");
        out.factor_orders.push_back(
            pow_z(ell, static_cast<unsigned long>(v)).get_ui());
        out.margin = std::min(out.margin, snf.effective_prec - v);
    }
    out.pseudo_free_rank = m - r;
    if (out.pseudo_free_rank > 0) {
        out.finite = false;
        out.anomaly = "Gross-Kuzmin finiteness not visible at this precision";
    }

    // reconstruct generator divisors for the nontrivial factors
    auto coords_to_divisor = [&](const std::vector<mpz_class>& c) {
        LogDivisor d;
        PadicInt num(ctx.padic(), 0);
        size_t k = 0;
        std::vector<PadicInt> coeffs(places.size(), PadicInt(ctx.padic(), 0));
        for (size_t i = 0; i < places.size(); ++i) {
            if (i == pivot) continue;
            coeffs[i] = PadicInt(ctx.padic(), c[k++], snf.work_prec);
            num = num + coeffs[i] * places[i].degree;
        }
        coeffs[pivot] = -num.div_exact(places[pivot].degree);
        d.degree = PadicInt(ctx.padic(), 0);
        for (size_t i = 0; i < places.size(); ++i) {
            if (!places[i].above_ell && coeffs[i].zero_at_precision()) continue;
            d.support.emplace_back(places[i], coeffs[i]);
            d.degree = d.degree + coeffs[i] * places[i].degree;
        }
        return d;
    };
    for (unsigned i = 0; i < r; ++i) {
        if (snf.pivot_vals[i] == 0) continue;
        out.generator_divisors.push_back(coords_to_divisor(snf.Vinv[i]));
    }
    for (unsigned i = r; i < m; ++i)
        out.generator_divisors.push_back(coords_to_divisor(snf.Vinv[i]));
    return out;
}

// ---- logarithmic units ----------------------------------------------------

UnitLattice log_units(const BaseField& K, unsigned long ell, int precision,
                      std::vector<unsigned long> S) {
    if (S.empty()) S = {ell};
    LogarithmicContext ctx(K, ell, precision);
    UnitLattice L = s_units(K, ell, S);

    // exact route: with a unique place above ell the kernel condition is
    // -Log(N(x))/lambda = 0, and a norm +-ell^k makes it exactly zero
    if (ctx.ell_places().size() == 1 && L.support.size() == 1) {
        bool all_exact = true;
        for (const FieldElt& g : L.gens)
            if (!is_pm_ell_power(ctx.field_norm(g), ell)) {
                all_exact = false;
                break;
            }
        if (all_exact) {
            L.kind = LatticeKind::LogUnits;
            return L;
        }
    }

    std::vector<FieldElt> amb;
    for (const FieldElt& g : L.gens) {
        if (fe_is_pm_one(g)) continue;
        amb.push_back(g);
    }
    std::vector<LogPlace> tame_places;
    for (unsigned long q : L.support)
        if (q != ell)
            for (const LogPlace& p : ctx.places_above(q))
                tame_places.push_back(p);

    // conditions: exact integer rows for the tame places, ell-adic rows for
    // the places above ell
    std::vector<std::vector<mpz_class>> tame_rows;
    for (const LogPlace& p : tame_places) {
        std::vector<mpz_class> row;
        for (const FieldElt& g : amb)
            row.push_back(centered_lift(ctx.log_valuation(g, p).residue(),
                                        ctx.padic().modulus()));
        tame_rows.push_back(std::move(row));
    }
    std::vector<std::vector<PadicInt>> ell_rows;
    for (const LogPlace& p : ctx.ell_places()) {
        std::vector<PadicInt> row;
        for (const FieldElt& g : amb) row.push_back(ctx.log_valuation(g, p));
        ell_rows.push_back(std::move(row));
    }
    bool ell_rows_exact_zero = true;
    for (const auto& row : ell_rows)
        for (const PadicInt& x : row)
            if (!x.zero_at_precision()) ell_rows_exact_zero = false;
    // certify an exactly-zero ell-block through the norms
    if (ell_rows_exact_zero)
        for (const FieldElt& g : amb)
            if (!is_pm_ell_power(ctx.field_norm(g), ell))
                ell_rows_exact_zero = false;

    std::vector<std::vector<PadicInt>> conditions;
    for (const auto& row : tame_rows) {
        std::vector<PadicInt> r;
        for (const mpz_class& x : row) r.emplace_back(ctx.padic(), x);
        conditions.push_back(std::move(r));
    }
    if (!ell_rows_exact_zero)
        for (auto& row : ell_rows) conditions.push_back(row);

    UnitLattice out;
    out.kind = LatticeKind::LogUnits;
    out.field = K;
    out.support = L.support;
    out.torsion_order = 2;

    std::vector<std::vector<mpz_class>> kernel;
    if (conditions.empty()) {
        for (size_t i = 0; i < amb.size(); ++i) {
            std::vector<mpz_class> e(amb.size(), 0);
            e[i] = 1;
            kernel.push_back(std::move(e));
        }
    } else {
        PadicSnf snf = padic_snf(conditions, ctx.padic());
        for (unsigned j = static_cast<unsigned>(snf.pivot_vals.size());
             j < amb.size(); ++j) {
            std::vector<mpz_class> w(amb.size());
            for (size_t i = 0; i < amb.size(); ++i)
                w[i] = centered_lift(snf.V[i][j], ctx.padic().ell_pow(snf.work_prec));
            kernel.push_back(std::move(w));
        }
    }

    // re-verify every kernel vector against the full-precision data
    for (const auto& w : kernel) {
        for (const auto& row : tame_rows) {
            mpz_class dot(0);
            for (size_t i = 0; i < w.size(); ++i) dot += w[i] * row[i];
            if (dot != 0)
                throw PrecisionExhausted(
                    "kernel vector fails the exact tame verification");
        }
        for (const auto& row : ell_rows) {
            PadicInt dot(ctx.padic(), 0);
            for (size_t i = 0; i < w.size(); ++i)
                dot = dot + row[i] * PadicInt(ctx.padic(), w[i]);
            if (dot.prec() >= ctx.padic().certified() &&
                !dot.zero_at_precision())
                throw Anomaly("kernel vector fails the valuation re-check");
        }
    }

    if (kernel.size() != ctx.degree())
        out.anomaly = "logarithmic unit rank differs from the field degree";

    bool exact = ell_rows_exact_zero;
    // materialize when the products stay small: the height of a power grows
    // with the exponent's magnitude, not its bit size
    mpz_class weight(0);
    for (const auto& w : kernel)
        for (size_t i = 0; i < w.size(); ++i)
            weight += abs(w[i]) * static_cast<unsigned long>(
                                      fe_height_bits(amb[i]));
    bool small = weight <= 4096;
    if (small) {
        auto field_const = [&](long c) {
            switch (K.kind) {
                case BaseKind::Rationals:
                    return FieldElt::rational(mpq_class(c));
                case BaseKind::RealQuadratic:
                    return FieldElt::quad(QuadElt(K.D, mpq_class(c), 0));
                case BaseKind::RealCyclotomic:
                    return FieldElt::cyclo(CycloElt::from_rational(
                        CycloRing::get(K.conductor), mpq_class(c)));
            }
            throw Anomaly("unhandled base kind");
        };
        out.gens.push_back(field_const(-1));
        for (const auto& w : kernel) {
            FieldElt g = field_const(1);
            for (size_t i = 0; i < w.size(); ++i) {
                if (w[i] == 0) continue;
                g = fe_mul(g, fe_pow(amb[i], w[i]));
            }
            out.gens.push_back(std::move(g));
        }
        out.exact = exact;
    } else {
        out.ambient_gens = amb;
        out.exponents = kernel;
        out.exact = false;
    }
    return out;
}

// ---- semi-localization -----------------------------------------------------

namespace {

// unit part u and valuation v of the image of (A + B r)/C in Q_ell
struct QpImage {
    long v = 0;
    PadicInt unit;
};

// u^e for a unit u, reduced through the order of the full unit group of
// Z/ell^N (the exponent may exceed any machine word)
PadicInt unit_power(const PadicInt& u, const mpz_class& e_in,
                    const mpz_class& group_order) {
    mpz_class e = e_in % group_order;
    if (e < 0) e += group_order;
    PadicInt acc(u.ctx(), 1);
    PadicInt base = u;
    const size_t n = mpz_sizeinbase(e.get_mpz_t(), 2);
    for (size_t i = 0; i < n; ++i) {
        if (mpz_tstbit(e.get_mpz_t(), i)) acc = acc * base;
        base = base * base;
    }
    return acc;
}

QpImage qp_embed(const LogarithmicContext& ctx, const FieldElt& x,
                 const LogPlace& p, const mpz_class& split_root) {
    const PadicContext& pc = ctx.padic();
    mpz_class A, B(0), C(1);
    if (const auto* q = std::get_if<mpq_class>(&x.v)) {
        A = q->get_num();
        C = q->get_den();
    } else {
        const QuadElt& u = std::get<QuadElt>(x.v);
        mpz_lcm(C.get_mpz_t(), u.a.get_den().get_mpz_t(),
                u.b.get_den().get_mpz_t());
        A = u.a.get_num() * (C / u.a.get_den());
        B = u.b.get_num() * (C / u.b.get_den());
    }
    mpz_class r = split_root;
    if (p.index == 1) r = pc.modulus() - r;
    mpz_class img = (A + B * r) % pc.modulus();
    if (img < 0) img += pc.modulus();
    if (img == 0)
        throw PrecisionExhausted("image indistinguishable from zero locally");
    QpImage out;
    PadicInt num(pc, img);
    auto [vc, uc] = strip_ell(C, pc.ell());
    out.v = num.val() - vc;
    out.unit = num.shift_down(num.val());
    if (uc != 1) out.unit = out.unit.div_exact(PadicInt(pc, uc));
    return out;
}

} // namespace

SemiLocalization semi_localize(const UnitLattice& L, unsigned long ell,
                               int precision) {
    LogarithmicContext ctx(L.field, ell, precision);
    const PadicContext& pc = ctx.padic();
    SemiLocalization out;
    out.precision = precision;
    out.ctx = ctx.padic_handle();

    const bool exponent_form = !L.exponents.empty();
    bool all_qp = true;
    for (const LogPlace& p : ctx.ell_places())
        if (p.res_degree * p.ram_index != 1) all_qp = false;
    if (exponent_form && !all_qp)
        throw UnsupportedField(
            "exponent presentations are localized only at split degree-one places");
    if (!all_qp && L.field.kind == BaseKind::RealCyclotomic &&
        L.field.conductor != 9)
        throw UnsupportedField("no local model for this completion");

    mpz_class split_root(0);
    if (all_qp && L.field.kind == BaseKind::RealQuadratic)
        split_root = hensel_sqrt(L.field.D, ell,
                                 static_cast<unsigned long>(pc.precision()));

    std::optional<LocalRing> ring;
    if (!all_qp) {
        if (L.field.kind == BaseKind::RealQuadratic)
            ring = LocalRing::quadratic(pc, L.field.D);
        else
            ring = LocalRing::real_cyclotomic9(pc);
    }

    const size_t ngens = exponent_form ? L.exponents.size() : L.gens.size();
    const mpz_class unit_group_order =
        mpz_class(ell - 1) * pc.ell_pow(pc.precision() - 1);

    // per-generator Iwasawa-logarithm coordinates for the rank report
    std::vector<std::vector<PadicInt>> log_rows;
    std::vector<bool> is_torsion(ngens, false);

    auto qp_component = [&](const FieldElt& g, const LogPlace& p) {
        LocalComponent c;
        c.place = p;
        QpImage im = qp_embed(ctx, g, p, split_root);
        c.ordinary_valuation = im.v;
        c.qp_value = im.unit;
        c.teichmuller_part = teichmuller(im.unit);
        PadicInt lg = iwasawa_log(im.unit);
        PadicInt l1p = iwasawa_log(PadicInt(pc, mpz_class(1 + ell)));
        c.principal_unit_exponent = lg.div_exact(l1p);
        // verification: omega * (1+ell)^alpha must reproduce the unit part
        PadicInt rebuilt =
            c.teichmuller_part * principal_power(pc, c.principal_unit_exponent);
        if (!(rebuilt == c.qp_value))
            throw Anomaly("local decomposition fails to reproduce the image");
        c.log_uniformizer_exponent = ctx.log_valuation(g, p);
        return c;
    };

    for (size_t gi = 0; gi < ngens; ++gi) {
        SemiLocalImage img;
        std::vector<PadicInt> lrow;
        if (!exponent_form) {
            const FieldElt& g = L.gens[gi];
            if (fe_is_pm_one(g)) is_torsion[gi] = true;
            for (const LogPlace& p : ctx.ell_places()) {
                if (p.res_degree * p.ram_index == 1) {
                    LocalComponent c = qp_component(g, p);
                    lrow.push_back(iwasawa_log(c.qp_value));
                    img.components.push_back(std::move(c));
                } else {
                    LocalComponent c;
                    c.place = p;
                    c.qp_form = false;
                    LocalElt y = [&] {
                        if (L.field.kind == BaseKind::RealQuadratic) {
                            if (const auto* q = std::get_if<mpq_class>(&g.v))
                                return LocalElt::from_rational(*ring, *q);
                            return LocalElt::from_quad(*ring,
                                                       std::get<QuadElt>(g.v));
                        }
                        const auto& ce = std::get<CycloElt>(g.v);
                        auto R = ce.ring_ptr();
                        CycloElt theta =
                            CycloElt::zeta_pow(R, 1) + CycloElt::zeta_pow(R, -1);
                        return LocalElt::from_coords(
                            *ring, express_in_power_basis(ce, theta, 3));
                    }();
                    c.ordinary_valuation = local_valuation(y);
                    c.log_uniformizer_exponent = ctx.log_valuation(g, p);
                    // strip the uniformizer through y^e / ell^{v}
                    LocalElt yu = y.pow_ui(p.ram_index);
                    std::vector<PadicInt> co;
                    for (const PadicInt& t : yu.coords())
                        co.push_back(t.shift_down(
                            static_cast<int>(c.ordinary_valuation)));
                    for (const PadicInt& t : local_log(LocalElt(*ring, co)))
                        lrow.push_back(t);
                    c.ext_value = std::move(y);
                    img.components.push_back(std::move(c));
                }
            }
        } else {
            const auto& w = L.exponents[gi];
            for (const LogPlace& p : ctx.ell_places()) {
                LocalComponent c;
                c.place = p;
                mpz_class vsum(0);
                PadicInt unit(pc, 1);
                PadicInt vt(pc, 0);
                for (size_t i = 0; i < w.size(); ++i) {
                    if (w[i] == 0) continue;
                    QpImage im = qp_embed(ctx, L.ambient_gens[i], p, split_root);
                    vsum += w[i] * im.v;
                    unit = unit * unit_power(im.unit, w[i], unit_group_order);
                    vt = vt + ctx.log_valuation(L.ambient_gens[i], p) *
                                  PadicInt(pc, w[i]);
                }
                if (!vsum.fits_slong_p())
                    throw BoundExceeded("valuation exponent out of range");
                c.ordinary_valuation = vsum.get_si();
                c.qp_value = unit;
                c.teichmuller_part = teichmuller(unit);
                PadicInt lg = iwasawa_log(unit);
                PadicInt l1p = iwasawa_log(PadicInt(pc, mpz_class(1 + ell)));
                c.principal_unit_exponent = lg.div_exact(l1p);
                c.log_uniformizer_exponent = vt;
                lrow.push_back(lg);
                img.components.push_back(std::move(c));
            }
        }
        log_rows.push_back(std::move(lrow));
        out.images.push_back(std::move(img));
    }

    // Leopoldt report.  Expected rank of the Iwasawa-logarithm image:
    //   - logarithmic-unit and norm sublattices of a field whose ell-places
    //     all have degree one sit inside the full Log-kernel, hence 0;
    //   - otherwise start from the free rank, subtract the ell-line when
    //     the presentation exhibits it (a rational +-ell^m generator), and
    //     cap by the dimension of the available target: [K:Q], shrunk by
    //     one when every generator has norm +-ell^k, because Log kills
    //     rational ell-powers and the image then lies in the trace-zero
    //     hyperplane.
    unsigned nontorsion = 0;
    for (size_t gi = 0; gi < ngens; ++gi)
        if (!is_torsion[gi]) ++nontorsion;
    bool all_pm = true;
    bool has_ell_gen = false;
    if (!exponent_form) {
        for (const FieldElt& g : L.gens) {
            if (auto r = fe_rational_value(g)) {
                if (*r == 1 || *r == -1) continue;
                if (is_pm_ell_power(*r, ell)) has_ell_gen = true;
            }
            if (!is_pm_ell_power(ctx.field_norm(g), ell)) all_pm = false;
        }
    }
    const bool log_kernel_kind = L.kind == LatticeKind::LogUnits ||
                                 L.kind == LatticeKind::NormSubgroup;
    if (all_qp && log_kernel_kind) {
        out.expected_log_rank = 0;
    } else {
        unsigned cap = ctx.degree() - (all_pm ? 1 : 0);
        unsigned base = nontorsion - ((has_ell_gen && nontorsion > 0) ? 1 : 0);
        out.expected_log_rank = std::min(base, cap);
    }

    std::vector<std::vector<PadicInt>> rank_rows;
    for (size_t gi = 0; gi < ngens; ++gi)
        if (!is_torsion[gi]) rank_rows.push_back(log_rows[gi]);
    unsigned observed = 0;
    if (!rank_rows.empty() && !rank_rows[0].empty()) {
        PadicSnf snf = padic_snf(rank_rows, pc);
        for (int v : snf.pivot_vals)
            if (v < pc.certified()) ++observed;
    }
    out.observed_log_rank = observed;
    if (observed > out.expected_log_rank)
        throw Anomaly("logarithm image rank exceeds its theoretical bound");
    out.leopoldt_defect = out.expected_log_rank - observed;
    return out;
}

// ---- helpers ---------------------------------------------------------------

unsigned long cl_prime_ell_part(long D, unsigned long ell) {
    require_odd_prime(ell);
    ClassGroupData G = class_group_bqf(D);
    unsigned long h = 1;
    for (unsigned long f : G.wide_factors) h *= f;
    std::vector<std::vector<long>> gens;
    if (kronecker(mpz_class(D), mpz_class(ell)) != -1)
        gens.push_back(wide_class_coords(G, prime_ideal(D, ell)));
    unsigned long sub = static_cast<unsigned long>(
        coord_closure(gens, G.wide_factors).size());
    if (h % sub != 0) throw Anomaly("subgroup order does not divide the group");
    unsigned long quot = h / sub;
    unsigned long part = 1;
    while (quot % ell == 0) {
        part *= ell;
        quot /= ell;
    }
    return part;
}

bool lattices_agree(const UnitLattice& A, const UnitLattice& B,
                    unsigned long ell, int precision) {
    if (!(A.field == B.field)) throw InvalidConfig("lattices over different fields");
    LogarithmicContext ctx(A.field, ell, precision);
    const PadicContext& pc = ctx.padic();

    std::vector<unsigned long> SU;
    for (unsigned long q : A.support) SU.push_back(q);
    for (unsigned long q : B.support) SU.push_back(q);
    std::sort(SU.begin(), SU.end());
    SU.erase(std::unique(SU.begin(), SU.end()), SU.end());
    std::vector<LogPlace> tame;
    for (unsigned long q : SU)
        if (q != ell)
            for (const LogPlace& p : ctx.places_above(q)) tame.push_back(p);

    mpz_class split_root(0);
    bool all_qp = true;
    for (const LogPlace& p : ctx.ell_places())
        if (p.res_degree * p.ram_index != 1) all_qp = false;
    if (all_qp && A.field.kind == BaseKind::RealQuadratic)
        split_root = hensel_sqrt(A.field.D, ell,
                                 static_cast<unsigned long>(pc.precision()));
    std::optional<LocalRing> ring;
    if (!all_qp) {
        if (A.field.kind == BaseKind::RealQuadratic)
            ring = LocalRing::quadratic(pc, A.field.D);
        else if (A.field.conductor == 9)
            ring = LocalRing::real_cyclotomic9(pc);
        else
            throw UnsupportedField("no local model for this completion");
    }

    // coordinates of a single field element: exact tame valuations followed
    // by Iwasawa-logarithm coordinates at the ell-places
    auto elt_coords = [&](const FieldElt& g) {
        std::vector<PadicInt> c;
        for (const LogPlace& p : tame) c.push_back(ctx.log_valuation(g, p));
        for (const LogPlace& p : ctx.ell_places()) {
            if (p.res_degree * p.ram_index == 1) {
                QpImage im = qp_embed(ctx, g, p, split_root);
                c.push_back(iwasawa_log(im.unit));
            } else {
                LocalElt y = [&] {
                    if (A.field.kind == BaseKind::RealQuadratic) {
                        if (const auto* q = std::get_if<mpq_class>(&g.v))
                            return LocalElt::from_rational(*ring, *q);
                        return LocalElt::from_quad(*ring, std::get<QuadElt>(g.v));
                    }
                    const auto& ce = std::get<CycloElt>(g.v);
                    auto R = ce.ring_ptr();
                    CycloElt theta =
                        CycloElt::zeta_pow(R, 1) + CycloElt::zeta_pow(R, -1);
                    return LocalElt::from_coords(
                        *ring, express_in_power_basis(ce, theta, 3));
                }();
                long v = local_valuation(y);
                LocalElt yu = y.pow_ui(p.ram_index);
                std::vector<PadicInt> co;
                for (const PadicInt& t : yu.coords())
                    co.push_back(t.shift_down(static_cast<int>(v)));
                for (const PadicInt& t : local_log(LocalElt(*ring, co)))
                    c.push_back(t);
            }
        }
        return c;
    };

    auto lattice_coords = [&](const UnitLattice& L) {
        std::vector<std::vector<PadicInt>> rows;
        if (!L.exponents.empty()) {
            std::vector<std::vector<PadicInt>> amb;
            for (const FieldElt& g : L.ambient_gens) amb.push_back(elt_coords(g));
            for (const auto& w : L.exponents) {
                std::vector<PadicInt> row(amb.empty() ? 0 : amb[0].size(),
                                          PadicInt(pc, 0));
                for (size_t i = 0; i < w.size(); ++i) {
                    if (w[i] == 0) continue;
                    PadicInt wi(pc, w[i]);
                    for (size_t j = 0; j < row.size(); ++j)
                        row[j] = row[j] + amb[i][j] * wi;
                }
                rows.push_back(std::move(row));
            }
            return rows;
        }
        for (const FieldElt& g : L.gens) {
            if (fe_is_pm_one(g)) continue;
            rows.push_back(elt_coords(g));
        }
        return rows;
    };

    std::vector<std::vector<PadicInt>> ra = lattice_coords(A);
    std::vector<std::vector<PadicInt>> rb = lattice_coords(B);
    if (ra.empty() || rb.empty()) return ra.empty() == rb.empty();

    // mutual inclusion of the Z_ell row spans; equality of the spans (and
    // hence of the ranks) follows
    auto contained = [&](const std::vector<std::vector<PadicInt>>& M,
                         const std::vector<std::vector<PadicInt>>& targets) {
        PadicSnf snf = padic_snf(M, pc);
        int wt = snf.work_prec;
        for (const auto& t : targets)
            for (const PadicInt& x : t) wt = std::min(wt, x.prec());
        if (wt < std::max(4, pc.certified() / 2))
            throw PrecisionExhausted("coordinates below the comparison floor");
        const mpz_class mod = pc.ell_pow(wt);
        for (const auto& t : targets) {
            // t in rowspace(M) iff (t V) is divisible by the diagonal
            std::vector<mpz_class> tv(M[0].size(), 0);
            for (size_t j = 0; j < tv.size(); ++j) {
                for (size_t i = 0; i < t.size(); ++i)
                    tv[j] += (t[i].residue() % mod) * snf.V[i][j];
                tv[j] %= mod;
                if (tv[j] < 0) tv[j] += mod;
            }
            const int level = std::min(wt, snf.effective_prec);
            for (size_t j = 0; j < tv.size(); ++j) {
                int need = j < snf.pivot_vals.size()
                               ? snf.pivot_vals[j]
                               : level;
                if (tv[j] == 0) continue;
                mpz_class u;
                mpz_class ez(ell);
                int v = static_cast<int>(mpz_remove(
                    u.get_mpz_t(), tv[j].get_mpz_t(), ez.get_mpz_t()));
                if (v < std::min(need, level)) return false;
            }
        }
        return true;
    };
    return contained(rb, ra) && contained(ra, rb);
}

} // namespace lognorm
