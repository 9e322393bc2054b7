#include "lognorm/quadratic.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "lognorm/util.hpp"

namespace lognorm {

namespace {

void require_same_field(const QuadElt& x, const QuadElt& y) {
    if (x.D != y.D) throw InvalidConfig("quadratic elements lie in different fields");
}

void require_fundamental(long D) {
    if (D < 5 || !is_fundamental_discriminant(D))
        throw InvalidConfig("discriminant must be fundamental and at least 5");
}

mpz_class isqrt_z(const mpz_class& n) {
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

mpz_class fdiv_z(const mpz_class& a, const mpz_class& b) {
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

mpz_class mod_z(const mpz_class& a, const mpz_class& b) {
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return r;
}

// floor((P + sqrt(D))/Q) for irrational sqrt(D), either sign of Q != 0.
mpz_class floor_quad(const mpz_class& P, const mpz_class& Q, const mpz_class& s) {
    if (Q > 0) return fdiv_z(P + s, Q);
    return -fdiv_z(P + s, -Q) - 1;
}

void validate_ideal(const QuadIdeal& I) {
    require_fundamental(I.D);
    if (I.a <= 0 || (I.b * I.b - I.D) % (4 * I.a) != 0)
        throw InvalidConfig("invalid ideal coordinates");
}

// ---- two-column Hermite normal form over Z -------------------------------
//
// Rows (u, v) span a submodule of Z^2; the canonical shape is
//   (g, 0), (t, c)   with c > 0 the gcd of the v column, g > 0, 0 <= t < g.
struct HnfTriple {
    mpz_class c, g, t;
};

HnfTriple hnf_2col(const std::vector<std::pair<mpz_class, mpz_class>>& rows) {
    mpz_class cu = 0, cv = 0;
    for (const auto& [u, v] : rows) {
        if (v == 0) continue;
        if (cv == 0) {
            cu = u;
            cv = v;
            if (cv < 0) {
                cu = -cu;
                cv = -cv;
            }
            continue;
        }
        mpz_class g, x, y;
        mpz_gcdext(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t(), cv.get_mpz_t(),
                   v.get_mpz_t());
        cu = x * cu + y * u;
        cv = g;
    }
    mpz_class gu = 0;
    for (const auto& [u, v] : rows) {
        mpz_class uu = u;
        if (cv != 0) uu -= (v / cv) * cu;
        mpz_class g;
        mpz_gcd(g.get_mpz_t(), gu.get_mpz_t(), uu.get_mpz_t());
        gu = g;
    }
    if (cv == 0 || gu == 0) throw Anomaly("module has rank below two");
    return {cv, gu, mod_z(cu, gu)};
}

// Interpret an HNF triple over the basis (1/2, sqrt(D)/2) as
// content * [a, (-b + sqrt(D))/2]; b is normalized into (-a, a].
std::pair<QuadIdeal, mpz_class> ideal_from_hnf(long D, const HnfTriple& h) {
    const mpz_class& m = h.c;
    if (h.g % (2 * m) != 0 || h.t % m != 0)
        throw Anomaly("module is not an ideal of the maximal order");
    mpz_class a = h.g / (2 * m);
    mpz_class b = mod_z(-(h.t / m), 2 * a);
    if (b > a) b -= 2 * a;
    QuadIdeal I{D, a, b};
    validate_ideal(I);
    return {I, m};
}

// x2-coordinate rows of x*O over the basis (1/2, sqrt(D)/2), denominators
// cleared by a positive integer (content scales; the primitive part does not).
std::pair<std::vector<std::pair<mpz_class, mpz_class>>, mpz_class>
principal_rows(long D, const QuadElt& x) {
    if (x.is_zero()) throw InvalidConfig("zero element generates no ideal");
    long r0 = ((D % 2) != 0) ? 1 : 0;
    mpq_class c00 = 2 * x.a, c01 = 2 * x.b;
    mpq_class c10 = x.a * r0 + x.b * D, c11 = x.a + x.b * r0;
    mpz_class n = 1;
    for (const mpq_class* q : {&c00, &c01, &c10, &c11}) {
        mpz_class l;
        mpz_lcm(l.get_mpz_t(), n.get_mpz_t(), q->get_den().get_mpz_t());
        n = l;
    }
    auto scaled = [&](const mpq_class& q) {
        mpq_class t = q * n;
        return t.get_num();
    };
    std::vector<std::pair<mpz_class, mpz_class>> rows{
        {scaled(c00), scaled(c01)}, {scaled(c10), scaled(c11)}};
    return {rows, n};
}

// ---- reduction walk on ideal modules --------------------------------------
//
// One step sends [a, (-b+sqrt(D))/2] to delta * it with
// delta = (b + sqrt(D))/(2a); the new module is [|c|, (-b'+sqrt(D))/2] with
// c = (b^2 - D)/(4a) and b' = -b modulo 2|c|, placed in the reduction window.
struct ModState {
    mpz_class a, b;
};

mpz_class window_b(const mpz_class& b_source_neg, const mpz_class& a,
                   const mpz_class& s) {
    mpz_class m = 2 * a;
    if (a <= s) return b_source_neg + m * fdiv_z(s - b_source_neg, m);
    mpz_class r = mod_z(b_source_neg, m);
    if (r > a) r -= m;
    return r;
}

ModState normalize_state(const mpz_class& a, const mpz_class& b, const mpz_class& s) {
    return {a, window_b(b, a, s)};
}

std::pair<ModState, QuadElt> ideal_rho(long D, const ModState& st, const mpz_class& s) {
    mpz_class c_signed = (st.b * st.b - D) / (4 * st.a);
    mpz_class cab = abs(c_signed);
    if (cab == 0) throw Anomaly("square discriminant in reduction step");
    QuadElt delta{D, mpq_class(st.b) / (2 * st.a), mpq_class(1) / (2 * st.a)};
    return {normalize_state(cab, -st.b, s), delta};
}

bool is_reduced_pair(long D, const mpz_class& a, const mpz_class& b, const mpz_class& s) {
    if (a <= 0 || b <= 0 || b > s) return false;
    mpz_class lo = 2 * a - b, hi = 2 * a + b;
    return lo * lo < D && hi * hi > D;
}

constexpr unsigned long kWalkCap = 1000000;

// Reduce a module state, accumulating the sign of the multiplier norms.
// sign(N(delta)) = sign(b^2 - D) at the state being left.
std::pair<ModState, int> reduce_signed(long D, ModState st, const mpz_class& s) {
    int sign = 1;
    for (unsigned long i = 0; i < kWalkCap; ++i) {
        if (is_reduced_pair(D, st.a, st.b, s)) return {st, sign};
        if (st.b * st.b < D) sign = -sign;
        st = ideal_rho(D, st, s).first;
    }
    throw BoundExceeded("ideal reduction did not terminate");
}

QuadForm rho_form(long D, const QuadForm& f, const mpz_class& s) {
    mpz_class cab = abs(f.c);
    mpz_class bn = window_b(-f.b, cab, s);
    return {f.c, bn, (bn * bn - D) / (4 * f.c)};
}

unsigned long table_order(const std::vector<std::vector<unsigned long>>& t,
                          unsigned long id, unsigned long x) {
    unsigned long o = 1, y = x;
    while (y != id) {
        y = t[y][x];
        if (++o > t.size()) throw Anomaly("element order exceeds group size");
    }
    return o;
}

// Discrete logarithms on a finite abelian composition table: coordinates of
// every element with respect to a cyclic basis whose orders are the given
// invariant factors.  Built by splitting off a maximal-order generator,
// recursing on the quotient, and lifting the quotient basis with the usual
// order correction; the tuple map is verified to be a bijection.
struct DlogTables {
    std::vector<std::vector<long>> coords;
    std::vector<unsigned long> gens;
};

DlogTables group_dlog(const std::vector<std::vector<unsigned long>>& t,
                      unsigned long id,
                      const std::vector<unsigned long>& factors) {
    const unsigned long n = t.size();
    DlogTables R;
    R.coords.assign(n, {});
    if (factors.empty()) {
        if (n != 1) throw Anomaly("no invariant factors for a nontrivial group");
        return R;
    }
    const unsigned long d1 = factors[0];
    unsigned long g = n;
    for (unsigned long x = 0; x < n && g == n; ++x)
        if (table_order(t, id, x) == d1) g = x;
    if (g == n) throw Anomaly("no element of maximal order");

    std::vector<unsigned long> gpow(d1);
    std::map<unsigned long, unsigned long> dlog_g;
    gpow[0] = id;
    dlog_g[id] = 0;
    for (unsigned long k = 1; k < d1; ++k) {
        gpow[k] = t[gpow[k - 1]][g];
        dlog_g[gpow[k]] = k;
    }
    std::vector<long> cos_of(n, -1);
    std::vector<unsigned long> reps;
    for (unsigned long x = 0; x < n; ++x)
        if (cos_of[x] < 0) {
            const long ci = static_cast<long>(reps.size());
            reps.push_back(x);
            for (unsigned long k = 0; k < d1; ++k) cos_of[t[x][gpow[k]]] = ci;
        }
    const unsigned long q = reps.size();
    if (q * d1 != n) throw Anomaly("cosets of the cyclic part do not tile the group");
    std::vector<std::vector<unsigned long>> qt(q, std::vector<unsigned long>(q));
    for (unsigned long i = 0; i < q; ++i)
        for (unsigned long k = 0; k < q; ++k)
            qt[i][k] = static_cast<unsigned long>(cos_of[t[reps[i]][reps[k]]]);
    const unsigned long qid = static_cast<unsigned long>(cos_of[id]);
    const std::vector<unsigned long> subfactors(factors.begin() + 1, factors.end());
    DlogTables sub = group_dlog(qt, qid, subfactors);

    auto inv_of = [&](unsigned long x) {
        unsigned long o = table_order(t, id, x), y = id;
        for (unsigned long k = 0; k + 1 < o; ++k) y = t[y][x];
        return y;
    };
    R.gens = {g};
    std::vector<unsigned long> lifted;
    for (size_t i = 0; i < sub.gens.size(); ++i) {
        const unsigned long d = subfactors[i];
        const unsigned long r = reps[sub.gens[i]];
        unsigned long rd = id;
        for (unsigned long k = 0; k < d; ++k) rd = t[rd][r];
        auto it = dlog_g.find(rd);
        if (it == dlog_g.end()) throw Anomaly("generator power escaped the cyclic part");
        const unsigned long c = it->second;
        if (c % d != 0) throw Anomaly("generator lift admits no order correction");
        const unsigned long shift = (d1 - c / d) % d1;
        const unsigned long adj = t[r][gpow[shift]];
        lifted.push_back(adj);
        R.gens.push_back(adj);
    }
    for (unsigned long e = 0; e < n; ++e) {
        const std::vector<long>& qc = sub.coords[static_cast<size_t>(cos_of[e])];
        unsigned long prod = id;
        for (size_t i = 0; i < lifted.size(); ++i)
            for (long k = 0; k < qc[i]; ++k) prod = t[prod][lifted[i]];
        const unsigned long z = t[e][inv_of(prod)];
        auto it = dlog_g.find(z);
        if (it == dlog_g.end()) throw Anomaly("coordinates escaped the cyclic part");
        std::vector<long> v{static_cast<long>(it->second)};
        v.insert(v.end(), qc.begin(), qc.end());
        R.coords[e] = std::move(v);
    }
    std::set<std::vector<long>> distinct(R.coords.begin(), R.coords.end());
    if (distinct.size() != n) throw Anomaly("coordinate map is not a bijection");
    return R;
}

// Invariant factors of a finite abelian group given by a composition table.
std::vector<unsigned long> abelian_factors(
    const std::vector<std::vector<unsigned long>>& t, unsigned long id) {
    unsigned long n = t.size();
    if (n == 1) return {};
    unsigned long best = id, best_ord = 1;
    for (unsigned long x = 0; x < n; ++x) {
        unsigned long y = x, ord = 1;
        while (y != id) {
            y = t[y][x];
            if (++ord > n) throw Anomaly("element order exceeds group size");
        }
        if (ord > best_ord) {
            best_ord = ord;
            best = x;
        }
    }
    std::vector<unsigned long> cyc;
    unsigned long y = id;
    do {
        cyc.push_back(y);
        y = t[y][best];
    } while (y != id);
    std::vector<unsigned long> rep(n);
    for (unsigned long x = 0; x < n; ++x) {
        unsigned long m = x;
        for (unsigned long c : cyc) m = std::min(m, t[x][c]);
        rep[x] = m;
    }
    std::map<unsigned long, unsigned long> idx;
    std::vector<unsigned long> reps;
    for (unsigned long x = 0; x < n; ++x)
        if (rep[x] == x) {
            idx[x] = reps.size();
            reps.push_back(x);
        }
    std::vector<std::vector<unsigned long>> q(reps.size(),
                                              std::vector<unsigned long>(reps.size()));
    for (unsigned long i = 0; i < reps.size(); ++i)
        for (unsigned long j = 0; j < reps.size(); ++j)
            q[i][j] = idx.at(rep[t[reps[i]][reps[j]]]);
    std::vector<unsigned long> out{best_ord};
    auto rest = abelian_factors(q, idx.at(rep[id]));
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

} // namespace

// Square root of D modulo q^T: for odd q via a Newton lift of the smaller
// root mod q, for q = 2 (split, D = 1 mod 8) the root congruent to 1 mod 4.
mpz_class hensel_sqrt(long D, unsigned long q, unsigned long T) {
    mpz_class Dz(D), qz(q);
    if (q == 2) {
        if (T < 3) T = 3;
        mpz_class r = 1, step = 4; // step = 2^(j-1)
        for (unsigned long j = 3; j < T; ++j) {
            mpz_class mod2 = step * 4; // 2^(j+1)
            if (mod_z(r * r - Dz, mod2) != 0) r += step;
            step *= 2;
        }
        return r;
    }
    unsigned long r0 = 0;
    for (unsigned long c = 1; c < q; ++c) {
        if ((mpz_class(c) * c - Dz) % q == 0) {
            r0 = c;
            break;
        }
    }
    if (r0 == 0) throw Anomaly("no square root modulo a split prime");
    if (q - r0 < r0) r0 = q - r0;
    mpz_class r(r0), M(qz), target;
    mpz_pow_ui(target.get_mpz_t(), qz.get_mpz_t(), T);
    while (M < target) {
        mpz_class M2 = M * M;
        if (M2 > target) M2 = target;
        mpz_class inv;
        if (!mpz_invert(inv.get_mpz_t(), mpz_class(2 * r).get_mpz_t(), M2.get_mpz_t()))
            throw Anomaly("non-invertible derivative in Newton lift");
        r = mod_z(r - (r * r - Dz) * inv, M2);
        M = M2;
    }
    return r;
}

// ---- element arithmetic ----------------------------------------------------

QuadElt QuadElt::operator+(const QuadElt& o) const {
    require_same_field(*this, o);
    return {D, a + o.a, b + o.b};
}

QuadElt QuadElt::operator-(const QuadElt& o) const {
    require_same_field(*this, o);
    return {D, a - o.a, b - o.b};
}

QuadElt QuadElt::operator*(const QuadElt& o) const {
    require_same_field(*this, o);
    return {D, a * o.a + mpq_class(D) * b * o.b, a * o.b + b * o.a};
}

QuadElt QuadElt::inv() const {
    mpq_class n = norm();
    if (n == 0) throw NotInvertible("zero or degenerate quadratic element");
    return {D, a / n, -b / n};
}

QuadElt QuadElt::pow(long e) const {
    QuadElt base = *this;
    unsigned long k;
    if (e < 0) {
        base = inv();
        k = static_cast<unsigned long>(-(e + 1)) + 1UL;
    } else {
        k = static_cast<unsigned long>(e);
    }
    QuadElt acc{D, 1, 0};
    while (k != 0) {
        if (k & 1UL) acc = acc * base;
        base = base * base;
        k >>= 1;
    }
    return acc;
}

// ---- fundamental unit via the continued fraction of (r0 + sqrt(D))/2 ------

QuadElt fundamental_unit(long D) {
    require_fundamental(D);
    const mpz_class Dz(D);
    const mpz_class s = isqrt_z(Dz);
    mpz_class P = D % 2, Q = 2;
    {
        mpz_class a0 = floor_quad(P, Q, s);
        mpz_class P1 = a0 * Q - P;
        Q = (Dz - P1 * P1) / Q;
        P = P1;
    }
    std::map<std::pair<mpz_class, mpz_class>, unsigned long> seen;
    mpz_class Pc = P, Qc = Q;
    unsigned long period = 0;
    for (unsigned long i = 0;; ++i) {
        if (i > kWalkCap) throw BoundExceeded("continued fraction period too long");
        auto key = std::make_pair(Pc, Qc);
        auto it = seen.find(key);
        if (it != seen.end()) {
            period = i - it->second;
            P = Pc;
            Q = Qc;
            break;
        }
        seen.emplace(std::move(key), i);
        mpz_class ai = floor_quad(Pc, Qc, s);
        mpz_class Pn = ai * Qc - Pc;
        Qc = (Dz - Pn * Pn) / Qc;
        Pc = Pn;
    }
    // Accumulate the stabilizer matrix of the recurring complete quotient;
    // the unit is its bottom row applied to that quotient.
    mpz_class m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    Pc = P;
    Qc = Q;
    for (unsigned long i = 0; i < period; ++i) {
        mpz_class ai = floor_quad(Pc, Qc, s);
        mpz_class n00 = m00 * ai + m01, n10 = m10 * ai + m11;
        m01 = m00;
        m11 = m10;
        m00 = n00;
        m10 = n10;
        mpz_class Pn = ai * Qc - Pc;
        Qc = (Dz - Pn * Pn) / Qc;
        Pc = Pn;
    }
    QuadElt eps{D, mpq_class(m10 * P + m11 * Q) / mpq_class(Q),
                mpq_class(m10) / mpq_class(Q)};
    mpq_class n = eps.norm();
    if (n != 1 && n != -1) throw Anomaly("stabilizer of the periodic quotient is not a unit");
    if (!(eps.a > 0 && eps.b > 0)) throw Anomaly("unit from the period is not normalized");
    mpq_class ta = 2 * eps.a, tb = 2 * eps.b;
    if (ta.get_den() != 1 || tb.get_den() != 1 ||
        mod_z(ta.get_num() - tb.get_num() * Dz, 2) != 0)
        throw Anomaly("unit does not lie in the maximal order");
    return eps;
}

// ---- reduced forms and their rho cycles ------------------------------------

std::vector<std::vector<QuadForm>> reduced_form_cycles(long D) {
    require_fundamental(D);
    const mpz_class s = isqrt_z(mpz_class(D));
    std::set<QuadForm> all;
    for (mpz_class b = (D % 2 != 0) ? 1 : 2; b <= s; b += 2) {
        mpz_class rest4 = mpz_class(D) - b * b;
        if (rest4 % 4 != 0) throw Anomaly("discriminant parity mismatch");
        unsigned long rest = mpz_class(rest4 / 4).get_ui();
        for (uint64_t d : divisors(rest)) {
            mpz_class a(static_cast<unsigned long>(d));
            mpz_class lo = 2 * a - b, hi = 2 * a + b;
            if (lo * lo < D && hi * hi > D) {
                mpz_class c = -mpz_class(static_cast<unsigned long>(rest / d));
                all.insert({a, b, c});
                all.insert({-a, b, -c});
            }
        }
    }
    std::set<QuadForm> unvisited = all;
    std::vector<std::vector<QuadForm>> cycles;
    while (!unvisited.empty()) {
        QuadForm f = *unvisited.begin();
        std::vector<QuadForm> cycle;
        QuadForm g = f;
        do {
            if (all.find(g) == all.end())
                throw Anomaly("rho step left the reduced set");
            cycle.push_back(g);
            unvisited.erase(g);
            g = rho_form(D, g, s);
        } while (!(g == f));
        cycles.push_back(std::move(cycle));
    }
    return cycles;
}

// ---- ideal arithmetic -------------------------------------------------------

QuadIdeal ideal_mul(const QuadIdeal& x, const QuadIdeal& y) {
    validate_ideal(x);
    validate_ideal(y);
    if (x.D != y.D) throw InvalidConfig("ideals lie in different fields");
    long D = x.D;
    std::vector<std::pair<mpz_class, mpz_class>> rows{
        {2 * x.a * y.a, 0},
        {-x.a * y.b, x.a},
        {-y.a * x.b, y.a},
        {(x.b * y.b + D) / 2, -(x.b + y.b) / 2}};
    return ideal_from_hnf(D, hnf_2col(rows)).first;
}

QuadIdeal ideal_pow(const QuadIdeal& x, unsigned long e) {
    validate_ideal(x);
    QuadIdeal acc{x.D, 1, (x.D % 2 != 0) ? 1 : 0};
    QuadIdeal base = x;
    while (e != 0) {
        if (e & 1UL) acc = ideal_mul(acc, base);
        base = ideal_mul(base, base);
        e >>= 1;
    }
    return acc;
}

QuadIdeal principal_ideal(long D, const QuadElt& x) {
    require_fundamental(D);
    if (x.D != D) throw InvalidConfig("element does not lie in the requested field");
    auto [rows, n] = principal_rows(D, x);
    return ideal_from_hnf(D, hnf_2col(rows)).first;
}

bool ideal_is(const QuadIdeal& I, const QuadElt& x) {
    validate_ideal(I);
    if (x.D != I.D || x.is_zero()) return false;
    auto [rows, n] = principal_rows(I.D, x);
    HnfTriple h = hnf_2col(rows);
    mpz_class tb = mod_z(-I.b, 2 * I.a);
    return h.c == n && h.g == 2 * n * I.a && h.t == n * tb;
}

QuadElt principalize(const QuadIdeal& I) {
    validate_ideal(I);
    long D = I.D;
    const mpz_class s = isqrt_z(mpz_class(D));
    // the principal cycle, each reduced module with Theta such that it equals Theta * O
    std::map<std::pair<mpz_class, mpz_class>, QuadElt> principal_cycle;
    {
        mpz_class b1 = s;
        if (mod_z(b1 - D, 2) != 0) b1 -= 1;
        ModState st{1, b1};
        QuadElt theta{D, 1, 0};
        for (unsigned long i = 0; i < kWalkCap; ++i) {
            auto key = std::make_pair(st.a, st.b);
            if (principal_cycle.count(key) != 0) break;
            principal_cycle.emplace(key, theta);
            auto [ns, delta] = ideal_rho(D, st, s);
            theta = delta * theta;
            st = ns;
        }
    }
    ModState st = normalize_state(I.a, I.b, s);
    QuadElt acc{D, 1, 0};
    std::set<std::pair<mpz_class, mpz_class>> seen;
    for (unsigned long i = 0; i < kWalkCap; ++i) {
        auto key = std::make_pair(st.a, st.b);
        auto it = principal_cycle.find(key);
        if (it != principal_cycle.end()) {
            QuadElt g = it->second * acc.inv();
            if (!ideal_is(I, g))
                throw Anomaly("principal generator failed exact verification");
            return g;
        }
        if (!seen.insert(key).second) break;
        auto [ns, delta] = ideal_rho(D, st, s);
        acc = delta * acc;
        st = ns;
    }
    throw NonPrincipalizable("ideal class is nontrivial");
}

// ---- prime ideals and valuations -------------------------------------------

QuadIdeal prime_ideal(long D, unsigned long p) {
    require_fundamental(D);
    if (p == 0 || !is_prime_u64(p)) throw InvalidConfig("prime required");
    int chi = kronecker(mpz_class(D), mpz_class(p));
    if (chi == -1) throw NotSplit("prime is inert: no ideal of degree one");
    mpz_class b(-1);
    if (chi == 0) {
        for (mpz_class c = 0; c < 2 * static_cast<long>(p); ++c) {
            if (mod_z(c - D, 2) == 0 && mod_z(c * c - D, 4 * p) == 0) {
                b = c;
                break;
            }
        }
    } else if (p == 2) {
        b = 1; // split two: D = 1 mod 8, the root of x^2 = D congruent to 1 mod 4
    } else {
        unsigned long r = 0;
        for (unsigned long c = 1; c < p; ++c) {
            if ((mpz_class(c) * c - D) % p == 0) {
                r = c;
                break;
            }
        }
        if (r == 0) throw Anomaly("split prime has no square root");
        if (p - r < r) r = p - r;
        for (unsigned long k = 0; k <= 3 && b < 0; ++k) {
            mpz_class c = mpz_class(r) + mpz_class(k) * p;
            if (mod_z(c - D, 2) == 0 && mod_z(c * c - D, 4 * p) == 0) b = c;
        }
    }
    if (b < 0) throw Anomaly("no valid ideal coordinate over the prime");
    b = mod_z(b, 2 * mpz_class(p));
    if (b > p) b -= 2 * p;
    QuadIdeal I{D, mpz_class(p), b};
    validate_ideal(I);
    return I;
}

int quad_places_over(long D, unsigned long q) {
    require_fundamental(D);
    return kronecker(mpz_class(D), mpz_class(q)) == 1 ? 2 : 1;
}

long quad_valuation(const QuadElt& x, unsigned long q, int place) {
    long D = x.D;
    require_fundamental(D);
    if (x.is_zero()) throw InvalidConfig("valuation of zero");
    if (q == 0 || !is_prime_u64(q)) throw InvalidConfig("prime required");
    int chi = kronecker(mpz_class(D), mpz_class(q));
    int nplaces = (chi == 1) ? 2 : 1;
    if (place < 0 || place >= nplaces) throw InvalidConfig("invalid place index");
    mpz_class qz(q);
    // clear denominators: x = (A + B sqrt(D))/C
    mpz_class C;
    mpz_lcm(C.get_mpz_t(), x.a.get_den().get_mpz_t(), x.b.get_den().get_mpz_t());
    mpz_class A = x.a.get_num() * (C / x.a.get_den());
    mpz_class B = x.b.get_num() * (C / x.b.get_den());
    long vC = val_p(C, qz);
    mpz_class Nint = A * A - mpz_class(D) * B * B;
    if (Nint == 0) throw Anomaly("nonzero element with zero norm");
    long vN = val_p(Nint, qz);
    if (chi == -1) {
        if (vN % 2 != 0) throw Anomaly("odd norm valuation at an inert prime");
        return vN / 2 - vC;
    }
    if (chi == 0) {
        // normalized so the uniformizer has valuation one, the prime q two
        return vN - 2 * vC;
    }
    unsigned long T = static_cast<unsigned long>(vN) + 1;
    if (q == 2 && T < 3) T = 3;
    mpz_class qT;
    mpz_pow_ui(qT.get_mpz_t(), qz.get_mpz_t(), T);
    mpz_class r = hensel_sqrt(D, q, T);
    if (place == 1) r = qT - r;
    mpz_class image = mod_z(A + B * r, qT);
    long v = 0;
    while (image != 0 && image % q == 0) {
        image /= q;
        ++v;
    }
    if (image == 0) throw Anomaly("valuation exceeded its norm bound");
    return v - vC;
}

// ---- narrow class group -----------------------------------------------------

ClassGroupData class_group_bqf(long D) {
    require_fundamental(D);
    const mpz_class s = isqrt_z(mpz_class(D));
    auto cycles = reduced_form_cycles(D);
    const unsigned long h = cycles.size();
    std::map<QuadForm, unsigned long> cycle_of;
    for (unsigned long i = 0; i < h; ++i)
        for (const QuadForm& f : cycles[i]) cycle_of.emplace(f, i);

    auto class_of = [&](const mpz_class& a, const mpz_class& b, int sign) {
        auto [st, sflip] = reduce_signed(D, normalize_state(a, b, s), s);
        int sg = sign * sflip;
        mpz_class fa = sg > 0 ? st.a : -st.a;
        QuadForm f{fa, st.b, (st.b * st.b - D) / (4 * fa)};
        auto it = cycle_of.find(f);
        if (it == cycle_of.end()) throw Anomaly("reduced form missing from its cycle");
        return it->second;
    };

    mpz_class b1 = s;
    if (mod_z(b1 - D, 2) != 0) b1 -= 1;
    const unsigned long id = class_of(1, b1, +1);

    std::vector<std::pair<mpz_class, mpz_class>> rep(h);
    for (unsigned long i = 0; i < h; ++i) {
        bool found = false;
        for (const QuadForm& f : cycles[i])
            if (f.a > 0) {
                rep[i] = {f.a, f.b};
                found = true;
                break;
            }
        if (!found) throw Anomaly("cycle without a positive leading coefficient");
    }

    std::vector<std::vector<unsigned long>> t(h, std::vector<unsigned long>(h));
    for (unsigned long i = 0; i < h; ++i)
        for (unsigned long j = i; j < h; ++j) {
            QuadIdeal P = ideal_mul(QuadIdeal{D, rep[i].first, rep[i].second},
                                    QuadIdeal{D, rep[j].first, rep[j].second});
            t[i][j] = t[j][i] = class_of(P.a, P.b, +1);
        }
    for (unsigned long i = 0; i < h; ++i) {
        if (t[id][i] != i) throw Anomaly("identity row is not the identity");
        std::set<unsigned long> row(t[i].begin(), t[i].end());
        if (row.size() != h) throw Anomaly("composition row is not a permutation");
    }

    ClassGroupData out;
    out.D = D;
    out.h_narrow = h;
    out.narrow_factors = abelian_factors(t, id);
    {
        unsigned long prod = 1;
        for (unsigned long f : out.narrow_factors) prod *= f;
        if (prod != h) throw Anomaly("invariant factors do not multiply to the class number");
    }

    QuadElt eps = fundamental_unit(D);
    out.unit_norm = (eps.norm() == -1) ? -1 : 1;
    // the class of (sqrt D): a plain ideal carries positive orientation, and
    // it is narrow-trivial exactly when some generator has positive norm
    QuadIdeal Jd = principal_ideal(D, QuadElt(D, 0, 1));
    unsigned long j = class_of(Jd.a, Jd.b, +1);
    if ((out.unit_norm == -1) != (j == id))
        throw Anomaly("unit norm contradicts the narrow class of the square root");
    if (t[j][j] != id) throw Anomaly("square root class does not square to the identity");

    std::vector<unsigned long> wrep(h);
    for (unsigned long x = 0; x < h; ++x) wrep[x] = std::min(x, t[x][j]);
    std::map<unsigned long, unsigned long> widx;
    std::vector<unsigned long> wreps;
    for (unsigned long x = 0; x < h; ++x)
        if (wrep[x] == x) {
            widx[x] = wreps.size();
            wreps.push_back(x);
        }
    out.h_wide = wreps.size();
    if (out.h_wide * (j == id ? 1 : 2) != h)
        throw Anomaly("narrow-to-wide index is not the unit norm index");
    std::vector<std::vector<unsigned long>> wt(out.h_wide,
                                               std::vector<unsigned long>(out.h_wide));
    for (unsigned long i = 0; i < out.h_wide; ++i)
        for (unsigned long k = 0; k < out.h_wide; ++k)
            wt[i][k] = widx.at(wrep[t[wreps[i]][wreps[k]]]);
    const unsigned long wid = widx.at(wrep[id]);
    out.wide_factors = abelian_factors(wt, wid);

    out.form_to_narrow.assign(cycle_of.begin(), cycle_of.end());
    out.narrow_to_wide.resize(h);
    for (unsigned long x = 0; x < h; ++x) out.narrow_to_wide[x] = widx.at(wrep[x]);
    out.wide_coords = group_dlog(wt, wid, out.wide_factors).coords;
    {
        // dual route on the coordinate tables: component orders recovered
        // from the coordinates must reproduce the invariant factors
        for (size_t k = 0; k < out.wide_factors.size(); ++k) {
            long maxc = 0;
            for (const auto& v : out.wide_coords) maxc = std::max(maxc, v[k]);
            if (maxc < 0 || static_cast<unsigned long>(maxc) != out.wide_factors[k] - 1)
                throw Anomaly("coordinate range disagrees with the invariant factors");
        }
        for (long c : out.wide_coords[wid])
            if (c != 0) throw Anomaly("principal class has nonzero coordinates");
    }

    // dual count: the narrow group must be generated by small prime classes
    auto closure = [&](std::set<unsigned long>& sub, unsigned long c,
                       const std::vector<std::vector<unsigned long>>& table) {
        std::vector<unsigned long> frontier(sub.begin(), sub.end());
        while (!frontier.empty()) {
            std::vector<unsigned long> next;
            for (unsigned long x : frontier) {
                unsigned long y = table[x][c];
                if (sub.insert(y).second) next.push_back(y);
            }
            frontier = std::move(next);
        }
    };
    std::set<unsigned long> narrow_gen{id};
    std::set<unsigned long> wide_gen{wid};
    for (uint64_t p : primes_up_to(1000)) {
        int chi = kronecker(mpz_class(D), mpz_class(p));
        if (chi == -1) continue;
        QuadIdeal P = prime_ideal(D, static_cast<unsigned long>(p));
        unsigned long cp = class_of(P.a, P.b, +1);
        closure(narrow_gen, cp, t);
        if (chi == 1 && wide_gen.size() < out.h_wide) {
            unsigned long wc = widx.at(wrep[cp]);
            if (wide_gen.find(wc) == wide_gen.end() || wide_gen.size() == 1) {
                std::set<unsigned long> before = wide_gen;
                closure(wide_gen, wc, wt);
                if (wide_gen.size() > before.size())
                    out.generators.emplace_back(static_cast<unsigned long>(p), P.b);
            }
        }
        if (narrow_gen.size() == h && wide_gen.size() == out.h_wide) break;
    }
    if (narrow_gen.size() != h)
        throw Anomaly("narrow classes not generated by primes up to one thousand");
    if (wide_gen.size() != out.h_wide)
        throw Anomaly("wide classes not generated by split primes up to one thousand");
    return out;
}

QuadIdeal ideal_conj(const QuadIdeal& I) {
    mpz_class b = mod_z(-I.b, 2 * I.a);
    if (b > I.a) b -= 2 * I.a;
    return QuadIdeal{I.D, I.a, b};
}

unsigned long wide_class_index(const ClassGroupData& G, const QuadIdeal& I) {
    if (I.D != G.D) throw InvalidConfig("ideal discriminant does not match the class data");
    if (G.form_to_narrow.empty()) throw InvalidConfig("class data carries no form tables");
    const mpz_class s = isqrt_z(mpz_class(G.D));
    auto [st, sflip] = reduce_signed(G.D, normalize_state(I.a, I.b, s), s);
    const mpz_class fa = sflip > 0 ? st.a : -st.a;
    const QuadForm f{fa, st.b, (st.b * st.b - G.D) / (4 * fa)};
    auto it = std::lower_bound(
        G.form_to_narrow.begin(), G.form_to_narrow.end(), f,
        [](const std::pair<QuadForm, unsigned long>& p, const QuadForm& g) {
            return p.first < g;
        });
    if (it == G.form_to_narrow.end() || !(it->first == f))
        throw Anomaly("reduced form missing from the stored class tables");
    return G.narrow_to_wide[it->second];
}

std::vector<long> wide_class_coords(const ClassGroupData& G, const QuadIdeal& I) {
    return G.wide_coords[wide_class_index(G, I)];
}

} // namespace lognorm
