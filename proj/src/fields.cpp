#include "lognorm/fields.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "lognorm/util.hpp"

namespace lognorm {

namespace {

// modular product that stays in 64 bits for the supported modulus range
uint64_t mul_mod(uint64_t a, uint64_t b, uint64_t m) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

uint64_t gcd_u(uint64_t a, uint64_t b) {
    while (b) {
        uint64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// ell^k as a 64-bit integer with an explicit overflow guard
uint64_t pow_u(uint64_t b, unsigned e) {
    uint64_t r = 1;
    for (unsigned i = 0; i < e; ++i) {
        if (r > (uint64_t(1) << 62) / b)
            throw ConductorOverflow("prime power exceeds the supported range");
        r *= b;
    }
    return r;
}

constexpr unsigned long kModulusCap = 20000000;

void require_odd_prime(unsigned long ell) {
    if (ell < 3 || ell % 2 == 0 || !is_prime_u64(ell))
        throw InvalidConfig("ell must be an odd prime at least three");
}

// substitute zeta_m -> zeta_M^(M/m), exactly
CycloElt lift_to_ring(const CycloElt& x,
                      const std::shared_ptr<const CycloRing>& R) {
    const unsigned long m = x.ring().conductor();
    const unsigned long M = R->conductor();
    if (m == M && x.ring_ptr() == R) return x;
    if (M % m != 0)
        throw InvalidConfig("target conductor is not a multiple of the source");
    const unsigned long t = M / m;
    std::vector<mpq_class> w(M, mpq_class(0));
    const auto& c = x.coeffs();
    for (size_t i = 0; i < c.size(); ++i) w[i * t] = c[i];
    return CycloElt(R, R->reduce_redundant(w));
}

} // namespace

// ---------------------------------------------------------------------------
// AbelianField
// ---------------------------------------------------------------------------

AbelianField AbelianField::from_subgroup(unsigned long M,
                                         std::vector<uint64_t> H) {
    if (M < 3) throw InvalidConfig("modulus must be at least three");
    if (M > kModulusCap) throw ConductorOverflow("modulus exceeds the supported range");
    if (H.empty()) throw InvalidConfig("fixing subgroup must be nonempty");
    std::sort(H.begin(), H.end());
    H.erase(std::unique(H.begin(), H.end()), H.end());
    for (uint64_t h : H)
        if (h == 0 || h >= M || gcd_u(h, M) != 1)
            throw InvalidConfig("fixing residues must be units modulo the conductor");
    if (H.front() != 1) throw InvalidConfig("fixing subgroup must contain one");

    // greedy generators plus full closure: the enumeration must be a group
    std::set<uint64_t> span{1};
    std::vector<uint64_t> gens;
    for (uint64_t h : H) {
        if (span.count(h)) continue;
        gens.push_back(h);
        const uint64_t ord = mult_order(h, M);
        std::vector<uint64_t> snap(span.begin(), span.end());
        uint64_t hk = 1;
        for (uint64_t k = 1; k < ord; ++k) {
            hk = mul_mod(hk, h, M);
            for (uint64_t s : snap) span.insert(mul_mod(s, hk, M));
        }
    }
    if (span.size() != H.size() ||
        !std::equal(span.begin(), span.end(), H.begin()))
        throw InvalidConfig("fixing residues do not form a subgroup");

    AbelianField F;
    F.M_ = M;
    F.H_ = std::move(H);
    F.h_gens_ = std::move(gens);
    F.ring_ = CycloRing::get(M);
    const unsigned long phi = F.ring_->degree();
    if (phi % F.H_.size() != 0)
        throw Anomaly("subgroup order does not divide the unit group order");
    F.degree_ = phi / F.H_.size();
    F.totally_real_ =
        std::binary_search(F.H_.begin(), F.H_.end(), uint64_t(M - 1));

    std::set<uint64_t> covered;
    for (uint64_t a : units_mod(M)) {
        if (covered.count(a)) continue;
        F.delta_.push_back(a);
        for (uint64_t h : F.H_) covered.insert(mul_mod(a, h, M));
    }
    if (F.delta_.size() != F.degree_)
        throw Anomaly("coset count does not match the field degree");
    return F;
}

AbelianField AbelianField::real_cyclotomic(unsigned long M) {
    return from_subgroup(M, {1, M - 1});
}

AbelianField AbelianField::real_quadratic_in(unsigned long M, long D) {
    if (D < 5 || !is_fundamental_discriminant(D))
        throw InvalidConfig("discriminant must be fundamental and at least 5");
    if (M % static_cast<unsigned long>(D) != 0)
        throw InvalidConfig("conductor must be a multiple of the discriminant");
    std::vector<uint64_t> H;
    for (uint64_t a : units_mod(M))
        if (kronecker(mpz_class(D), mpz_class(a)) == 1) H.push_back(a);
    AbelianField F = from_subgroup(M, std::move(H));
    if (F.degree() != 2)
        throw Anomaly("kernel of the quadratic character has unexpected index");
    return F;
}

bool AbelianField::contains(const CycloElt& x) const {
    if (x.ring().conductor() != M_)
        throw InvalidConfig("element lives in a different cyclotomic ring");
    for (uint64_t g : h_gens_)
        if (!(x.galois(g) == x)) return false;
    return true;
}

CycloElt AbelianField::norm_from_ambient(const CycloElt& x) const {
    if (x.ring().conductor() != M_)
        throw InvalidConfig("element lives in a different cyclotomic ring");
    CycloElt acc = x;
    for (size_t i = 1; i < H_.size(); ++i) acc = acc * x.galois(H_[i]);
    return acc;
}

// ---------------------------------------------------------------------------
// BaseField
// ---------------------------------------------------------------------------

BaseField BaseField::rationals() { return BaseField{}; }

BaseField BaseField::real_quadratic(long D) {
    if (D < 5 || !is_fundamental_discriminant(D))
        throw InvalidConfig("discriminant must be fundamental and at least 5");
    BaseField K;
    K.kind = BaseKind::RealQuadratic;
    K.D = D;
    K.conductor = static_cast<unsigned long>(D);
    return K;
}

BaseField BaseField::real_cyclotomic(unsigned long conductor) {
    auto fac = factor_u64(conductor);
    if (conductor < 9 || fac.size() != 1 || fac.begin()->first == 2 ||
        fac.begin()->second < 2)
        throw InvalidConfig(
            "real cyclotomic base needs an odd prime power conductor, exponent "
            "at least two");
    BaseField K;
    K.kind = BaseKind::RealCyclotomic;
    K.conductor = conductor;
    return K;
}

// ---------------------------------------------------------------------------
// FieldElt operations
// ---------------------------------------------------------------------------

FieldElt fe_mul(const FieldElt& a, const FieldElt& b) {
    if (a.v.index() != b.v.index())
        throw InvalidConfig("base elements of different kinds");
    if (const auto* q = std::get_if<mpq_class>(&a.v))
        return FieldElt::rational((*q) * std::get<mpq_class>(b.v));
    if (const auto* u = std::get_if<QuadElt>(&a.v))
        return FieldElt::quad((*u) * std::get<QuadElt>(b.v));
    return FieldElt::cyclo(std::get<CycloElt>(a.v) * std::get<CycloElt>(b.v));
}

FieldElt fe_pow(const FieldElt& a, const mpz_class& e) {
    const bool neg = e < 0;
    mpz_class ea = abs(e);
    if (!ea.fits_ulong_p()) throw BoundExceeded("exponent exceeds the supported range");
    const unsigned long eu = ea.get_ui();
    if (const auto* q = std::get_if<mpq_class>(&a.v)) {
        if (*q == 0) {
            if (neg) throw NotInvertible("zero has no negative powers");
            return FieldElt::rational(eu == 0 ? mpq_class(1) : mpq_class(0));
        }
        mpq_class base = neg ? mpq_class(1) / *q : *q;
        mpq_class r;
        mpz_pow_ui(r.get_num().get_mpz_t(), base.get_num().get_mpz_t(), eu);
        mpz_pow_ui(r.get_den().get_mpz_t(), base.get_den().get_mpz_t(), eu);
        r.canonicalize();
        return FieldElt::rational(r);
    }
    if (const auto* u = std::get_if<QuadElt>(&a.v)) {
        if (!e.fits_slong_p())
            throw BoundExceeded("exponent exceeds the supported range");
        return FieldElt::quad(u->pow(e.get_si()));
    }
    const CycloElt& x = std::get<CycloElt>(a.v);
    return FieldElt::cyclo(neg ? x.inv().pow(ea) : x.pow(ea));
}

bool fe_eq(const FieldElt& a, const FieldElt& b) {
    if (a.v.index() != b.v.index())
        throw InvalidConfig("base elements of different kinds");
    if (const auto* q = std::get_if<mpq_class>(&a.v))
        return *q == std::get<mpq_class>(b.v);
    if (const auto* u = std::get_if<QuadElt>(&a.v))
        return *u == std::get<QuadElt>(b.v);
    return std::get<CycloElt>(a.v) == std::get<CycloElt>(b.v);
}

bool fe_is_zero(const FieldElt& a) {
    if (const auto* q = std::get_if<mpq_class>(&a.v)) return *q == 0;
    if (const auto* u = std::get_if<QuadElt>(&a.v)) return u->is_zero();
    return std::get<CycloElt>(a.v).is_zero();
}

std::optional<mpq_class> fe_rational_value(const FieldElt& a) {
    if (const auto* q = std::get_if<mpq_class>(&a.v)) return *q;
    if (const auto* u = std::get_if<QuadElt>(&a.v)) {
        if (u->is_rational()) return u->a;
        return std::nullopt;
    }
    const auto& c = std::get<CycloElt>(a.v);
    if (c.is_rational()) return c.rational_value();
    return std::nullopt;
}

bool fe_is_pm_one(const FieldElt& a) {
    auto r = fe_rational_value(a);
    return r && (*r == 1 || *r == -1);
}

// ---------------------------------------------------------------------------
// TowerContext
// ---------------------------------------------------------------------------

TowerContext::TowerContext(BaseField base, unsigned long ell, unsigned n_max,
                           size_t height_bound_bits)
    : base_(base), ell_(ell), n_max_(n_max), height_bound_(height_bound_bits) {
    require_odd_prime(ell);
    switch (base_.kind) {
        case BaseKind::Rationals:
            if (base_.conductor != 1 || base_.D != 0)
                throw InvalidConfig("rational base must carry conductor one");
            base_degree_ = 1;
            break;
        case BaseKind::RealQuadratic:
            if (base_.D < 5 || !is_fundamental_discriminant(base_.D) ||
                base_.conductor != static_cast<unsigned long>(base_.D))
                throw InvalidConfig("quadratic base must carry its own discriminant");
            base_degree_ = 2;
            break;
        case BaseKind::RealCyclotomic: {
            unsigned long c = base_.conductor;
            unsigned e = 0;
            while (c % ell == 0) {
                c /= ell;
                ++e;
            }
            if (c != 1 || e < 2)
                throw InvalidConfig(
                    "real cyclotomic base conductor must be ell^e with e >= 2");
            base_degree_ = euler_phi(base_.conductor) / 2;
            break;
        }
    }

    fprime_ = base_.conductor;
    unsigned e = 0;
    while (fprime_ % ell == 0) {
        fprime_ /= ell;
        ++e;
    }
    ell_exp_floor_ = std::max(e, 1u);

    for (unsigned n = 0; n <= n_max_; ++n) {
        const unsigned m = ell_exp_floor_ + n;
        const uint64_t ellpart = pow_u(ell, m);
        if (ellpart > kModulusCap / fprime_)
            throw ConductorOverflow("layer modulus exceeds the supported range");
        const unsigned long M = fprime_ * ellpart;

        std::vector<uint64_t> H;
        for (uint64_t a : units_mod(M))
            if (base_fixes(a, M) && pow_mod_u64(a % ellpart, ell - 1, ellpart) == 1)
                H.push_back(a);
        layers_.push_back(AbelianField::from_subgroup(M, std::move(H)));
        const AbelianField& F = layers_.back();
        if (F.degree() != base_degree_ * pow_u(ell, n))
            throw Anomaly("tower layer has unexpected degree");
        if (!F.totally_real()) throw Anomaly("tower layer is not totally real");

        uint64_t g;
        const uint64_t one_plus = (1 + pow_u(ell, ell_exp_floor_)) % ellpart;
        if (fprime_ == 1) {
            g = one_plus;
        } else {
            // CRT: g = 1 mod fprime_, g = one_plus mod ellpart
            const uint64_t inv_f = inv_mod_u64(fprime_ % ellpart, ellpart);
            const uint64_t delta = (one_plus + ellpart - 1) % ellpart;
            const uint64_t s = mul_mod(delta, inv_f, ellpart);
            g = (1 + fprime_ * s) % M;
        }
        if (g % fprime_ != 1 % fprime_ || g % ellpart != one_plus % ellpart)
            throw Anomaly("tower generator fails its congruences");
        if (!base_fixes(g, M)) throw Anomaly("tower generator moves the base field");
        const auto& Hn = F.fixing_subgroup();
        auto in_H = [&](uint64_t x) {
            return std::binary_search(Hn.begin(), Hn.end(), x);
        };
        if (!in_H(pow_mod_u64(g, pow_u(ell, n), M)))
            throw Anomaly("tower generator order exceeds the layer degree");
        if (n > 0 && in_H(pow_mod_u64(g, pow_u(ell, n - 1), M)))
            throw Anomaly("tower generator order falls short of the layer degree");
        if (n > 0 && g % layers_[n - 1].modulus() != gammas_[n - 1])
            throw Anomaly("tower generators are not reduction compatible");
        gammas_.push_back(g);
    }
}

unsigned long TowerContext::layer_modulus(unsigned n) const {
    return layer(n).modulus();
}

const AbelianField& TowerContext::layer(unsigned n) const {
    if (n > n_max_) throw InvalidConfig("layer index exceeds the tower height");
    return layers_[n];
}

uint64_t TowerContext::gamma(unsigned n) const {
    if (n > n_max_) throw InvalidConfig("layer index exceeds the tower height");
    return gammas_[n];
}

bool TowerContext::base_fixes(uint64_t a, unsigned long M) const {
    switch (base_.kind) {
        case BaseKind::Rationals:
            return true;
        case BaseKind::RealQuadratic:
            return kronecker(mpz_class(base_.D), mpz_class(a)) == 1;
        case BaseKind::RealCyclotomic: {
            const uint64_t r = a % base_.conductor;
            (void)M;
            return r == 1 || r == base_.conductor - 1;
        }
    }
    throw Anomaly("unhandled base kind");
}

void TowerContext::check_height(const CycloElt& x) const {
    if (x.height_bits() > height_bound_)
        throw HeightOverflow("coefficient height exceeds the configured bound");
}

CycloElt TowerContext::lift(const CycloElt& x, unsigned from, unsigned to) const {
    if (from > to) throw InvalidConfig("lift goes from a lower layer to a higher one");
    if (x.ring().conductor() != layer(from).modulus())
        throw InvalidConfig("element does not live in the source layer ring");
    CycloElt y = lift_to_ring(x, layer(to).ambient());
    check_height(y);
    return y;
}

CycloElt TowerContext::norm_down(const CycloElt& x, unsigned at, unsigned from,
                                 unsigned to) const {
    if (to > from || from > at || at > n_max_)
        throw InvalidConfig("norm layers must satisfy to <= from <= at");
    const unsigned long M = layer(at).modulus();
    if (x.ring().conductor() != M)
        throw InvalidConfig("element does not live in the stated ambient ring");
    // membership first: the group fixing the source layer is generated by
    // the ambient fixing subgroup together with gamma^(ell^from)
    for (uint64_t g : layer(at).subgroup_generators())
        if (!(x.galois(g) == x))
            throw InvalidConfig("norm input is not fixed by the claimed layer group");
    if (from < at) {
        const uint64_t tower_gen = pow_mod_u64(gammas_[at], pow_u(ell_, from), M);
        if (!(x.galois(tower_gen) == x))
            throw InvalidConfig("norm input is not fixed by the claimed layer group");
    }
    const uint64_t count = pow_u(ell_, from - to);
    if (count == 1) return x;
    const uint64_t step = pow_mod_u64(gammas_[at], pow_u(ell_, to), M);
    CycloElt acc = x;
    CycloElt cur = x;
    for (uint64_t t = 1; t < count; ++t) {
        cur = cur.galois(step);
        acc = acc * cur;
        check_height(acc);
    }
    return acc;
}

std::vector<uint64_t> TowerContext::fixing_subgroup_at(unsigned at,
                                                       unsigned j) const {
    if (j > at || at > n_max_)
        throw InvalidConfig("fixing subgroup needs j <= at within the tower");
    const unsigned long M = layer(at).modulus();
    const uint64_t ellpart = pow_u(ell_, ell_exp_floor_ + at);
    const uint64_t expo = (ell_ - 1) * pow_u(ell_, at - j);
    std::vector<uint64_t> H;
    for (uint64_t a : units_mod(M))
        if (base_fixes(a, M) && pow_mod_u64(a % ellpart, expo, ellpart) == 1)
            H.push_back(a);
    return H;
}

CycloElt TowerContext::embed_base(const FieldElt& x, unsigned at) const {
    const auto ring = layer(at).ambient();
    CycloElt y = CycloElt::zero(ring);
    if (const auto* q = std::get_if<mpq_class>(&x.v)) {
        y = CycloElt::from_rational(ring, *q);
    } else if (const auto* u = std::get_if<QuadElt>(&x.v)) {
        if (base_.kind != BaseKind::RealQuadratic || u->D != base_.D)
            throw InvalidConfig("quadratic element does not match the base field");
        const CycloElt g = gauss_sum_sqrt(ring, base_.D);
        y = CycloElt::from_rational(ring, u->a) + g * u->b;
    } else {
        const CycloElt& c = std::get<CycloElt>(x.v);
        if (base_.kind != BaseKind::RealCyclotomic ||
            c.ring().conductor() != base_.conductor)
            throw InvalidConfig("cyclotomic element does not match the base field");
        y = lift_to_ring(c, ring);
    }
    check_height(y);
    return y;
}

FieldElt TowerContext::to_base(const CycloElt& y, unsigned at) const {
    if (y.ring().conductor() != layer(at).modulus())
        throw InvalidConfig("element does not live in the stated ambient ring");
    switch (base_.kind) {
        case BaseKind::Rationals: {
            if (!y.is_rational())
                throw InvalidConfig("element is not rational");
            return FieldElt::rational(y.rational_value());
        }
        case BaseKind::RealQuadratic: {
            const QuadCoords c = extract_quadratic(y, base_.D);
            return FieldElt::quad(QuadElt(base_.D, c.a, c.b));
        }
        case BaseKind::RealCyclotomic: {
            const std::vector<mpq_class> c = express_in_power_basis(
                y, base_theta(at), static_cast<int>(base_degree_));
            const auto ring0 = CycloRing::get(base_.conductor);
            const CycloElt t0 =
                CycloElt::zeta_pow(ring0, 1) + CycloElt::zeta_pow(ring0, -1);
            CycloElt acc = CycloElt::from_rational(ring0, c[0]);
            CycloElt pw = CycloElt::one(ring0);
            for (size_t i = 1; i < c.size(); ++i) {
                pw = pw * t0;
                acc = acc + pw * c[i];
            }
            return FieldElt::cyclo(acc);
        }
    }
    throw Anomaly("unhandled base kind");
}

CycloElt TowerContext::base_theta(unsigned at) const {
    if (base_.kind != BaseKind::RealCyclotomic)
        throw InvalidConfig("power basis generator requires a real cyclotomic base");
    const auto ring = layer(at).ambient();
    const long k = static_cast<long>(layer(at).modulus() / base_.conductor);
    return CycloElt::zeta_pow(ring, k) + CycloElt::zeta_pow(ring, -k);
}

// ---------------------------------------------------------------------------
// S-units
// ---------------------------------------------------------------------------

namespace {

// basis of { v : A v = 0 } over the integers, by unimodular column reduction
std::vector<std::vector<mpz_class>> integer_kernel(
    std::vector<std::vector<mpz_class>> A, size_t cols) {
    const size_t rows = A.size();
    for (const auto& row : A)
        if (row.size() != cols) throw Anomaly("kernel matrix is ragged");
    std::vector<std::vector<mpz_class>> U(cols,
                                          std::vector<mpz_class>(cols, 0));
    for (size_t i = 0; i < cols; ++i) U[i][i] = 1;
    auto swap_cols = [&](size_t x, size_t y) {
        if (x == y) return;
        for (size_t r = 0; r < rows; ++r) std::swap(A[r][x], A[r][y]);
        for (size_t i = 0; i < cols; ++i) std::swap(U[i][x], U[i][y]);
    };
    size_t pivot = 0;
    for (size_t r = 0; r < rows && pivot < cols; ++r) {
        while (true) {
            size_t j1 = SIZE_MAX, j2 = SIZE_MAX;
            for (size_t c = pivot; c < cols; ++c)
                if (A[r][c] != 0) {
                    if (j1 == SIZE_MAX) {
                        j1 = c;
                    } else {
                        j2 = c;
                        break;
                    }
                }
            if (j2 == SIZE_MAX) break;
            if (abs(A[r][j1]) > abs(A[r][j2])) swap_cols(j1, j2);
            const mpz_class q = A[r][j2] / A[r][j1];
            for (size_t rr = 0; rr < rows; ++rr) A[rr][j2] -= q * A[rr][j1];
            for (size_t i = 0; i < cols; ++i) U[i][j2] -= q * U[i][j1];
        }
        size_t jnz = SIZE_MAX;
        for (size_t c = pivot; c < cols; ++c)
            if (A[r][c] != 0) {
                jnz = c;
                break;
            }
        if (jnz != SIZE_MAX) {
            swap_cols(jnz, pivot);
            ++pivot;
        }
    }
    std::vector<std::vector<mpz_class>> basis;
    for (size_t c = pivot; c < cols; ++c) {
        for (size_t r = 0; r < rows; ++r)
            if (A[r][c] != 0) throw Anomaly("kernel column is not annihilated");
        std::vector<mpz_class> v(cols);
        for (size_t i = 0; i < cols; ++i) v[i] = U[i][c];
        basis.push_back(std::move(v));
    }
    return basis;
}

struct QuadPlace {
    unsigned long q = 0;
    int chi = 0;       // Kronecker symbol (D|q)
    int place = 0;     // local place index used by quad_valuation
    bool inert = false;
    QuadIdeal P;                // valid unless inert
    std::vector<long> coords;   // wide class coordinates
    unsigned long ord = 1;      // order of the wide class
};

UnitLattice s_units_quadratic(long D, unsigned long ell,
                              const std::vector<unsigned long>& S) {
    QuadraticFieldData data = quadratic_field_data(D);
    const std::vector<unsigned long>& fac = data.classes.wide_factors;
    const size_t r = fac.size();

    std::vector<QuadPlace> places;
    for (unsigned long q : S) {
        const int chi = kronecker(mpz_class(D), mpz_class(q));
        if (chi == -1) {
            QuadPlace pl;
            pl.q = q;
            pl.chi = chi;
            pl.inert = true;
            pl.coords.assign(r, 0);
            places.push_back(std::move(pl));
            continue;
        }
        const QuadIdeal P = prime_ideal(D, q);
        const int nplaces = (chi == 1) ? 2 : 1;
        for (int j = 0; j < nplaces; ++j) {
            QuadPlace pl;
            pl.q = q;
            pl.chi = chi;
            pl.place = j;
            pl.P = (j == 0) ? P : ideal_conj(P);
            pl.coords = wide_class_coords(data.classes, pl.P);
            unsigned long ord = 1;
            for (size_t k = 0; k < r; ++k) {
                const unsigned long d = fac[k];
                const unsigned long c =
                    static_cast<unsigned long>((pl.coords[k] % static_cast<long>(d) +
                                                static_cast<long>(d)) %
                                               static_cast<long>(d));
                const unsigned long o = d / gcd_u(d, c == 0 ? d : c);
                ord = ord / gcd_u(ord, o) * o;
            }
            pl.ord = ord;
            places.push_back(std::move(pl));
        }
    }

    const size_t k = places.size();
    std::vector<std::vector<mpz_class>> A(r, std::vector<mpz_class>(k + r, 0));
    for (size_t j = 0; j < r; ++j) {
        for (size_t i = 0; i < k; ++i) A[j][i] = places[i].coords[j];
        A[j][k + j] = fac[j];
    }
    std::vector<std::vector<mpz_class>> ker =
        integer_kernel(std::move(A), k + r);
    if (ker.size() != k) throw Anomaly("place kernel has unexpected rank");

    UnitLattice L;
    L.gens.push_back(FieldElt::quad(QuadElt(D, -1, 0)));
    L.gens.push_back(FieldElt::quad(data.eps));
    for (const auto& kv : ker) {
        std::vector<mpz_class> v(kv.begin(), kv.begin() + k);
        // the congruences hold by construction; recheck them exactly
        for (size_t j = 0; j < r; ++j) {
            mpz_class acc = 0;
            for (size_t i = 0; i < k; ++i) acc += v[i] * places[i].coords[j];
            if (acc % fac[j] != 0)
                throw Anomaly("kernel vector violates its class congruence");
        }
        // shift into the nonnegative orthant using per-place class orders
        std::vector<mpz_class> shift(k, 0);
        std::vector<mpz_class> vp = v;
        for (size_t i = 0; i < k; ++i)
            if (vp[i] < 0) {
                const mpz_class m =
                    (-vp[i] + places[i].ord - 1) / places[i].ord;
                shift[i] = m;
                vp[i] += m * places[i].ord;
            }
        // ideal products in this layer strip rational content, so split the
        // exponent vector by hand: per prime q, the content is q^min over a
        // split pair, q^floor(e/2) at a ramified place, q^e at an inert one;
        // what remains is a product of coprime primitive prime powers
        std::vector<mpz_class> red = vp;
        mpq_class rational_part = 1;
        for (size_t i = 0; i < k; ++i) {
            mpz_class content = 0;
            if (places[i].inert) {
                content = red[i];
                red[i] = 0;
            } else if (places[i].chi == 0) {
                content = red[i] / 2;
                red[i] %= 2;
            } else if (places[i].place == 0) {
                size_t ic = i + 1; // the conjugate place follows its partner
                content = std::min(red[i], red[ic]);
                red[i] -= content;
                red[ic] -= content;
            } else {
                continue; // handled with its partner
            }
            if (content != 0) {
                if (!content.fits_ulong_p())
                    throw BoundExceeded("place exponent exceeds the supported range");
                rational_part *= mpq_class(pow_z(places[i].q, content.get_ui()));
            }
        }
        bool has_ideal = false;
        QuadIdeal J;
        for (size_t i = 0; i < k; ++i) {
            if (red[i] == 0) continue;
            if (!red[i].fits_ulong_p())
                throw BoundExceeded("place exponent exceeds the supported range");
            const QuadIdeal Pe = ideal_pow(places[i].P, red[i].get_ui());
            J = has_ideal ? ideal_mul(J, Pe) : Pe;
            has_ideal = true;
        }
        QuadElt x = has_ideal ? principalize(J) : QuadElt(D, 1, 0);
        x = x * QuadElt(D, rational_part, 0);
        for (size_t i = 0; i < k; ++i) {
            if (shift[i] == 0) continue;
            if (!shift[i].fits_slong_p())
                throw BoundExceeded("place exponent exceeds the supported range");
            QuadElt pi(D, mpq_class(places[i].q), 0);
            if (!places[i].inert) {
                if (places[i].chi == 0) {
                    if (places[i].ord > 2)
                        throw Anomaly("ramified class order exceeds two");
                    pi = (places[i].ord == 1)
                             ? principalize(places[i].P)
                             : QuadElt(D, mpq_class(places[i].q), 0);
                } else {
                    pi = principalize(ideal_pow(places[i].P, places[i].ord));
                }
            }
            x = x * pi.pow(-shift[i].get_si());
        }
        // exact valuation check at every place of S
        for (size_t i = 0; i < k; ++i) {
            if (!v[i].fits_slong_p())
                throw BoundExceeded("place exponent exceeds the supported range");
            if (quad_valuation(x, places[i].q, places[i].place) != v[i].get_si())
                throw Anomaly("S-unit generator has wrong valuations");
        }
        L.gens.push_back(FieldElt::quad(x));
    }
    (void)ell;
    return L;
}

UnitLattice s_units_real_cyclotomic(unsigned long conductor, unsigned long ell,
                                    const std::vector<unsigned long>& S) {
    if (ell != 3 || (conductor != 9 && conductor != 27 && conductor != 81))
        throw UnsupportedField(
            "real cyclotomic S-units are supported for conductors 9, 27, 81 at "
            "ell 3, where the class number is one");
    if (S.size() != 1)
        throw UnsupportedField(
            "real cyclotomic S-units are supported only at the ell-places");
    const auto ring = CycloRing::get(conductor);
    const AbelianField F = AbelianField::real_cyclotomic(conductor);
    const CycloElt eta = CycloElt::one_minus_zeta(ring, 1) *
                         CycloElt::one_minus_zeta(ring, -1);
    UnitLattice L;
    L.gens.push_back(FieldElt::cyclo(CycloElt::from_rational(ring, mpq_class(-1))));
    for (uint64_t d : F.galois_reps())
        L.gens.push_back(FieldElt::cyclo(eta.galois(d)));
    return L;
}

} // namespace

UnitLattice s_units(const BaseField& K, unsigned long ell,
                    std::vector<unsigned long> S) {
    require_odd_prime(ell);
    std::sort(S.begin(), S.end());
    S.erase(std::unique(S.begin(), S.end()), S.end());
    if (!std::binary_search(S.begin(), S.end(), ell))
        throw InvalidConfig("the support must contain ell");
    for (unsigned long q : S)
        if (!is_prime_u64(q)) throw InvalidConfig("support must consist of primes");

    UnitLattice L;
    switch (K.kind) {
        case BaseKind::Rationals: {
            L.gens.push_back(FieldElt::rational(mpq_class(-1)));
            for (unsigned long q : S)
                L.gens.push_back(FieldElt::rational(mpq_class(q)));
            break;
        }
        case BaseKind::RealQuadratic:
            L = s_units_quadratic(K.D, ell, S);
            break;
        case BaseKind::RealCyclotomic:
            L = s_units_real_cyclotomic(K.conductor, ell, S);
            break;
    }
    L.kind = (S.size() == 1) ? LatticeKind::EllUnits : LatticeKind::SUnits;
    L.torsion_order = 2;
    L.exact = true;
    L.support = std::move(S);
    L.field = K;
    return L;
}

unsigned lattice_rank(const UnitLattice& L) {
    if (!L.exponents.empty()) return static_cast<unsigned>(L.exponents.size());
    unsigned r = 0;
    for (const FieldElt& g : L.gens)
        if (!fe_is_pm_one(g)) ++r;
    return r;
}

// ---------------------------------------------------------------------------
// Circular numbers
// ---------------------------------------------------------------------------

std::vector<CycloElt> circular_generators(const TowerContext& T, unsigned n) {
    const AbelianField& F = T.layer(n);
    const unsigned long M = F.modulus();
    const auto ring = F.ambient();
    std::vector<CycloElt> out;
    auto push_unique = [&](const CycloElt& x) {
        for (const CycloElt& y : out)
            if (y == x) return;
        if (x.height_bits() > T.height_bound_bits())
            throw HeightOverflow("circular number exceeds the height bound");
        out.push_back(x);
    };
    for (uint64_t d : divisors(M)) {
        if (d < 2) continue;
        if (d == 2) {
            // 1 - zeta_2 = 2
            push_unique(CycloElt::from_rational(ring, mpq_class(2)));
            continue;
        }
        std::set<uint64_t> C;
        for (uint64_t h : F.fixing_subgroup()) C.insert(h % d);
        std::set<uint64_t> covered;
        for (uint64_t a : units_mod(d)) {
            if (covered.count(a)) continue;
            std::vector<uint64_t> coset;
            for (uint64_t c : C) {
                const uint64_t s = mul_mod(a, c, d);
                coset.push_back(s);
                covered.insert(s);
            }
            const CycloElt g = subgroup_norm_product(d, coset);
            if (g.is_rational()) {
                const mpq_class v = g.rational_value();
                if (v == 1 || v == -1) continue;
                push_unique(CycloElt::from_rational(ring, v));
            } else {
                push_unique(lift_to_ring(g, ring));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundled quadratic data
// ---------------------------------------------------------------------------

QuadraticFieldData quadratic_field_data(long D) {
    QuadraticFieldData out;
    out.D = D;
    out.eps = fundamental_unit(D);
    out.unit_norm = (out.eps.norm() == -1) ? -1 : 1;
    out.classes = class_group_bqf(D);
    return out;
}

} // namespace lognorm
