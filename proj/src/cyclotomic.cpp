#include "lognorm/cyclotomic.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <mutex>

namespace lognorm {

namespace {

constexpr unsigned long kConductorLimit = 200000;
constexpr size_t kHeightBitLimit = 3600000; // ~2^20 decimal digits

// quotient-free reduction of w (any length) by a monic integer polynomial
template <typename T>
void reduce_mod_monic(std::vector<T>& w, const std::vector<mpz_class>& phi) {
    const size_t deg = phi.size() - 1;
    for (size_t j = w.size(); j-- > deg;) {
        if (w[j] == 0) continue;
        T t = w[j];
        w[j] = 0;
        for (size_t i = 0; i < deg; ++i) {
            if (phi[i] != 0) w[j - deg + i] -= t * phi[i];
        }
    }
    w.resize(deg);
}

// exact division of polynomials over Z, divisor monic; remainder asserted 0
std::vector<mpz_class> exact_div_monic(std::vector<mpz_class> num,
                                       const std::vector<mpz_class>& den) {
    const size_t dd = den.size() - 1;
    if (num.size() < den.size()) throw InvalidConfig("polynomial division underflow");
    std::vector<mpz_class> quot(num.size() - dd);
    for (size_t j = num.size(); j-- > dd;) {
        mpz_class t = num[j];
        if (t == 0) continue;
        quot[j - dd] = t;
        for (size_t i = 0; i <= dd; ++i) {
            if (den[i] != 0) num[j - dd + i] -= t * den[i];
        }
    }
    for (const auto& c : num)
        if (c != 0) throw InvalidConfig("inexact polynomial division");
    return quot;
}

std::mutex g_phi_mutex;
std::map<unsigned long, std::vector<mpz_class>> g_phi_cache;

std::vector<mpz_class> cyclotomic_poly_unlocked(unsigned long M) {
    auto it = g_phi_cache.find(M);
    if (it != g_phi_cache.end()) return it->second;
    std::vector<mpz_class> result;
    if (M == 1) {
        result = {mpz_class(-1), mpz_class(1)};
    } else {
        // x^M - 1 divided by the product of Phi_d over proper divisors d
        std::vector<mpz_class> num(M + 1);
        num[0] = -1;
        num[M] = 1;
        for (uint64_t d : divisors(M)) {
            if (d == M) continue;
            num = exact_div_monic(std::move(num), cyclotomic_poly_unlocked(d));
        }
        result = std::move(num);
    }
    g_phi_cache.emplace(M, result);
    return result;
}

std::mutex g_ring_mutex;
std::map<unsigned long, std::shared_ptr<const CycloRing>> g_ring_cache;

} // namespace

std::vector<mpz_class> cyclotomic_poly(unsigned long M) {
    if (M == 0 || M > kConductorLimit)
        throw ConductorOverflow("conductor out of supported range");
    std::lock_guard<std::mutex> lock(g_phi_mutex);
    return cyclotomic_poly_unlocked(M);
}

CycloRing::CycloRing(unsigned long M) : M_(M) {
    phi_poly_ = cyclotomic_poly(M);
    phi_ = phi_poly_.size() - 1;
}

std::shared_ptr<const CycloRing> CycloRing::get(unsigned long M) {
    std::lock_guard<std::mutex> lock(g_ring_mutex);
    auto it = g_ring_cache.find(M);
    if (it != g_ring_cache.end()) return it->second;
    auto ring = std::shared_ptr<const CycloRing>(new CycloRing(M));
    g_ring_cache.emplace(M, ring);
    return ring;
}

std::vector<mpz_class> CycloRing::reduce_redundant(std::vector<mpz_class> w) const {
    if (w.size() != M_) throw InvalidConfig("redundant vector has wrong length");
    if (w.size() < phi_poly_.size()) w.resize(phi_poly_.size());
    reduce_mod_monic(w, phi_poly_);
    return w;
}

std::vector<mpq_class> CycloRing::reduce_redundant(std::vector<mpq_class> w) const {
    if (w.size() != M_) throw InvalidConfig("redundant vector has wrong length");
    if (w.size() < phi_poly_.size()) w.resize(phi_poly_.size());
    reduce_mod_monic(w, phi_poly_);
    return w;
}

CycloElt::CycloElt(std::shared_ptr<const CycloRing> ring, std::vector<mpq_class> c)
    : ring_(std::move(ring)), c_(std::move(c)) {
    if (c_.size() != ring_->degree())
        throw InvalidConfig("coefficient vector has wrong length");
    for (auto& q : c_) q.canonicalize();
}

CycloElt CycloElt::zero(std::shared_ptr<const CycloRing> ring) {
    std::vector<mpq_class> c(ring->degree());
    return CycloElt(std::move(ring), std::move(c));
}

CycloElt CycloElt::one(std::shared_ptr<const CycloRing> ring) {
    return from_rational(std::move(ring), 1);
}

CycloElt CycloElt::from_rational(std::shared_ptr<const CycloRing> ring,
                                 const mpq_class& q) {
    std::vector<mpq_class> c(ring->degree());
    c[0] = q;
    return CycloElt(std::move(ring), std::move(c));
}

CycloElt CycloElt::zeta_pow(std::shared_ptr<const CycloRing> ring, long k) {
    const long M = static_cast<long>(ring->conductor());
    long r = ((k % M) + M) % M;
    std::vector<mpq_class> w(ring->conductor());
    w[static_cast<size_t>(r)] = 1;
    auto red = ring->reduce_redundant(std::move(w));
    return CycloElt(std::move(ring), std::move(red));
}

CycloElt CycloElt::one_minus_zeta(std::shared_ptr<const CycloRing> ring, long k) {
    return from_rational(ring, 1) - zeta_pow(ring, k);
}

bool CycloElt::is_zero() const {
    for (const auto& q : c_)
        if (q != 0) return false;
    return true;
}

bool CycloElt::is_rational() const {
    for (size_t i = 1; i < c_.size(); ++i)
        if (c_[i] != 0) return false;
    return true;
}

mpq_class CycloElt::rational_value() const {
    if (!is_rational()) throw InvalidConfig("element is not rational");
    return c_[0];
}

CycloElt CycloElt::operator+(const CycloElt& o) const {
    if (ring_ != o.ring_) throw InvalidConfig("conductor mismatch");
    std::vector<mpq_class> c(c_);
    for (size_t i = 0; i < c.size(); ++i) c[i] += o.c_[i];
    return CycloElt(ring_, std::move(c));
}

CycloElt CycloElt::operator-(const CycloElt& o) const {
    if (ring_ != o.ring_) throw InvalidConfig("conductor mismatch");
    std::vector<mpq_class> c(c_);
    for (size_t i = 0; i < c.size(); ++i) c[i] -= o.c_[i];
    return CycloElt(ring_, std::move(c));
}

CycloElt CycloElt::operator*(const CycloElt& o) const {
    if (ring_ != o.ring_) throw InvalidConfig("conductor mismatch");
    const size_t n = c_.size();
    std::vector<mpq_class> conv(2 * n - 1);
    for (size_t i = 0; i < n; ++i) {
        if (c_[i] == 0) continue;
        for (size_t j = 0; j < n; ++j) {
            if (o.c_[j] == 0) continue;
            conv[i + j] += c_[i] * o.c_[j];
        }
    }
    reduce_mod_monic(conv, ring_->poly());
    return CycloElt(ring_, std::move(conv));
}

CycloElt CycloElt::operator*(const mpq_class& s) const {
    std::vector<mpq_class> c(c_);
    for (auto& q : c) q *= s;
    return CycloElt(ring_, std::move(c));
}

bool CycloElt::operator==(const CycloElt& o) const {
    return ring_ == o.ring_ && c_ == o.c_;
}

CycloElt CycloElt::galois(uint64_t a) const {
    const unsigned long M = ring_->conductor();
    a %= M;
    if (std::gcd(a, static_cast<uint64_t>(M)) != 1)
        throw InvalidConfig("galois index not coprime to conductor");
    std::vector<mpq_class> w(M);
    for (size_t i = 0; i < c_.size(); ++i) {
        if (c_[i] == 0) continue;
        w[(a * i) % M] += c_[i];
    }
    auto red = ring_->reduce_redundant(std::move(w));
    return CycloElt(ring_, std::move(red));
}

CycloElt CycloElt::pow(const mpz_class& e) const {
    if (e < 0) throw InvalidConfig("negative exponent in CycloElt::pow");
    CycloElt acc = one(ring_);
    CycloElt base = *this;
    mpz_class ee = e;
    while (ee != 0) {
        if (mpz_odd_p(ee.get_mpz_t())) acc = acc * base;
        mpz_fdiv_q_2exp(ee.get_mpz_t(), ee.get_mpz_t(), 1);
        if (ee != 0) base = base * base;
        if (acc.height_bits() > kHeightBitLimit)
            throw HeightOverflow("coefficient height exceeded in pow");
    }
    return acc;
}

namespace {

using QPoly = std::vector<mpq_class>; // coefficient vectors over Q

size_t qdeg(const QPoly& p) {
    size_t d = p.size();
    while (d > 0 && p[d - 1] == 0) --d;
    return d; // number of coefficients; zero poly -> 0
}

// division with remainder over Q; returns remainder, accumulates bezout:
// maintains s such that s*orig_elt == r (mod Phi)
void qdivstep(QPoly& r0, QPoly& s0, const QPoly& r1, const QPoly& s1) {
    size_t d1 = qdeg(r1);
    while (qdeg(r0) >= d1 && d1 > 0) {
        size_t d0 = qdeg(r0);
        mpq_class q = r0[d0 - 1] / r1[d1 - 1];
        size_t shift = d0 - d1;
        for (size_t i = 0; i < d1; ++i) r0[shift + i] -= q * r1[i];
        r0[d0 - 1] = 0;
        if (s0.size() < s1.size() + shift) s0.resize(s1.size() + shift);
        for (size_t i = 0; i < s1.size(); ++i) s0[shift + i] -= q * s1[i];
    }
}

} // namespace

CycloElt CycloElt::inv() const {
    if (is_zero()) throw NotInvertible("zero element in cyclotomic field");
    const auto& phi = ring_->poly();
    QPoly r0(phi.size()), s0{mpq_class(0)};
    for (size_t i = 0; i < phi.size(); ++i) r0[i] = phi[i];
    QPoly r1(c_.begin(), c_.end()), s1{mpq_class(1)};
    while (true) {
        qdivstep(r0, s0, r1, s1);
        if (qdeg(r0) == 0) { // remainder vanished: r1 is the gcd
            break;
        }
        std::swap(r0, r1);
        std::swap(s0, s1);
        if (qdeg(r1) == 1) break; // constant gcd reached
    }
    // gcd = r1 (nonzero since Phi is irreducible over Q)
    if (qdeg(r1) != 1)
        throw NotInvertible("non-constant gcd; element not invertible");
    mpq_class g = r1[0];
    std::vector<mpq_class> out(ring_->degree());
    for (size_t i = 0; i < s1.size() && i < out.size(); ++i) out[i] = s1[i] / g;
    // s1 may exceed basis length before reduction
    if (s1.size() > out.size()) {
        QPoly full(s1.begin(), s1.end());
        reduce_mod_monic(full, phi);
        for (size_t i = 0; i < out.size(); ++i) out[i] = full[i] / g;
    }
    CycloElt candidate(ring_, std::move(out));
    if (!((*this * candidate) == one(ring_)))
        throw NotInvertible("inverse verification failed");
    return candidate;
}

size_t CycloElt::height_bits() const {
    size_t h = 0;
    for (const auto& q : c_) {
        h = std::max(h, mpz_sizeinbase(q.get_num().get_mpz_t(), 2));
        h = std::max(h, mpz_sizeinbase(q.get_den().get_mpz_t(), 2));
    }
    return h;
}

CycloElt subgroup_norm_product(unsigned long d, const std::vector<uint64_t>& S) {
    if (d < 2) throw InvalidConfig("subgroup product needs conductor >= 2");
    auto ring = CycloRing::get(d);
    std::vector<mpz_class> w(d), tmp(d);
    w[0] = 1;
    for (uint64_t c : S) {
        uint64_t r = c % d;
        if (std::gcd(r, static_cast<uint64_t>(d)) != 1)
            throw InvalidConfig("product index not coprime to conductor");
        // tmp = w * (1 - zeta^r) in the redundant representation
        for (size_t i = 0; i < d; ++i) {
            size_t src = (i + d - r) % d;
            tmp[i] = w[i] - w[src];
        }
        std::swap(w, tmp);
    }
    size_t h = 0;
    for (const auto& z : w) h = std::max(h, mpz_sizeinbase(z.get_mpz_t(), 2));
    if (h > kHeightBitLimit)
        throw HeightOverflow("coefficient height exceeded in norm product");
    auto red = ring->reduce_redundant(std::move(w));
    std::vector<mpq_class> qs(red.begin(), red.end());
    return CycloElt(std::move(ring), std::move(qs));
}

CycloElt galois_norm_to_fixed_field(const CycloElt& x, const std::vector<uint64_t>& H) {
    CycloElt acc = CycloElt::one(x.ring_ptr());
    for (uint64_t h : H) acc = acc * x.galois(h);
    return acc;
}

mpq_class absolute_norm(const CycloElt& x) {
    if (x.ring().degree() == 1) return x.coeffs()[0];
    CycloElt n = galois_norm_to_fixed_field(x, units_mod(x.ring().conductor()));
    return n.rational_value();
}

CycloElt gauss_sum_sqrt(std::shared_ptr<const CycloRing> ring, long D) {
    if (D <= 0 || !is_fundamental_discriminant(D))
        throw InvalidConfig("gauss sum needs a positive fundamental discriminant");
    const unsigned long M = ring->conductor();
    if (M % static_cast<unsigned long>(D) != 0)
        throw InvalidConfig("discriminant does not divide conductor");
    const unsigned long step = M / static_cast<unsigned long>(D);
    std::vector<mpq_class> w(M);
    for (uint64_t c : units_mod(static_cast<uint64_t>(D))) {
        int chi = kronecker(mpz_class(D), mpz_class(c));
        w[(c * step) % M] += chi;
    }
    auto red = ring->reduce_redundant(std::move(w));
    return CycloElt(std::move(ring), std::move(red));
}

QuadCoords extract_quadratic(const CycloElt& y, long D) {
    auto ring = y.ring_ptr();
    const unsigned long M = ring->conductor();
    if (D <= 0 || M % static_cast<unsigned long>(D) != 0)
        throw InvalidConfig("discriminant does not divide conductor");
    // an automorphism acting as the nontrivial conjugation on Q(sqrt(D))
    uint64_t u = 0;
    for (uint64_t cand : units_mod(M)) {
        if (kronecker(mpz_class(D), mpz_class(cand % static_cast<uint64_t>(D))) == -1) {
            u = cand;
            break;
        }
    }
    if (u == 0) throw InvalidConfig("no conjugating automorphism found");
    CycloElt ybar = y.galois(u);
    CycloElt twice_a = y + ybar;
    if (!twice_a.is_rational())
        throw InvalidConfig("element is not in the quadratic subfield");
    mpq_class a = twice_a.rational_value() / 2;
    CycloElt diff = (y - ybar) * mpq_class(1, 2);
    mpq_class b = 0;
    if (!diff.is_zero()) {
        CycloElt g = gauss_sum_sqrt(ring, D);
        const auto& gc = g.coeffs();
        const auto& dc = diff.coeffs();
        size_t piv = gc.size();
        for (size_t i = 0; i < gc.size(); ++i) {
            if (gc[i] != 0) {
                piv = i;
                break;
            }
        }
        if (piv == gc.size()) throw InvalidConfig("degenerate gauss sum");
        b = dc[piv] / gc[piv];
        if (!(g * b == diff))
            throw InvalidConfig("element is not in the quadratic subfield");
    }
    return {a, b};
}

std::vector<mpq_class> express_in_power_basis(const CycloElt& y, const CycloElt& t,
                                              int deg) {
    if (deg < 1) throw InvalidConfig("basis degree must be positive");
    const size_t n = y.ring().degree();
    std::vector<CycloElt> pw;
    pw.reserve(deg);
    CycloElt cur = CycloElt::one(y.ring_ptr());
    for (int j = 0; j < deg; ++j) {
        pw.push_back(cur);
        if (j + 1 < deg) cur = cur * t;
    }
    // columns = powers, rows = cyclotomic coordinates; gaussian elimination
    std::vector<std::vector<mpq_class>> A(n, std::vector<mpq_class>(deg + 1));
    for (size_t i = 0; i < n; ++i) {
        for (int j = 0; j < deg; ++j) A[i][j] = pw[j].coeffs()[i];
        A[i][deg] = y.coeffs()[i];
    }
    size_t row = 0;
    std::vector<size_t> pivot_rows;
    for (int col = 0; col < deg && row < n; ++col) {
        size_t sel = n;
        for (size_t r = row; r < n; ++r) {
            if (A[r][col] != 0) {
                sel = r;
                break;
            }
        }
        if (sel == n) throw InvalidConfig("degenerate power basis");
        std::swap(A[row], A[sel]);
        for (size_t r = 0; r < n; ++r) {
            if (r == row || A[r][col] == 0) continue;
            mpq_class f = A[r][col] / A[row][col];
            for (int cc = col; cc <= deg; ++cc) A[r][cc] -= f * A[row][cc];
        }
        pivot_rows.push_back(row);
        ++row;
    }
    std::vector<mpq_class> b(deg);
    for (int col = 0; col < deg; ++col) b[col] = A[pivot_rows[col]][deg] / A[pivot_rows[col]][col];
    // exact verification
    CycloElt acc = CycloElt::zero(y.ring_ptr());
    for (int j = 0; j < deg; ++j) acc = acc + pw[j] * b[j];
    if (!(acc == y)) throw InvalidConfig("element is not in the power basis span");
    return b;
}

} // namespace lognorm
