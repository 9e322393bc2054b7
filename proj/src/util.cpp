#include "lognorm/util.hpp"

#include <numeric>

namespace lognorm {

bool is_prime_u64(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    // deterministic Miller-Rabin for 64-bit range
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    auto mulmod = [](uint64_t a, uint64_t b, uint64_t m) -> uint64_t {
        return (uint64_t)((__uint128_t)a * b % m);
    };
    auto powmod = [&](uint64_t a, uint64_t e, uint64_t m) -> uint64_t {
        uint64_t r = 1;
        a %= m;
        while (e) {
            if (e & 1) r = mulmod(r, a, m);
            a = mulmod(a, a, m);
            e >>= 1;
        }
        return r;
    };
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

std::vector<uint64_t> primes_up_to(uint64_t bound) {
    std::vector<bool> sieve(bound + 1, true);
    std::vector<uint64_t> out;
    for (uint64_t p = 2; p <= bound; ++p) {
        if (!sieve[p]) continue;
        out.push_back(p);
        for (uint64_t q = p * p; q <= bound; q += p) sieve[q] = false;
    }
    return out;
}

uint64_t pow_mod_u64(uint64_t b, uint64_t e, uint64_t m) {
    uint64_t r = 1;
    b %= m;
    while (e) {
        if (e & 1) r = (uint64_t)((__uint128_t)r * b % m);
        b = (uint64_t)((__uint128_t)b * b % m);
        e >>= 1;
    }
    return r;
}

uint64_t inv_mod_u64(uint64_t a, uint64_t m) {
    int64_t t = 0, nt = 1;
    int64_t r = (int64_t)m, nr = (int64_t)(a % m);
    while (nr != 0) {
        int64_t q = r / nr;
        std::swap(t -= q * nt, nt);
        std::swap(r -= q * nr, nr);
    }
    if (r != 1) throw NotInvertible("inv_mod_u64: not invertible");
    return (uint64_t)(t < 0 ? t + (int64_t)m : t);
}

uint64_t mult_order(uint64_t a, uint64_t m) {
    if (m == 1) return 1;
    if (std::gcd(a % m, m) != 1) throw InvalidConfig("mult_order: gcd != 1");
    uint64_t ord = 1, x = a % m;
    while (x != 1) {
        x = (uint64_t)((__uint128_t)x * a % m);
        if (++ord > m) throw InvalidConfig("mult_order: runaway");
    }
    return ord;
}

uint64_t euler_phi(uint64_t n) {
    uint64_t r = n;
    for (auto& [p, e] : factor_u64(n)) {
        (void)e;
        r -= r / p;
    }
    return r;
}

std::vector<uint64_t> units_mod(uint64_t m) {
    std::vector<uint64_t> out;
    for (uint64_t a = m == 1 ? 0 : 1; a < m; ++a)
        if (std::gcd(a, m) == 1) out.push_back(a);
    if (m == 1) out.push_back(0); // the trivial group
    return out;
}

mpz_class pow_z(const mpz_class& b, unsigned long e) {
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

mpz_class pow_z(unsigned long b, unsigned long e) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), b, e);
    return r;
}

long val_p(const mpz_class& x, const mpz_class& p) {
    if (x == 0) throw InvalidConfig("val_p of 0");
    mpz_class r;
    return (long)mpz_remove(r.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
}

long val_p(const mpq_class& x, const mpz_class& p) {
    if (x == 0) throw InvalidConfig("val_p of 0");
    return val_p(x.get_num(), p) - val_p(x.get_den(), p);
}

std::map<uint64_t, int> factor_u64(uint64_t n, uint64_t bound) {
    if (n == 0) throw InvalidConfig("factor of 0");
    std::map<uint64_t, int> f;
    for (uint64_t p = 2; p * p <= n && p <= bound; p += (p == 2 ? 1 : 2)) {
        while (n % p == 0) { ++f[p]; n /= p; }
    }
    if (n > 1) {
        if (is_prime_u64(n)) {
            ++f[n];
        } else {
            throw FactorizationIncomplete("factor_u64: composite cofactor beyond bound");
        }
    }
    return f;
}

std::map<uint64_t, int> factor_z(const mpz_class& n, uint64_t bound) {
    mpz_class a = abs(n);
    if (a == 0) throw InvalidConfig("factor of 0");
    if (!a.fits_ulong_p()) {
        // trial divide first, then insist the rest fits
        std::map<uint64_t, int> f;
        for (uint64_t p = 2; p <= bound; p += (p == 2 ? 1 : 2)) {
            while (mpz_divisible_ui_p(a.get_mpz_t(), p)) {
                ++f[p];
                mpz_divexact_ui(a.get_mpz_t(), a.get_mpz_t(), p);
            }
            if (a == 1) return f;
        }
        if (a.fits_ulong_p() && is_prime_u64(a.get_ui())) {
            ++f[a.get_ui()];
            return f;
        }
        throw FactorizationIncomplete("factor_z: operand too large");
    }
    return factor_u64(a.get_ui(), bound);
}

std::vector<uint64_t> divisors(uint64_t n) {
    std::vector<uint64_t> out{1};
    for (auto& [p, e] : factor_u64(n)) {
        size_t base = out.size();
        uint64_t pk = 1;
        for (int i = 1; i <= e; ++i) {
            pk *= p;
            for (size_t j = 0; j < base; ++j) out.push_back(out[j] * pk);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool is_fundamental_discriminant(int64_t D) {
    if (D <= 1) return false;
    auto squarefree = [](uint64_t n) {
        for (auto& [p, e] : factor_u64(n))
            if (e >= 2) return false;
        return true;
    };
    if (D % 4 == 1) return squarefree((uint64_t)D);
    if (D % 4 == 0) {
        int64_t m = D / 4;
        int64_t r = m % 4;
        return (r == 2 || r == 3) && squarefree((uint64_t)m);
    }
    return false;
}

int64_t squarefree_part_of_discriminant(int64_t D) {
    return (D % 4 == 0) ? D / 4 : D;
}

int kronecker(const mpz_class& D, const mpz_class& n) {
    return mpz_kronecker(D.get_mpz_t(), n.get_mpz_t());
}

} // namespace lognorm
