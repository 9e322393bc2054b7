#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <vector>

#include "lognorm/errors.hpp"

namespace lognorm {

using std::int64_t;
using std::uint64_t;

// ---- small integer number theory -------------------------------------

bool is_prime_u64(uint64_t n);
std::vector<uint64_t> primes_up_to(uint64_t bound);

// multiplicative order of a modulo m (gcd(a,m)=1); throws InvalidConfig otherwise
uint64_t mult_order(uint64_t a, uint64_t m);

uint64_t euler_phi(uint64_t n);

// gcd(a,m)=1 units of Z/m, ascending
std::vector<uint64_t> units_mod(uint64_t m);

uint64_t pow_mod_u64(uint64_t b, uint64_t e, uint64_t m);
uint64_t inv_mod_u64(uint64_t a, uint64_t m); // throws NotInvertible

// ---- mpz helpers ------------------------------------------------------

mpz_class pow_z(const mpz_class& b, unsigned long e);
mpz_class pow_z(unsigned long b, unsigned long e);

// v_p(x) for x != 0; throws InvalidConfig on x == 0
long val_p(const mpz_class& x, const mpz_class& p);
long val_p(const mpq_class& x, const mpz_class& p);

// trial-division factorization; throws FactorizationIncomplete if a cofactor
// above bound^2 remains composite/unresolved
std::map<uint64_t, int> factor_u64(uint64_t n, uint64_t bound = 1000000);
std::map<uint64_t, int> factor_z(const mpz_class& n, uint64_t bound = 1000000);

// divisors of n, ascending
std::vector<uint64_t> divisors(uint64_t n);

// ---- quadratic discriminants ------------------------------------------

// true if D is a fundamental discriminant of a real quadratic field (D > 1)
bool is_fundamental_discriminant(int64_t D);

// squarefree kernel of the field: D = m or 4m with m squarefree
int64_t squarefree_part_of_discriminant(int64_t D);

// Kronecker symbol (D/n)
int kronecker(const mpz_class& D, const mpz_class& n);

} // namespace lognorm
