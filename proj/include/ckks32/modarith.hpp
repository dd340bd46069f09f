#pragma once

// 32-bit prime-field arithmetic: signed Montgomery reduction with lazy
// output ranges, plus a slow wide-division reducer kept as a test oracle.

#include <cassert>
#include <cstdint>

namespace ckks32 {

struct PrimeContext {
  uint32_t q = 0;       // odd prime, q < 2^31, q ≡ 1 mod 2N
  int32_t m = 0;        // q^{-1} mod 2^32, reinterpreted signed
  uint32_t r2 = 0;      // 2^64 mod q
  uint32_t n_inv_r = 0; // N^{-1} mod q (plain), INTT exit constant
  uint32_t n = 0;       // ring degree this context was built for
};

// Signed Montgomery reduction: a * 2^-32 mod q, result in (-q, q).
// Valid for a in [-q*2^31, q*2^31); no final correction (lazy).
inline int32_t mont_reduce(int64_t a, const PrimeContext& c) {
  assert(a >= -(static_cast<int64_t>(c.q) << 31) &&
         a < (static_cast<int64_t>(c.q) << 31));
  auto a_hi = static_cast<int32_t>(a >> 32);
  auto a_lo = static_cast<uint32_t>(a);
  auto t = static_cast<int32_t>(a_lo * static_cast<uint32_t>(c.m));
  auto u = static_cast<int32_t>(
      (static_cast<int64_t>(t) * static_cast<int32_t>(c.q)) >> 32);
  return a_hi - u;
}

// a * b * 2^-32 mod q. Requires |a*b| < q*2^31; holds whenever both inputs
// lie in (-2q, 2q) (since q < 2^29) or both are canonical.
inline int32_t mont_mul(int32_t a, int32_t b, const PrimeContext& c) {
  return mont_reduce(static_cast<int64_t>(a) * b, c);
}

// Canonical representative in [0, q) of a lazy value in (-q, q).
inline uint32_t correct_lazy(int32_t a, uint32_t q) {
  assert(a > -static_cast<int64_t>(q) && a < static_cast<int64_t>(q));
  return a < 0 ? static_cast<uint32_t>(a + static_cast<int32_t>(q))
               : static_cast<uint32_t>(a);
}

// Canonical representative in [0, q) of any 64-bit value.
inline uint32_t correct(int64_t a, uint32_t q) {
  int64_t r = a % static_cast<int64_t>(q);
  if (r < 0) r += q;
  return static_cast<uint32_t>(r);
}

inline int64_t lazy_add(int64_t a, int64_t b) { return a + b; }

inline uint32_t to_mont(uint32_t a, const PrimeContext& c) {
  return correct_lazy(mont_reduce(static_cast<int64_t>(a) * c.r2, c), c.q);
}

inline uint32_t from_mont(int32_t a, const PrimeContext& c) {
  return correct_lazy(mont_reduce(static_cast<int64_t>(a), c), c.q);
}

// Test oracle: plain wide-division reduction.
inline uint32_t reference_reduce(int64_t a, uint32_t q) { return correct(a, q); }

inline uint64_t pow_mod(uint64_t base, uint64_t exp, uint64_t mod) {
  uint64_t acc = 1 % mod;
  base %= mod;
  while (exp) {
    if (exp & 1) acc = static_cast<uint64_t>((static_cast<unsigned __int128>(acc) * base) % mod);
    base = static_cast<uint64_t>((static_cast<unsigned __int128>(base) * base) % mod);
    exp >>= 1;
  }
  return acc;
}

inline uint64_t inv_mod(uint64_t a, uint64_t p) { return pow_mod(a, p - 2, p); }

PrimeContext make_prime_context(uint32_t q, uint32_t n);

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime_u64(uint64_t v);

// Deterministic primitive 2N-th root of unity mod q (q ≡ 1 mod 2N).
uint32_t find_root_2n(uint32_t q, uint32_t n);

}  // namespace ckks32
