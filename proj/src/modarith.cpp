#include "ckks32/modarith.hpp"

#include <stdexcept>

namespace ckks32 {

bool is_prime_u64(uint64_t v) {
  if (v < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                     29ull, 31ull, 37ull}) {
    if (v % p == 0) return v == p;
  }
  uint64_t d = v - 1;
  int s = 0;
  while ((d & 1) == 0) d >>= 1, ++s;
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                     29ull, 31ull, 37ull}) {
    uint64_t x = pow_mod(a, d, v);
    if (x == 1 || x == v - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = static_cast<uint64_t>((static_cast<unsigned __int128>(x) * x) % v);
      if (x == v - 1) { composite = false; break; }
    }
    if (composite) return false;
  }
  return true;
}

uint32_t find_root_2n(uint32_t q, uint32_t n) {
  const uint64_t order = 2ull * n;
  if ((q - 1) % order != 0) throw std::invalid_argument("q not NTT-friendly for n");
  const uint64_t cof = (q - 1) / order;
  for (uint64_t g = 2; g < q; ++g) {
    uint64_t cand = pow_mod(g, cof, q);
    // primitive 2N-th root iff cand^N = -1
    if (pow_mod(cand, n, q) == q - 1) return static_cast<uint32_t>(cand);
  }
  throw std::runtime_error("no primitive 2N-th root found");
}

PrimeContext make_prime_context(uint32_t q, uint32_t n) {
  if (q >= (1u << 31) || (q & 1) == 0) throw std::invalid_argument("bad modulus");
  PrimeContext c;
  c.q = q;
  // Newton iteration for q^{-1} mod 2^32.
  uint32_t inv = q;
  for (int i = 0; i < 5; ++i) inv *= 2u - q * inv;
  c.m = static_cast<int32_t>(inv);
  c.r2 = static_cast<uint32_t>(((static_cast<unsigned __int128>(1) << 64) % q));
  c.n = n;
  c.n_inv_r = n ? static_cast<uint32_t>(inv_mod(n % q, q)) : 0;
  return c;
}

}  // namespace ckks32
