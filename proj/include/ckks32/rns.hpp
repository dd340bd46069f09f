#pragma once

// Prime generation, RNS basis management, and a big-integer CRT oracle.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ckks32/modarith.hpp"

namespace ckks32 {

using BigInt = boost::multiprecision::cpp_int;

struct BasisExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RnsBasis {
  uint32_t n = 0;
  uint32_t delta_bits = 0;
  std::vector<PrimeContext> q_primes;  // L entries, delta groups (2g, 2g+1)
  std::vector<PrimeContext> p_primes;  // alpha entries

  size_t l() const { return q_primes.size(); }
  size_t alpha() const { return p_primes.size(); }

  // Global prime index: rows [0, L) are Q, rows [L, L+alpha) are P.
  const PrimeContext& prime(size_t global_idx) const {
    return global_idx < q_primes.size()
               ? q_primes[global_idx]
               : p_primes[global_idx - q_primes.size()];
  }

  uint64_t hash() const;  // FNV over (n, delta_bits, primes)
};

// Deterministic basis construction. Q primes are paired into delta groups
// with product close to 2^delta_bits; P primes are the largest admissible.
// Throws BasisExhausted when the admissible window has too few primes.
std::shared_ptr<const RnsBasis> generate_basis(uint32_t n, uint32_t l,
                                               uint32_t alpha,
                                               uint32_t delta_bits);

// CRT over an arbitrary prime list (test oracle; exact big-integer path).
class CrtContext {
 public:
  explicit CrtContext(std::span<const PrimeContext> primes);

  const BigInt& modulus() const { return modulus_; }
  // residues canonical, one per prime, -> value in [0, modulus)
  BigInt reconstruct(std::span<const uint32_t> residues) const;
  std::vector<uint32_t> decompose(const BigInt& value) const;

 private:
  std::vector<uint32_t> primes_;
  BigInt modulus_;
  std::vector<BigInt> lift_;  // (M/q_i) * ((M/q_i)^{-1} mod q_i)
};

// Basis serialization: header (magic, version, n, l, alpha, delta_bits)
// followed by little-endian u32 primes, Q order then P order.
std::vector<uint8_t> serialize_basis(const RnsBasis& basis);
std::shared_ptr<const RnsBasis> deserialize_basis(std::span<const uint8_t> bytes);

}  // namespace ckks32
