#pragma once

// Galois automorphism column permutation applied directly in the bit-reversed
// evaluation-domain layout, plus the coefficient-domain variant with
// negacyclic sign flips.

#include <cstdint>
#include <memory>
#include <vector>

#include "ckks32/poly.hpp"

namespace ckks32 {

class AutomorphismMap {
 public:
  // Rotation by r slots (Galois element 5^-r mod 2n acting on exponents).
  static AutomorphismMap rotation(uint32_t n, int64_t r);
  // Conjugation (Galois element 2n - 1).
  static AutomorphismMap conjugation(uint32_t n);

  uint32_t n() const { return n_; }
  int64_t r() const { return r_; }
  // Destination storage index of evaluation-domain column i: brev(phi(brev(i))).
  uint32_t dest(uint32_t i) const { return dest_[i]; }
  // Source storage index feeding output position p (gather form).
  uint32_t src(uint32_t p) const { return src_[p]; }
  // Coefficient-domain action a(X) -> a(X^(g^-1)) (same ring map as the
  // evaluation gather): coefficient k contributes +-a[k] at position
  // coeff_idx[k] with sign coeff_sign[k].
  uint32_t coeff_idx(uint32_t k) const { return coeff_idx_[k]; }
  int32_t coeff_sign(uint32_t k) const { return coeff_sign_[k]; }

 private:
  AutomorphismMap(uint32_t n, int64_t r, uint64_t galois_elt,
                  uint64_t galois_inv);
  uint32_t n_ = 0;
  int64_t r_ = 0;
  std::vector<uint32_t> dest_;
  std::vector<uint32_t> src_;
  std::vector<uint32_t> coeff_idx_;
  std::vector<int8_t> coeff_sign_;
};

// Destination index for one evaluation-domain position (slow path; the map
// caches the full permutation for hot use).
uint32_t map_index(uint32_t i, int64_t r, uint32_t n);

// Out-of-place gather (default; writes are contiguous). Works on either
// domain using the matching index rule.
Polynomial apply_automorphism(const Polynomial& p, const AutomorphismMap& map,
                              BufferPool* pool);
// In-place cycle-walk variant (evaluation domain only).
void apply_automorphism_inplace(Polynomial& p, const AutomorphismMap& map);

}  // namespace ckks32
