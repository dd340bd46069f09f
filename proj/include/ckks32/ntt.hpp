#pragma once

// Negacyclic NTT/INTT per limb: parameterized two-pass radix-2 decomposition
// (column pass, then row pass) with merged Montgomery entry/exit transitions
// and optional on-the-fly twiddle generation for the row pass.
//
// Conventions (fixed across all plans, so every valid plan is bit-identical):
//  - forward: DIF, output in bit-reversed order, Montgomery form;
//    out[brev(j)] = sum_k a[k] * psi^((2j+1)k)
//  - inverse: Gentleman-Sande DIT consuming bit-reversed order; exit stage
//    carries the merged N^{-1} constants and removes Montgomery form.
//  - butterfly outputs are kept lazy in (-2q, 2q) with one conditional +-2q
//    correction; the final global stage tightens to (-q, q).

#include <cstdint>
#include <memory>
#include <vector>

#include "ckks32/poly.hpp"
#include "ckks32/rns.hpp"

namespace ckks32 {

inline uint32_t bit_reverse(uint32_t x, uint32_t bits) {
  uint32_t r = 0;
  for (uint32_t i = 0; i < bits; ++i) r |= ((x >> i) & 1u) << (bits - 1 - i);
  return r;
}

struct NttPrimeTable {
  PrimeContext ctx;
  uint32_t psi = 0;            // primitive 2N-th root, plain canonical
  std::vector<uint32_t> fwd;   // fwd[i] = psi^brev(i) * R, i in [1, n)
  std::vector<uint32_t> inv;   // inv[i] = psi^-brev(i) * R, i in [2, n)
  uint32_t fwd1_r2 = 0;        // psi^(n/2) * R^2 (entry-merged stage-1 twiddle)
  uint32_t exit_x = 0;         // n^-1, plain (exit-merged)
  uint32_t exit_y = 0;         // psi^-(n/2) * n^-1, plain (exit-merged)
};

struct TwiddleTables {
  uint32_t n = 0;
  uint32_t log2n = 0;
  std::shared_ptr<const RnsBasis> basis;
  std::vector<NttPrimeTable> per_prime;  // basis order: Q primes then P primes
};

std::shared_ptr<const TwiddleTables> build_twiddles(
    std::shared_ptr<const RnsBasis> basis);

struct NttPlanParams {
  uint32_t n1 = 128, n2 = 512;  // pass sizes, n1 * n2 = N
  uint32_t g1 = 16, g2 = 8;     // stages per phase = log2(g) per pass
  uint32_t b_k1 = 16;           // column batch width in pass 1
  bool ot = false;              // on-the-fly twiddles in the row pass
  uint32_t lsb_size = 0;        // OT split; 0 = default min(n, 256)
};

class NttPlan {
 public:
  NttPlan() = default;
  // Throws std::invalid_argument on divisibility violations.
  NttPlan(std::shared_ptr<const TwiddleTables> tables, NttPlanParams params);

  const NttPlanParams& params() const { return p_; }
  const TwiddleTables& tables() const { return *tables_; }

  // In-place transform of one limb row; global_prime_idx indexes the basis
  // prime order (Q then P). epilogue_mont, when given, is an extra canonical
  // Montgomery-form constant multiplied into every inverse output, which is
  // then canonicalized to [0, q) (used to fuse base-conversion part 1).
  void forward_row(int32_t* row, uint32_t global_prime_idx) const;
  void inverse_row(int32_t* row, uint32_t global_prime_idx,
                   const uint32_t* epilogue_mont = nullptr) const;

  // Single-segment serial reference paths (no two-pass decomposition, no
  // batching); bit-identical to the plan paths by construction, kept as the
  // comparison baseline for tests and the benchmark harness.
  static void forward_row_serial(int32_t* row, const NttPrimeTable& t, uint32_t n);
  static void inverse_row_serial(int32_t* row, const NttPrimeTable& t, uint32_t n,
                                 const uint32_t* epilogue_mont = nullptr);

 private:
  std::shared_ptr<const TwiddleTables> tables_;
  NttPlanParams p_;
  std::vector<std::vector<uint32_t>> ot_lsb_;  // per prime: psi^u * R, u < S
  std::vector<std::vector<uint32_t>> ot_msb_;  // per prime: psi^(S*v) * R
};

// Whole-polynomial transforms (parallel over rows); update domain/mont flags.
void ntt_forward(Polynomial& p, const NttPlan& plan);
void intt_inverse(Polynomial& p, const NttPlan& plan);

}  // namespace ckks32
