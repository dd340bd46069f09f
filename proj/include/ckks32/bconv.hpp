#pragma once

// Fast base conversion in two parts: a per-source-prime constant multiply
// (fused into the INTT exit as an epilogue) and a tiled matrix multiply with
// delayed signed reduction; plus the full ModSwitch routine.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ckks32/ntt.hpp"
#include "ckks32/poly.hpp"

namespace ckks32 {

struct BConvTable {
  std::vector<PrimeContext> src;
  std::vector<PrimeContext> dst;
  // c[i*src_count + j] = centered(((P/P_j) * R) mod Q_i), |c| <= (q_i-1)/2
  std::vector<int32_t> c;
  // part1_mont[j] = ((P/P_j)^-1 mod P_j) * R, canonical
  std::vector<uint32_t> part1_mont;
  // accumulate this many terms between centered reductions; SIZE_MAX when the
  // static bound already covers the whole sum
  size_t reduce_interval = std::numeric_limits<size_t>::max();

  size_t src_count() const { return src.size(); }
  size_t dst_count() const { return dst.size(); }
};

BConvTable make_bconv_table(std::span<const PrimeContext> src,
                            std::span<const PrimeContext> dst);

struct BConvTiling {
  uint32_t l_t = 3, n_t = 4;  // per-worker output tile
  uint32_t l_b = 1, n_b = 256;  // work-group shape
  uint32_t l_g = 0, n_g = 0;  // grid shape; 0 = derived to cover (rows, N)
  uint32_t v = 1;             // vectorized-load width hint in {1, 2, 4}
};

// Throws std::invalid_argument unless the (possibly derived) grid covers
// rows x n.
BConvTiling validate_tiling(const BConvTiling& t, uint32_t rows, uint32_t n);

// Standalone part 1 (testing surface; production fuses it into the INTT
// epilogue): row j scaled by part1_mont[j], canonicalized to [0, q_j).
void bconv_part1(Polynomial& t, const BConvTable& table);

// Part 2: dst_rows[i][x] = mont_reduce(sum_j src[j][x] * c[i][j]), lazy
// outputs in (-q_i, q_i). src rows are contiguous (src_count x n) and must be
// canonical.
void bconv_part2(const int32_t* src, uint32_t n, const BConvTable& table,
                 const BConvTiling& tiling, int32_t* const* dst_rows);

// Full ModSwitch: INTT (part 1 fused) -> part 2 -> NTT. `a` must be an
// evaluation-domain Montgomery polynomial whose rows are exactly table.src;
// output covers dst_q_count Q-rows + dst_p_count P-rows (= table.dst).
Polynomial mod_switch(const Polynomial& a, uint32_t dst_q_count,
                      uint32_t dst_p_count, const BConvTable& table,
                      const NttPlan& plan, const BConvTiling& tiling,
                      BufferPool* pool);

}  // namespace ckks32
