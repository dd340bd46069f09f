#include "ckks32/bconv.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "ckks32/rns.hpp"

namespace ckks32 {

BConvTable make_bconv_table(std::span<const PrimeContext> src,
                            std::span<const PrimeContext> dst) {
  BConvTable t;
  t.src.assign(src.begin(), src.end());
  t.dst.assign(dst.begin(), dst.end());
  BigInt p_prod = 1;
  for (const auto& s : src) p_prod *= s.q;
  t.part1_mont.reserve(src.size());
  std::vector<BigInt> phat(src.size());
  for (size_t j = 0; j < src.size(); ++j) {
    phat[j] = p_prod / src[j].q;
    const uint32_t inv = static_cast<uint32_t>(
        inv_mod(static_cast<uint64_t>(phat[j] % src[j].q), src[j].q));
    t.part1_mont.push_back(to_mont(inv, src[j]));
  }
  t.c.resize(dst.size() * src.size());
  for (size_t i = 0; i < dst.size(); ++i) {
    const uint32_t q = dst[i].q;
    for (size_t j = 0; j < src.size(); ++j) {
      const uint32_t m = to_mont(static_cast<uint32_t>(phat[j] % q), dst[i]);
      int64_t centered = m;
      if (centered > (q - 1) / 2) centered -= q;
      t.c[i * src.size() + j] = static_cast<int32_t>(centered);
    }
  }
  uint32_t p_max = 0;
  for (const auto& s : src) p_max = std::max(p_max, s.q);
  // |partial sum of k terms| <= k * (p_max-1) * (q-1)/2 must stay below
  // q * 2^31; reduce mid-accumulation when the source is too wide.
  const size_t k_max = static_cast<size_t>((1ull << 32) / p_max);
  if (src.size() > k_max && k_max >= 1) t.reduce_interval = k_max - 1;
  if (t.reduce_interval == 0) throw std::invalid_argument("source primes too large");
  return t;
}

BConvTiling validate_tiling(const BConvTiling& t, uint32_t rows, uint32_t n) {
  BConvTiling out = t;
  if (!out.l_t || !out.n_t || !out.l_b || !out.n_b)
    throw std::invalid_argument("tiling dimensions must be positive");
  if (out.v != 1 && out.v != 2 && out.v != 4)
    throw std::invalid_argument("vector width must be 1, 2 or 4");
  if (out.l_t * out.n_t > 64)
    throw std::invalid_argument("worker tile larger than 64 accumulators");
  const uint64_t l_span = static_cast<uint64_t>(out.l_t) * out.l_b;
  const uint64_t n_span = static_cast<uint64_t>(out.n_t) * out.n_b;
  if (out.l_g == 0) out.l_g = static_cast<uint32_t>((rows + l_span - 1) / l_span);
  if (out.n_g == 0) out.n_g = static_cast<uint32_t>((n + n_span - 1) / n_span);
  if (l_span * out.l_g < rows || n_span * out.n_g < n)
    throw std::invalid_argument("tiling grid does not cover the output");
  return out;
}

void bconv_part1(Polynomial& t, const BConvTable& table) {
  if (t.domain() != Domain::Coefficient)
    throw std::invalid_argument("part1 expects coefficient domain");
  if (t.rows() != table.src_count())
    throw std::invalid_argument("row count does not match table source");
  for (uint32_t j = 0; j < t.rows(); ++j)
    if (t.prime_at(j).q != table.src[j].q)
      throw std::invalid_argument("source prime mismatch");
  const uint32_t n = t.n();
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < t.rows(); ++j) {
    const PrimeContext& c = table.src[j];
    const int32_t k = static_cast<int32_t>(table.part1_mont[j]);
    int32_t* row = t.row(static_cast<uint32_t>(j));
    for (uint32_t x = 0; x < n; ++x)
      row[x] = static_cast<int32_t>(correct_lazy(mont_mul(row[x], k, c), c.q));
  }
}

namespace {

inline int64_t centered_mod(int64_t v, uint32_t q) {
  int64_t r = v % static_cast<int64_t>(q);
  const int64_t half = (static_cast<int64_t>(q) - 1) / 2;
  if (r > half) r -= q;
  if (r < -half) r += q;
  return r;
}

}  // namespace

void bconv_part2(const int32_t* src, uint32_t n, const BConvTable& table,
                 const BConvTiling& tiling, int32_t* const* dst_rows) {
  const uint32_t rows = static_cast<uint32_t>(table.dst_count());
  const uint32_t sc = static_cast<uint32_t>(table.src_count());
  const BConvTiling t = validate_tiling(tiling, rows, n);
  const size_t interval = table.reduce_interval;
  const uint32_t blocks = t.l_g * t.n_g;

#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < blocks; ++blk) {
    const uint32_t ib = static_cast<uint32_t>(blk) / t.n_g;
    const uint32_t jb = static_cast<uint32_t>(blk) % t.n_g;
    const uint32_t row0 = ib * t.l_t * t.l_b;
    const uint32_t col0 = jb * t.n_t * t.n_b;
    if (row0 >= rows || col0 >= n) continue;
    const uint32_t row1 = std::min(rows, row0 + t.l_t * t.l_b);
    const uint32_t col1 = std::min(n, col0 + t.n_t * t.n_b);

    // group staging for the source tile (the shared-memory stand-in);
    // skipped on the L_b = 1 direct-load fast path
    std::vector<int32_t> a_sh;
    const bool staged = t.l_b > 1;
    const uint32_t width = col1 - col0;
    if (staged) {
      a_sh.resize(static_cast<size_t>(sc) * width);
      for (uint32_t k = 0; k < sc; ++k) {
        const int32_t* s = src + static_cast<size_t>(k) * n + col0;
        int32_t* d = a_sh.data() + static_cast<size_t>(k) * width;
        // v-wide chunked loads (semantically a plain copy)
        uint32_t x = 0;
        for (; x + t.v <= width; x += t.v)
          std::memcpy(d + x, s + x, t.v * sizeof(int32_t));
        for (; x < width; ++x) d[x] = s[x];
      }
    }
    // constants slice for the block's rows
    std::vector<int32_t> c_sh(static_cast<size_t>(row1 - row0) * sc);
    for (uint32_t i = row0; i < row1; ++i)
      std::memcpy(c_sh.data() + static_cast<size_t>(i - row0) * sc,
                  table.c.data() + static_cast<size_t>(i) * sc,
                  sc * sizeof(int32_t));

    int64_t acc[64];  // l_t * n_t <= 64 per worker tile (validated)
    for (uint32_t it = 0; it < t.l_b; ++it) {
      const uint32_t r_lo = row0 + it * t.l_t;
      if (r_lo >= row1) break;
      const uint32_t r_hi = std::min(row1, r_lo + t.l_t);
      for (uint32_t jt = 0; jt < t.n_b; ++jt) {
        const uint32_t x_lo = col0 + jt * t.n_t;
        if (x_lo >= col1) break;
        const uint32_t x_hi = std::min(col1, x_lo + t.n_t);
        const uint32_t ni = x_hi - x_lo, li = r_hi - r_lo;
        for (uint32_t z = 0; z < li * ni; ++z) acc[z] = 0;
        for (uint32_t k = 0; k < sc; ++k) {
          const int32_t* a_tmp =
              staged ? a_sh.data() + static_cast<size_t>(k) * width + (x_lo - col0)
                     : src + static_cast<size_t>(k) * n + x_lo;
          for (uint32_t i = 0; i < li; ++i) {
            const int64_t cv = c_sh[static_cast<size_t>(r_lo + i - row0) * sc + k];
            for (uint32_t x = 0; x < ni; ++x)
              acc[i * ni + x] += cv * a_tmp[x];
          }
          if (static_cast<size_t>(k + 1) % interval == 0 && k + 1 < sc) {
            for (uint32_t i = 0; i < li; ++i) {
              const uint32_t q = table.dst[r_lo + i].q;
              for (uint32_t x = 0; x < ni; ++x)
                acc[i * ni + x] = centered_mod(acc[i * ni + x], q);
            }
          }
        }
        for (uint32_t i = 0; i < li; ++i) {
          const PrimeContext& c = table.dst[r_lo + i];
          for (uint32_t x = 0; x < ni; ++x)
            dst_rows[r_lo + i][x_lo + x] = mont_reduce(acc[i * ni + x], c);
        }
      }
    }
  }
}

Polynomial mod_switch(const Polynomial& a, uint32_t dst_q_count,
                      uint32_t dst_p_count, const BConvTable& table,
                      const NttPlan& plan, const BConvTiling& tiling,
                      BufferPool* pool) {
  if (a.domain() != Domain::Evaluation || !a.mont())
    throw std::invalid_argument("mod_switch expects evaluation-domain Montgomery input");
  if (a.rows() != table.src_count())
    throw std::invalid_argument("input rows do not match table source");
  for (uint32_t j = 0; j < a.rows(); ++j)
    if (a.prime_at(j).q != table.src[j].q)
      throw std::invalid_argument("source prime mismatch");

  Polynomial work = a.clone(pool);
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < work.rows(); ++j)
    plan.inverse_row(work.row(static_cast<uint32_t>(j)),
                     work.global_prime_index(static_cast<uint32_t>(j)),
                     &table.part1_mont[j]);

  Polynomial out(a.basis(), dst_q_count, dst_p_count, Domain::Coefficient, false,
                 pool);
  if (out.rows() != table.dst_count())
    throw std::invalid_argument("output rows do not match table destination");
  for (uint32_t i = 0; i < out.rows(); ++i)
    if (out.prime_at(i).q != table.dst[i].q)
      throw std::invalid_argument("destination prime mismatch");
  std::vector<int32_t*> dst_rows(out.rows());
  for (uint32_t i = 0; i < out.rows(); ++i) dst_rows[i] = out.row(i);
  bconv_part2(work.row(0), a.n(), table, tiling, dst_rows.data());

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < out.rows(); ++i)
    plan.forward_row(out.row(static_cast<uint32_t>(i)),
                     out.global_prime_index(static_cast<uint32_t>(i)));
  out.set_domain(Domain::Evaluation);
  out.set_mont(true);
  return out;
}

}  // namespace ckks32
