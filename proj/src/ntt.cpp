#include "ckks32/ntt.hpp"

#include <bit>
#include <stdexcept>

namespace ckks32 {
namespace {

bool pow2(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

// Forward stages [sl0, sl1) of a length-`len` segment. Element i of the
// segment lives at d[i*stride + c] for each lane c < lanes. Twiddle index is
// m*tw_mult + g into tw (tw_mult folds the row offset of pass 2; OT passes a
// per-phase scratch with tw_mult = 1).
void fwd_stages(int32_t* d, size_t stride, size_t lanes, size_t len,
                uint32_t sl0, uint32_t sl1, const uint32_t* tw, uint32_t tw_mult,
                bool entry_merge, bool tighten_last, const NttPrimeTable& T) {
  const int32_t q = static_cast<int32_t>(T.ctx.q);
  const int32_t q2 = 2 * q;
  size_t t = len >> (sl0 + 1);
  for (uint32_t sl = sl0; sl < sl1; ++sl, t >>= 1) {
    const size_t m = size_t(1) << sl;
    const bool entry = entry_merge && sl == 0;
    const bool tighten = tighten_last && sl == sl1 - 1;
    const int32_t r2 = static_cast<int32_t>(T.ctx.r2);
    for (size_t g = 0; g < m; ++g) {
      const int32_t w = entry ? static_cast<int32_t>(T.fwd1_r2)
                              : static_cast<int32_t>(tw[m * tw_mult + g]);
      int32_t* px = d + (2 * g * t) * stride;
      int32_t* py = px + t * stride;
      for (size_t j = 0; j < t; ++j) {
        for (size_t c = 0; c < lanes; ++c) {
          int32_t x = px[j * stride + c];
          const int32_t y = mont_mul(py[j * stride + c], w, T.ctx);
          if (entry) x = mont_mul(x, r2, T.ctx);
          int64_t u = static_cast<int64_t>(x) + y;
          int64_t v = static_cast<int64_t>(x) - y;
          if (u >= q2) u -= q2; else if (u <= -q2) u += q2;
          if (v >= q2) v -= q2; else if (v <= -q2) v += q2;
          if (tighten) {
            if (u >= q) u -= q; else if (u <= -q) u += q;
            if (v >= q) v -= q; else if (v <= -q) v += q;
          }
          px[j * stride + c] = static_cast<int32_t>(u);
          py[j * stride + c] = static_cast<int32_t>(v);
        }
      }
    }
  }
}

// Inverse stages v in [v0, v1) (v counts from the largest m of the segment
// downward: m = len >> (1+v), pair distance t = 1 << v). The global last
// stage (m = 1 with tw_mult = 1) applies the exit constants and, optionally,
// the fused epilogue constant followed by canonicalization.
void inv_stages(int32_t* d, size_t stride, size_t lanes, size_t len,
                uint32_t v0, uint32_t v1, const uint32_t* tw, uint32_t tw_mult,
                bool has_exit, uint32_t epilogue_mont, const NttPrimeTable& T) {
  const int32_t q = static_cast<int32_t>(T.ctx.q);
  const int32_t q2 = 2 * q;
  for (uint32_t v = v0; v < v1; ++v) {
    const size_t m = len >> (1 + v);
    const size_t t = size_t(1) << v;
    const bool exit_stage = has_exit && m == 1 && tw_mult == 1;
    for (size_t g = 0; g < m; ++g) {
      const int32_t w =
          exit_stage ? 0 : static_cast<int32_t>(tw[m * tw_mult + g]);
      int32_t* px = d + (2 * g * t) * stride;
      int32_t* py = px + t * stride;
      for (size_t j = 0; j < t; ++j) {
        for (size_t c = 0; c < lanes; ++c) {
          const int32_t x = px[j * stride + c];
          const int32_t y = py[j * stride + c];
          int64_t u = static_cast<int64_t>(x) + y;
          int64_t v2 = static_cast<int64_t>(x) - y;
          if (exit_stage) {
            int32_t a0 = mont_reduce(u * static_cast<int32_t>(T.exit_x), T.ctx);
            int32_t a1 = mont_reduce(v2 * static_cast<int32_t>(T.exit_y), T.ctx);
            if (epilogue_mont) {
              a0 = static_cast<int32_t>(correct_lazy(
                  mont_mul(a0, static_cast<int32_t>(epilogue_mont), T.ctx), T.ctx.q));
              a1 = static_cast<int32_t>(correct_lazy(
                  mont_mul(a1, static_cast<int32_t>(epilogue_mont), T.ctx), T.ctx.q));
            }
            px[j * stride + c] = a0;
            py[j * stride + c] = a1;
          } else {
            if (u >= q2) u -= q2; else if (u <= -q2) u += q2;
            px[j * stride + c] = static_cast<int32_t>(u);
            py[j * stride + c] = mont_reduce(v2 * w, T.ctx);
          }
        }
      }
    }
  }
}

}  // namespace

std::shared_ptr<const TwiddleTables> build_twiddles(
    std::shared_ptr<const RnsBasis> basis) {
  auto tables = std::make_shared<TwiddleTables>();
  const uint32_t n = basis->n;
  tables->n = n;
  tables->log2n = static_cast<uint32_t>(std::countr_zero(n));
  tables->basis = basis;
  const size_t total = basis->l() + basis->alpha();
  tables->per_prime.resize(total);
#pragma omp parallel for schedule(dynamic)
  for (int64_t pi = 0; pi < static_cast<int64_t>(total); ++pi) {
    const PrimeContext& c = basis->prime(static_cast<size_t>(pi));
    NttPrimeTable& T = tables->per_prime[pi];
    T.ctx = c;
    T.psi = find_root_2n(c.q, n);
    const uint64_t psi_inv = inv_mod(T.psi, c.q);
    std::vector<uint32_t> pw(n), pwi(n);
    pw[0] = pwi[0] = 1;
    for (uint32_t k = 1; k < n; ++k) {
      pw[k] = static_cast<uint32_t>(static_cast<uint64_t>(pw[k - 1]) * T.psi % c.q);
      pwi[k] = static_cast<uint32_t>(static_cast<uint64_t>(pwi[k - 1]) * psi_inv % c.q);
    }
    T.fwd.resize(n);
    T.inv.resize(n);
    for (uint32_t i = 1; i < n; ++i) {
      const uint32_t e = bit_reverse(i, tables->log2n);
      T.fwd[i] = to_mont(pw[e], c);
      T.inv[i] = to_mont(pwi[e], c);
    }
    T.fwd1_r2 = to_mont(to_mont(pw[n / 2], c), c);
    const uint64_t n_inv = inv_mod(n % c.q, c.q);
    T.exit_x = static_cast<uint32_t>(n_inv);
    T.exit_y = static_cast<uint32_t>(pwi[n / 2] * n_inv % c.q);
  }
  return tables;
}

NttPlan::NttPlan(std::shared_ptr<const TwiddleTables> tables, NttPlanParams params)
    : tables_(std::move(tables)), p_(params) {
  const uint32_t n = tables_->n;
  if (!pow2(p_.n1) || !pow2(p_.n2) || p_.n1 < 2 || p_.n2 < 2 ||
      static_cast<uint64_t>(p_.n1) * p_.n2 != n)
    throw std::invalid_argument("invalid pass factorization");
  if (!pow2(p_.g1) || !pow2(p_.g2) || p_.g1 < 2 || p_.g2 < 2 || p_.g1 > p_.n1 ||
      p_.g2 > p_.n2)
    throw std::invalid_argument("invalid worker granularity");
  if (!pow2(p_.b_k1) || p_.b_k1 > p_.n2)
    throw std::invalid_argument("invalid column batch");
  if (p_.ot) {
    if (p_.lsb_size == 0) p_.lsb_size = std::min<uint32_t>(n, 256);
    if (!pow2(p_.lsb_size) || p_.lsb_size > n)
      throw std::invalid_argument("invalid lsb_size");
    const uint32_t s = p_.lsb_size;
    ot_lsb_.resize(tables_->per_prime.size());
    ot_msb_.resize(tables_->per_prime.size());
    for (size_t pi = 0; pi < tables_->per_prime.size(); ++pi) {
      const NttPrimeTable& T = tables_->per_prime[pi];
      auto& lsb = ot_lsb_[pi];
      auto& msb = ot_msb_[pi];
      lsb.resize(s);
      msb.resize(n / s);
      uint64_t acc = 1;
      for (uint32_t u = 0; u < s; ++u) {
        lsb[u] = to_mont(static_cast<uint32_t>(acc), T.ctx);
        acc = acc * T.psi % T.ctx.q;
      }
      const uint64_t step = pow_mod(T.psi, s, T.ctx.q);
      acc = 1;
      for (uint32_t v = 0; v < n / s; ++v) {
        msb[v] = to_mont(static_cast<uint32_t>(acc), T.ctx);
        acc = acc * step % T.ctx.q;
      }
    }
  }
}

void NttPlan::forward_row(int32_t* a, uint32_t pidx) const {
  const NttPrimeTable& T = tables_->per_prime[pidx];
  const uint32_t n1 = p_.n1, n2 = p_.n2, b = p_.b_k1;
  const uint32_t log_n1 = static_cast<uint32_t>(std::countr_zero(n1));
  const uint32_t log_n2 = static_cast<uint32_t>(std::countr_zero(n2));
  const uint32_t k1 = static_cast<uint32_t>(std::countr_zero(p_.g1));
  const uint32_t k2 = static_cast<uint32_t>(std::countr_zero(p_.g2));

  // pass 1: column-wise transforms in batches of b columns
  std::vector<int32_t> buf(static_cast<size_t>(n1) * b);
  for (uint32_t jb = 0; jb < n2; jb += b) {
    for (uint32_t i = 0; i < n1; ++i)
      for (uint32_t c = 0; c < b; ++c)
        buf[static_cast<size_t>(i) * b + c] = a[static_cast<size_t>(i) * n2 + jb + c];
    for (uint32_t sl0 = 0; sl0 < log_n1; sl0 += k1) {
      const uint32_t sl1 = std::min(sl0 + k1, log_n1);
      fwd_stages(buf.data(), b, b, n1, sl0, sl1, T.fwd.data(), 1,
                 /*entry_merge=*/true, /*tighten_last=*/false, T);
    }
    for (uint32_t i = 0; i < n1; ++i)
      for (uint32_t c = 0; c < b; ++c)
        a[static_cast<size_t>(i) * n2 + jb + c] = buf[static_cast<size_t>(i) * b + c];
  }

  // pass 2: row-wise transforms; twiddle base n1 + r per row
  std::vector<uint32_t> scratch;
  for (uint32_t r = 0; r < n1; ++r) {
    int32_t* row = a + static_cast<size_t>(r) * n2;
    const uint32_t mult = n1 + r;
    for (uint32_t sl0 = 0; sl0 < log_n2; sl0 += k2) {
      const uint32_t sl1 = std::min(sl0 + k2, log_n2);
      const bool last = sl1 == log_n2;
      if (p_.ot) {
        // regenerate the phase's twiddle subtree: leaves (last stage of the
        // phase) from the lsb/msb split, earlier stages by squaring
        const uint32_t m_last = 1u << (sl1 - 1);
        scratch.resize(2u * m_last);
        const auto& lsb = ot_lsb_[pidx];
        const auto& msb = ot_msb_[pidx];
        const uint32_t s_mask = p_.lsb_size - 1;
        const uint32_t s_log = static_cast<uint32_t>(std::countr_zero(p_.lsb_size));
        for (uint32_t g = 0; g < m_last; ++g) {
          const uint32_t e = bit_reverse(m_last * mult + g, tables_->log2n);
          scratch[m_last + g] = correct_lazy(
              mont_mul(static_cast<int32_t>(lsb[e & s_mask]),
                       static_cast<int32_t>(msb[e >> s_log]), T.ctx),
              T.ctx.q);
        }
        for (uint32_t x = m_last - 1; x >= (1u << sl0) && x >= 1; --x)
          scratch[x] = correct_lazy(
              mont_mul(static_cast<int32_t>(scratch[2 * x]),
                       static_cast<int32_t>(scratch[2 * x]), T.ctx),
              T.ctx.q);
        fwd_stages(row, 1, 1, n2, sl0, sl1, scratch.data(), 1, false, last, T);
      } else {
        fwd_stages(row, 1, 1, n2, sl0, sl1, T.fwd.data(), mult, false, last, T);
      }
    }
  }
}

void NttPlan::inverse_row(int32_t* a, uint32_t pidx,
                          const uint32_t* epilogue_mont) const {
  const NttPrimeTable& T = tables_->per_prime[pidx];
  const uint32_t n1 = p_.n1, n2 = p_.n2, b = p_.b_k1;
  const uint32_t log_n1 = static_cast<uint32_t>(std::countr_zero(n1));
  const uint32_t log_n2 = static_cast<uint32_t>(std::countr_zero(n2));
  const uint32_t k1 = static_cast<uint32_t>(std::countr_zero(p_.g1));
  const uint32_t k2 = static_cast<uint32_t>(std::countr_zero(p_.g2));
  const uint32_t epi = epilogue_mont ? *epilogue_mont : 0;

  // pass A: rows (undoes forward pass 2), granularity g2
  for (uint32_t r = 0; r < n1; ++r) {
    int32_t* row = a + static_cast<size_t>(r) * n2;
    const uint32_t mult = n1 + r;
    for (uint32_t v0 = 0; v0 < log_n2; v0 += k2) {
      const uint32_t v1 = std::min(v0 + k2, log_n2);
      inv_stages(row, 1, 1, n2, v0, v1, T.inv.data(), mult, false, 0, T);
    }
  }

  // pass B: columns in batches (undoes forward pass 1), granularity g1;
  // contains the global exit stage
  std::vector<int32_t> buf(static_cast<size_t>(n1) * b);
  for (uint32_t jb = 0; jb < n2; jb += b) {
    for (uint32_t i = 0; i < n1; ++i)
      for (uint32_t c = 0; c < b; ++c)
        buf[static_cast<size_t>(i) * b + c] = a[static_cast<size_t>(i) * n2 + jb + c];
    for (uint32_t v0 = 0; v0 < log_n1; v0 += k1) {
      const uint32_t v1 = std::min(v0 + k1, log_n1);
      inv_stages(buf.data(), b, b, n1, v0, v1, T.inv.data(), 1, true, epi, T);
    }
    for (uint32_t i = 0; i < n1; ++i)
      for (uint32_t c = 0; c < b; ++c)
        a[static_cast<size_t>(i) * n2 + jb + c] = buf[static_cast<size_t>(i) * b + c];
  }
}

void NttPlan::forward_row_serial(int32_t* row, const NttPrimeTable& t, uint32_t n) {
  const uint32_t logn = static_cast<uint32_t>(std::countr_zero(n));
  for (uint32_t sl = 0; sl < logn; ++sl)
    fwd_stages(row, 1, 1, n, sl, sl + 1, t.fwd.data(), 1, true, sl == logn - 1, t);
}

void NttPlan::inverse_row_serial(int32_t* row, const NttPrimeTable& t, uint32_t n,
                                 const uint32_t* epilogue_mont) {
  const uint32_t logn = static_cast<uint32_t>(std::countr_zero(n));
  const uint32_t epi = epilogue_mont ? *epilogue_mont : 0;
  for (uint32_t v = 0; v < logn; ++v)
    inv_stages(row, 1, 1, n, v, v + 1, t.inv.data(), 1, true, epi, t);
}

void ntt_forward(Polynomial& p, const NttPlan& plan) {
  if (p.domain() != Domain::Coefficient)
    throw std::invalid_argument("ntt_forward expects coefficient domain");
  if (p.mont())
    throw std::invalid_argument("ntt_forward expects plain form (entry merge)");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < p.rows(); ++i)
    plan.forward_row(p.row(static_cast<uint32_t>(i)),
                     p.global_prime_index(static_cast<uint32_t>(i)));
  p.set_domain(Domain::Evaluation);
  p.set_mont(true);
}

void intt_inverse(Polynomial& p, const NttPlan& plan) {
  if (p.domain() != Domain::Evaluation)
    throw std::invalid_argument("intt_inverse expects evaluation domain");
  if (!p.mont())
    throw std::invalid_argument("intt_inverse expects Montgomery form");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < p.rows(); ++i)
    plan.inverse_row(p.row(static_cast<uint32_t>(i)),
                     p.global_prime_index(static_cast<uint32_t>(i)));
  p.set_domain(Domain::Coefficient);
  p.set_mont(false);
}

}  // namespace ckks32
