#include "ckks32/ckks.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ckks32 {
namespace {

NttPlanParams plan_for(uint32_t n) {
  if (n == (1u << 16)) return {};
  const uint32_t log2n = static_cast<uint32_t>(std::countr_zero(n));
  const uint32_t n1 = 1u << (log2n / 2);
  const uint32_t n2 = n / n1;
  return {n1, n2, std::min(16u, n1), std::min(8u, n2), std::min(16u, n2),
          false, 0};
}

// Narrow a lazy value in (-4q, 4q) to (-q, q).
inline int32_t narrow(int32_t v, int32_t q) {
  const int32_t two_q = q << 1;
  if (v >= two_q) v -= two_q;
  if (v <= -two_q) v += two_q;
  if (v >= q) v -= q;
  if (v <= -q) v += q;
  return v;
}

int64_t sample_gaussian(std::mt19937_64& rng, double sigma) {
  // Box-Muller; one draw per call keeps seeding behavior simple.
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1p-53;
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return std::llround(z * sigma);
}

std::vector<int64_t> gaussian_coeffs(std::mt19937_64& rng, uint32_t n,
                                     double sigma) {
  std::vector<int64_t> c(n);
  for (auto& v : c) v = sample_gaussian(rng, sigma);
  return c;
}

// Ternary vector with exactly h nonzero entries (random signs), positions by
// Fisher-Yates selection.
std::vector<int8_t> ternary_coeffs(std::mt19937_64& rng, uint32_t n, uint32_t h) {
  std::vector<uint32_t> idx(n);
  for (uint32_t i = 0; i < n; ++i) idx[i] = i;
  std::vector<int8_t> c(n, 0);
  for (uint32_t i = 0; i < h; ++i) {
    const uint32_t j = i + static_cast<uint32_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
    c[idx[i]] = (rng() & 1) ? 1 : -1;
  }
  return c;
}

void fft_pow2(std::vector<std::complex<double>>& a, bool invert) {
  const uint32_t n = static_cast<uint32_t>(a.size());
  const uint32_t bits = static_cast<uint32_t>(std::countr_zero(n));
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t j = bit_reverse(i, bits);
    if (i < j) std::swap(a[i], a[j]);
  }
  for (uint32_t len = 2; len <= n; len <<= 1) {
    const double ang =
        (invert ? -2.0 : 2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (uint32_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (uint32_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (invert)
    for (auto& v : a) v /= static_cast<double>(n);
}

// Natural evaluation index of slot t is ((5^t mod 2n) - 1) / 2.
std::vector<uint32_t> slot_indices(uint32_t n) {
  std::vector<uint32_t> j(n / 2);
  const uint64_t two_n = 2ull * n;
  uint64_t g = 1;
  for (uint32_t t = 0; t < n / 2; ++t) {
    j[t] = static_cast<uint32_t>((g - 1) / 2);
    g = g * 5 % two_n;
  }
  return j;
}

BigInt mod_inverse(BigInt a, const BigInt& m) {
  BigInt r0 = m, r1 = a % m, t0 = 0, t1 = 1;
  if (r1 < 0) r1 += m;
  while (r1 != 0) {
    const BigInt q = r0 / r1;
    r0 -= q * r1;
    std::swap(r0, r1);
    t0 -= q * t1;
    std::swap(t0, t1);
  }
  if (r0 != 1) throw std::invalid_argument("not invertible");
  if (t0 < 0) t0 += m;
  return t0;
}

void check_eval_mont(const Polynomial& p, const char* what) {
  if (p.domain() != Domain::Evaluation || !p.mont())
    throw std::invalid_argument(std::string(what) +
                                ": expected evaluation-domain Montgomery form");
}

void check_pair(const Ciphertext& ct) {
  if (!ct.b.shape_matches(ct.a) || ct.b.domain() != ct.a.domain() ||
      ct.b.mont() != ct.a.mont())
    throw std::invalid_argument("ciphertext halves out of sync");
  check_eval_mont(ct.b, "ciphertext");
  if (ct.b.q_count() != ct.level || ct.b.p_count() != 0)
    throw std::invalid_argument("ciphertext level/shape mismatch");
}

void check_same_scale(const Rational& a, const Rational& b) {
  // scales must agree within 2^-40 relative; no silent adjustment
  const Rational diff = a >= b ? a - b : b - a;
  if (diff * (BigInt(1) << 40) > a)
    throw std::invalid_argument("scale mismatch beyond tolerance");
}

}  // namespace

double log2_rational(const Rational& r) {
  using boost::multiprecision::msb;
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (num <= 0) throw std::invalid_argument("log2 of non-positive rational");
  const int64_t bn = static_cast<int64_t>(msb(num));
  const int64_t bd = static_cast<int64_t>(msb(den));
  int64_t shift = 0;
  if (bn > 52) {
    num >>= (bn - 52);
    shift += bn - 52;
  }
  if (bd > 52) {
    den >>= (bd - 52);
    shift -= bd - 52;
  }
  return static_cast<double>(shift) +
         std::log2(static_cast<double>(num) / static_cast<double>(den));
}

CkksContext::CkksContext(CkksParams params) : params_(params) {
  if (params_.n < 8 || (params_.n & (params_.n - 1)) != 0)
    throw std::invalid_argument("ring degree must be a power of two >= 8");
  if (params_.l < 2 || params_.l % 2 != 0)
    throw std::invalid_argument("level count must be even and >= 2");
  if (params_.alpha < 1) throw std::invalid_argument("alpha must be positive");
  if (params_.hamming == 0 || params_.hamming >= params_.n)
    throw std::invalid_argument("hamming weight out of range");
  basis_ = generate_basis(params_.n, params_.l, params_.alpha, params_.delta_bits);
  twiddles_ = build_twiddles(basis_);
  plan_ = NttPlan(twiddles_, plan_for(params_.n));
  p_product_ = 1;
  for (const auto& p : basis_->p_primes) p_product_ *= p.q;
  p_mont_.reserve(basis_->l());
  for (const auto& q : basis_->q_primes)
    p_mont_.push_back(to_mont(static_cast<uint32_t>(p_product_ % q.q), q));
}

Rational CkksContext::default_scale() const {
  return Rational(BigInt(1) << params_.delta_bits);
}

BigInt CkksContext::q_product(uint32_t level) const {
  BigInt q = 1;
  for (uint32_t i = 0; i < level; ++i) q *= basis_->q_primes[i].q;
  return q;
}

const BConvTable& CkksContext::modup_table(uint32_t level, uint32_t digit) {
  const uint64_t key = (static_cast<uint64_t>(level) << 8) | digit;
  auto it = modup_cache_.find(key);
  if (it != modup_cache_.end()) return it->second;
  const uint32_t b = digit * params_.alpha;
  const uint32_t e = std::min((digit + 1) * params_.alpha, level);
  if (b >= e) throw std::invalid_argument("digit out of range for level");
  std::vector<PrimeContext> src(basis_->q_primes.begin() + b,
                                basis_->q_primes.begin() + e);
  std::vector<PrimeContext> dst;
  for (uint32_t i = 0; i < level; ++i)
    if (i < b || i >= e) dst.push_back(basis_->q_primes[i]);
  dst.insert(dst.end(), basis_->p_primes.begin(), basis_->p_primes.end());
  return modup_cache_.emplace(key, make_bconv_table(src, dst)).first->second;
}

namespace {

SwitchTable make_switch_table(const RnsBasis& basis,
                              std::span<const PrimeContext> src,
                              uint32_t dst_levels, const BigInt& divisor) {
  SwitchTable st;
  st.table = make_bconv_table(
      src, std::span(basis.q_primes.data(), dst_levels));
  st.div_inv_mont.reserve(dst_levels);
  for (uint32_t i = 0; i < dst_levels; ++i) {
    const PrimeContext& c = basis.q_primes[i];
    const uint32_t d = static_cast<uint32_t>(divisor % c.q);
    st.div_inv_mont.push_back(
        to_mont(static_cast<uint32_t>(inv_mod(d, c.q)), c));
  }
  return st;
}

}  // namespace

const SwitchTable& CkksContext::moddown_table(uint32_t level) {
  const uint64_t key = (1ull << 32) | level;
  auto it = switch_cache_.find(key);
  if (it != switch_cache_.end()) return it->second;
  return switch_cache_
      .emplace(key, make_switch_table(*basis_, basis_->p_primes, level,
                                      p_product_))
      .first->second;
}

const SwitchTable& CkksContext::rescale_table(uint32_t level) {
  const uint64_t key = (2ull << 32) | level;
  auto it = switch_cache_.find(key);
  if (it != switch_cache_.end()) return it->second;
  if (level < 4) throw std::invalid_argument("level exhausted");
  std::span<const PrimeContext> src(basis_->q_primes.data() + level - 2, 2);
  const BigInt div = BigInt(src[0].q) * src[1].q;
  return switch_cache_
      .emplace(key, make_switch_table(*basis_, src, level - 2, div))
      .first->second;
}

const SwitchTable& CkksContext::merged_table(uint32_t level) {
  const uint64_t key = (3ull << 32) | level;
  auto it = switch_cache_.find(key);
  if (it != switch_cache_.end()) return it->second;
  if (level < 4) throw std::invalid_argument("level exhausted");
  std::vector<PrimeContext> src(basis_->q_primes.begin() + level - 2,
                                basis_->q_primes.begin() + level);
  src.insert(src.end(), basis_->p_primes.begin(), basis_->p_primes.end());
  const BigInt div = BigInt(src[0].q) * src[1].q * p_product_;
  return switch_cache_
      .emplace(key, make_switch_table(*basis_, src, level - 2, div))
      .first->second;
}

const AutomorphismMap& CkksContext::rotation_map(int64_t r) {
  auto it = rot_cache_.find(r);
  if (it != rot_cache_.end()) return it->second;
  return rot_cache_.emplace(r, AutomorphismMap::rotation(params_.n, r))
      .first->second;
}

const CrtContext& CkksContext::crt_prefix(uint32_t count) {
  auto it = crt_cache_.find(count);
  if (it != crt_cache_.end()) return it->second;
  return crt_cache_
      .emplace(count,
               CrtContext(std::span(basis_->q_primes.data(), count)))
      .first->second;
}

// --- encoding ---------------------------------------------------------------

Plaintext encode(CkksContext& ctx, std::span<const std::complex<double>> slots,
                 const Rational& scale, uint32_t level, bool p_extend) {
  const uint32_t n = ctx.params().n;
  if (slots.size() > n / 2) throw std::invalid_argument("too many slots");
  if (level < 1 || level > ctx.params().l)
    throw std::invalid_argument("level out of range");
  if (scale <= 0 || log2_rational(scale) > 60.0)
    throw std::invalid_argument("scale out of the representable range");

  // evaluation values in natural order; conjugate pair at n-1-j keeps the
  // coefficients real
  std::vector<std::complex<double>> a(n, {0.0, 0.0});
  const auto jidx = slot_indices(n);
  for (size_t t = 0; t < slots.size(); ++t) {
    a[jidx[t]] = slots[t];
    a[n - 1 - jidx[t]] = std::conj(slots[t]);
  }
  // m_k = Re(psi^-k * IDFT(a)_k), scaled and rounded
  fft_pow2(a, true);
  const long double scale_d =
      static_cast<long double>(log2_rational(scale));  // via exact log2
  const long double scale_v = std::pow(2.0L, scale_d);
  std::vector<int64_t> m(n);
  const double ang = -std::numbers::pi / static_cast<double>(n);
  for (uint32_t k = 0; k < n; ++k) {
    const std::complex<double> tw(std::cos(ang * k), std::sin(ang * k));
    const long double c = static_cast<long double>((a[k] * tw).real());
    m[k] = llroundl(c * scale_v);
  }

  Plaintext pt;
  pt.scale = scale;
  pt.level = level;
  pt.poly = Polynomial(ctx.basis(), level,
                       p_extend ? ctx.params().alpha : 0u, Domain::Coefficient,
                       false, &ctx.pool());
  for (uint32_t i = 0; i < pt.poly.rows(); ++i) {
    const uint32_t q = pt.poly.prime_at(i).q;
    int32_t* row = pt.poly.row(i);
    for (uint32_t k = 0; k < n; ++k)
      row[k] = static_cast<int32_t>(correct(m[k], q));
  }
  ntt_forward(pt.poly, ctx.plan());
  ctx.counters().ntt += pt.poly.rows();
  return pt;
}

std::vector<std::complex<double>> decode(CkksContext& ctx, const Plaintext& pt) {
  check_eval_mont(pt.poly, "decode");
  const uint32_t n = ctx.params().n;
  // minimal Q-prefix whose product dominates the scale with headroom
  const double need_bits = log2_rational(pt.scale) + 40.0;
  uint32_t c = 1;
  double bits = std::log2(static_cast<double>(ctx.basis()->q_primes[0].q));
  while (c < pt.level && bits < need_bits) {
    bits += std::log2(static_cast<double>(ctx.basis()->q_primes[c].q));
    ++c;
  }

  Polynomial tmp(ctx.basis(), c, 0, Domain::Evaluation, true, &ctx.pool());
  for (uint32_t i = 0; i < c; ++i)
    std::memcpy(tmp.row(i), pt.poly.row(i), sizeof(int32_t) * n);
  intt_inverse(tmp, ctx.plan());
  ctx.counters().intt += c;

  const CrtContext& crt = ctx.crt_prefix(c);
  const BigInt& mod = crt.modulus();
  const BigInt half = mod / 2;
  std::vector<std::complex<double>> a(n);
  std::vector<uint32_t> res(c);
  for (uint32_t k = 0; k < n; ++k) {
    for (uint32_t i = 0; i < c; ++i)
      res[i] = correct_lazy(tmp.row(i)[k], ctx.basis()->q_primes[i].q);
    BigInt v = crt.reconstruct(res);
    if (v > half) v -= mod;
    const double coeff = static_cast<double>(Rational(v) / pt.scale);
    const double ang = std::numbers::pi * k / static_cast<double>(n);
    a[k] = std::complex<double>(coeff * std::cos(ang), coeff * std::sin(ang));
  }
  fft_pow2(a, false);
  const auto jidx = slot_indices(n);
  std::vector<std::complex<double>> out(n / 2);
  for (uint32_t t = 0; t < n / 2; ++t) out[t] = a[jidx[t]];
  return out;
}

// --- keys and encryption ----------------------------------------------------

namespace {

Polynomial coeffs_to_eval(CkksContext& ctx, std::span<const int64_t> coeffs,
                          uint32_t q_count, uint32_t p_count) {
  Polynomial p(ctx.basis(), q_count, p_count, Domain::Coefficient, false,
               &ctx.pool());
  for (uint32_t i = 0; i < p.rows(); ++i) {
    const uint32_t q = p.prime_at(i).q;
    int32_t* row = p.row(i);
    for (uint32_t k = 0; k < p.n(); ++k)
      row[k] = static_cast<int32_t>(correct(coeffs[k], q));
  }
  ntt_forward(p, ctx.plan());
  ctx.counters().ntt += p.rows();
  return p;
}

Polynomial uniform_eval(CkksContext& ctx, std::mt19937_64& rng,
                        uint32_t q_count, uint32_t p_count) {
  // uniform residues sampled directly in the evaluation domain (a bijection
  // of the uniform distribution)
  Polynomial p(ctx.basis(), q_count, p_count, Domain::Evaluation, true,
               &ctx.pool());
  for (uint32_t i = 0; i < p.rows(); ++i) {
    const uint32_t q = p.prime_at(i).q;
    int32_t* row = p.row(i);
    for (uint32_t k = 0; k < p.n(); ++k)
      row[k] = static_cast<int32_t>(rng() % q);
  }
  return p;
}

}  // namespace

SecretKey keygen(CkksContext& ctx, std::mt19937_64& rng) {
  SecretKey sk;
  sk.coeffs = ternary_coeffs(rng, ctx.params().n, ctx.params().hamming);
  std::vector<int64_t> c(sk.coeffs.begin(), sk.coeffs.end());
  sk.s = coeffs_to_eval(ctx, c, ctx.params().l, ctx.params().alpha);
  return sk;
}

PublicKey pubkey_gen(CkksContext& ctx, const SecretKey& sk,
                     std::mt19937_64& rng) {
  const uint32_t l = ctx.params().l;
  PublicKey pk;
  pk.a = uniform_eval(ctx, rng, l, 0);
  auto e = coeffs_to_eval(
      ctx, gaussian_coeffs(rng, ctx.params().n, ctx.params().sigma), l, 0);
  pk.b = Polynomial(ctx.basis(), l, 0, Domain::Evaluation, true, &ctx.pool());
  for (uint32_t i = 0; i < l; ++i) {
    const PrimeContext& c = pk.b.prime_at(i);
    for (uint32_t k = 0; k < pk.b.n(); ++k)
      pk.b.row(i)[k] = narrow(
          e.row(i)[k] - mont_mul(pk.a.row(i)[k], sk.s.row(i)[k], c),
          static_cast<int32_t>(c.q));
  }
  return pk;
}

EvaluationKey evk_gen(CkksContext& ctx, const SecretKey& sk, KeyKind kind,
                      int64_t rotation, std::mt19937_64& rng) {
  const uint32_t l = ctx.params().l;
  const uint32_t alpha = ctx.params().alpha;
  const uint32_t n = ctx.params().n;
  const uint32_t d_count = ctx.num_digits(l);

  // source and destination secrets: evk digit k encrypts g_k * s_src under
  // s_dst, i.e. b_k + a_k * s_dst = g_k * s_src + e_k over PQ
  Polynomial s_src, s_dst;
  if (kind == KeyKind::Relin) {
    s_src = Polynomial(ctx.basis(), l, alpha, Domain::Evaluation, true,
                       &ctx.pool());
    for (uint32_t i = 0; i < s_src.rows(); ++i) {
      const PrimeContext& c = s_src.prime_at(i);
      for (uint32_t k = 0; k < n; ++k)
        s_src.row(i)[k] = mont_mul(sk.s.row(i)[k], sk.s.row(i)[k], c);
    }
    s_dst = sk.s.clone(&ctx.pool());
  } else {
    s_src = sk.s.clone(&ctx.pool());
    s_dst = apply_automorphism(sk.s, ctx.rotation_map(-rotation), &ctx.pool());
  }

  const BigInt q_full = ctx.q_product(l);
  EvaluationKey evk;
  evk.kind = kind;
  evk.rotation = rotation;
  evk.digits.reserve(d_count);
  for (uint32_t k = 0; k < d_count; ++k) {
    const uint32_t b = k * alpha, e = std::min((k + 1) * alpha, l);
    BigInt dk = 1;
    for (uint32_t i = b; i < e; ++i) dk *= ctx.basis()->q_primes[i].q;
    const BigInt dhat = q_full / dk;
    const BigInt g = ctx.p_product() * dhat * mod_inverse(dhat, dk);

    auto a_k = uniform_eval(ctx, rng, l, alpha);
    auto e_k = coeffs_to_eval(
        ctx, gaussian_coeffs(rng, n, ctx.params().sigma), l, alpha);
    Polynomial b_k(ctx.basis(), l, alpha, Domain::Evaluation, true,
                   &ctx.pool());
    for (uint32_t i = 0; i < b_k.rows(); ++i) {
      const PrimeContext& c = b_k.prime_at(i);
      const int32_t gm =
          static_cast<int32_t>(to_mont(static_cast<uint32_t>(g % c.q), c));
      for (uint32_t x = 0; x < n; ++x)
        b_k.row(i)[x] =
            narrow(e_k.row(i)[x] + mont_mul(s_src.row(i)[x], gm, c) -
                       mont_mul(a_k.row(i)[x], s_dst.row(i)[x], c),
                   static_cast<int32_t>(c.q));
    }
    evk.digits.emplace_back(std::move(b_k), std::move(a_k));
  }
  return evk;
}

Ciphertext encrypt(CkksContext& ctx, const Plaintext& pt, const SecretKey& sk,
                   std::mt19937_64& rng) {
  check_eval_mont(pt.poly, "encrypt");
  if (pt.poly.p_count() != 0)
    throw std::invalid_argument("cannot encrypt a P-extended plaintext");
  const uint32_t l = pt.level;
  Ciphertext ct;
  ct.scale = pt.scale;
  ct.level = l;
  ct.a = uniform_eval(ctx, rng, l, 0);
  auto e = coeffs_to_eval(
      ctx, gaussian_coeffs(rng, ctx.params().n, ctx.params().sigma), l, 0);
  ct.b = Polynomial(ctx.basis(), l, 0, Domain::Evaluation, true, &ctx.pool());
  for (uint32_t i = 0; i < l; ++i) {
    const PrimeContext& c = ct.b.prime_at(i);
    for (uint32_t k = 0; k < ct.b.n(); ++k)
      ct.b.row(i)[k] =
          narrow(pt.poly.row(i)[k] + e.row(i)[k] -
                     mont_mul(ct.a.row(i)[k], sk.s.row(i)[k], c),
                 static_cast<int32_t>(c.q));
  }
  return ct;
}

Ciphertext encrypt(CkksContext& ctx, const Plaintext& pt, const PublicKey& pk,
                   std::mt19937_64& rng) {
  check_eval_mont(pt.poly, "encrypt");
  if (pt.poly.p_count() != 0)
    throw std::invalid_argument("cannot encrypt a P-extended plaintext");
  const uint32_t l = pt.level;
  const uint32_t n = ctx.params().n;
  auto tern = ternary_coeffs(rng, n, ctx.params().hamming);
  std::vector<int64_t> tc(tern.begin(), tern.end());
  auto v = coeffs_to_eval(ctx, tc, l, 0);
  auto e0 = coeffs_to_eval(ctx, gaussian_coeffs(rng, n, ctx.params().sigma), l, 0);
  auto e1 = coeffs_to_eval(ctx, gaussian_coeffs(rng, n, ctx.params().sigma), l, 0);

  Ciphertext ct;
  ct.scale = pt.scale;
  ct.level = l;
  ct.b = Polynomial(ctx.basis(), l, 0, Domain::Evaluation, true, &ctx.pool());
  ct.a = Polynomial(ctx.basis(), l, 0, Domain::Evaluation, true, &ctx.pool());
  for (uint32_t i = 0; i < l; ++i) {
    const PrimeContext& c = ct.b.prime_at(i);
    const int32_t q = static_cast<int32_t>(c.q);
    for (uint32_t k = 0; k < n; ++k) {
      ct.b.row(i)[k] = narrow(mont_mul(v.row(i)[k], pk.b.row(i)[k], c) +
                                  e0.row(i)[k] + pt.poly.row(i)[k],
                              q);
      ct.a.row(i)[k] =
          narrow(mont_mul(v.row(i)[k], pk.a.row(i)[k], c) + e1.row(i)[k], q);
    }
  }
  return ct;
}

Plaintext decrypt(CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk) {
  check_pair(ct);
  Plaintext pt;
  pt.scale = ct.scale;
  pt.level = ct.level;
  pt.poly = Polynomial(ctx.basis(), ct.level, 0, Domain::Evaluation, true,
                       &ctx.pool());
  for (uint32_t i = 0; i < ct.level; ++i) {
    const PrimeContext& c = pt.poly.prime_at(i);
    for (uint32_t k = 0; k < pt.poly.n(); ++k)
      pt.poly.row(i)[k] =
          narrow(ct.b.row(i)[k] + mont_mul(ct.a.row(i)[k], sk.s.row(i)[k], c),
                 static_cast<int32_t>(c.q));
  }
  return pt;
}

// --- element-wise mechanisms ------------------------------------------------

Ciphertext hadd(CkksContext& ctx, const Ciphertext& x, const Ciphertext& y) {
  check_pair(x);
  check_pair(y);
  if (x.level != y.level) throw std::invalid_argument("level mismatch");
  if (x.pending_rescale != y.pending_rescale)
    throw std::invalid_argument("pending-rescale state mismatch");
  check_same_scale(x.scale, y.scale);
  Ciphertext out;
  out.b = ew_add(x.b, y.b, &ctx.pool());
  out.a = ew_add(x.a, y.a, &ctx.pool());
  out.scale = x.scale;
  out.level = x.level;
  out.pending_rescale = x.pending_rescale;
  return out;
}

Ciphertext padd(CkksContext& ctx, const Ciphertext& ct, const Plaintext& pt) {
  check_pair(ct);
  check_eval_mont(pt.poly, "padd");
  if (ct.level != pt.level || pt.poly.p_count() != 0)
    throw std::invalid_argument("level mismatch");
  check_same_scale(ct.scale, pt.scale);
  Ciphertext out;
  out.b = ew_add(ct.b, pt.poly, &ctx.pool());
  out.a = ct.a.clone(&ctx.pool());
  out.scale = ct.scale;
  out.level = ct.level;
  out.pending_rescale = ct.pending_rescale;
  return out;
}

Ciphertext pmult(CkksContext& ctx, const Ciphertext& ct, const Plaintext& pt) {
  check_pair(ct);
  check_eval_mont(pt.poly, "pmult");
  if (ct.level != pt.level || pt.poly.p_count() != 0)
    throw std::invalid_argument("level mismatch");
  Ciphertext out;
  out.b = ew_mul(ct.b, pt.poly, &ctx.pool());
  out.a = ew_mul(ct.a, pt.poly, &ctx.pool());
  out.scale = ct.scale * pt.scale;
  out.level = ct.level;
  out.pending_rescale = ct.pending_rescale;
  return out;
}

// --- ModSwitch-based mechanisms ---------------------------------------------

namespace {

// Divide-and-drop core shared by ModDown, rescale, and the merged path:
// the tail rows of v (matching st.table.src) are INTT'd with the part-1
// epilogue, converted onto the surviving Q-prefix, NTT'd, subtracted, and the
// difference scaled by the divisor inverse. Input rows may be lazy in
// (-2q, 2q).
Polynomial drop_and_divide(CkksContext& ctx, const Polynomial& v,
                           const SwitchTable& st) {
  const uint32_t src_count = static_cast<uint32_t>(st.table.src_count());
  const uint32_t out_q = static_cast<uint32_t>(st.table.dst_count());
  if (v.rows() != out_q + src_count)
    throw std::invalid_argument("row count does not match switch table");
  const uint32_t off = out_q;
  const uint32_t n = v.n();

  PoolBuffer scratch = ctx.pool().acquire(static_cast<size_t>(src_count) * n);
  for (uint32_t j = 0; j < src_count; ++j) {
    if (v.prime_at(off + j).q != st.table.src[j].q)
      throw std::invalid_argument("source prime mismatch");
    int32_t* row = scratch.data() + static_cast<size_t>(j) * n;
    std::memcpy(row, v.row(off + j), sizeof(int32_t) * n);
    ctx.plan().inverse_row(row, v.global_prime_index(off + j),
                           &st.table.part1_mont[j]);
  }
  ctx.counters().intt += src_count;

  Polynomial out(v.basis(), out_q, 0, Domain::Coefficient, false, &ctx.pool());
  std::vector<int32_t*> dst_rows(out_q);
  for (uint32_t i = 0; i < out_q; ++i) dst_rows[i] = out.row(i);
  bconv_part2(scratch.data(), n, st.table, BConvTiling{}, dst_rows.data());
  ctx.counters().bconv += 1;

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < out_q; ++i)
    ctx.plan().forward_row(out.row(static_cast<uint32_t>(i)),
                           static_cast<uint32_t>(i));
  ctx.counters().ntt += out_q;

#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < out_q; ++i) {
    const PrimeContext& c = out.prime_at(static_cast<uint32_t>(i));
    const int32_t inv = static_cast<int32_t>(st.div_inv_mont[i]);
    const int32_t* vr = v.row(static_cast<uint32_t>(i));
    int32_t* o = out.row(static_cast<uint32_t>(i));
    for (uint32_t x = 0; x < n; ++x)
      o[x] = mont_mul(vr[x] - o[x], inv, c);
  }
  out.set_domain(Domain::Evaluation);
  out.set_mont(true);
  return out;
}

Polynomial mod_down_impl(CkksContext& ctx, const Polynomial& v) {
  if (v.p_count() != ctx.params().alpha)
    throw std::invalid_argument("mod_down expects a P-extended polynomial");
  return drop_and_divide(ctx, v, ctx.moddown_table(v.q_count()));
}

// Applies a deferred rescale if needed; otherwise aliases the input.
struct Flushed {
  Ciphertext storage;
  const Ciphertext* ct = nullptr;
  Flushed(CkksContext& ctx, const Ciphertext& in) {
    if (in.pending_rescale) {
      storage = rescale(ctx, in);
      ct = &storage;
    } else {
      ct = &in;
    }
  }
  const Ciphertext& operator*() const { return *ct; }
};

}  // namespace

HoistState mod_up(CkksContext& ctx, const Polynomial& d) {
  check_eval_mont(d, "mod_up");
  if (d.p_count() != 0)
    throw std::invalid_argument("mod_up input must be Q-only");
  const uint32_t l = d.q_count();
  const uint32_t alpha = ctx.params().alpha;
  const uint32_t n = d.n();
  const uint32_t d_count = ctx.num_digits(l);

  HoistState hoist;
  hoist.level = l;
  hoist.digits.reserve(d_count);
  for (uint32_t k = 0; k < d_count; ++k) {
    const BConvTable& table = ctx.modup_table(l, k);
    const uint32_t b = k * alpha, e = std::min((k + 1) * alpha, l);
    const uint32_t cnt = e - b;

    PoolBuffer scratch = ctx.pool().acquire(static_cast<size_t>(cnt) * n);
    for (uint32_t j = 0; j < cnt; ++j) {
      int32_t* row = scratch.data() + static_cast<size_t>(j) * n;
      std::memcpy(row, d.row(b + j), sizeof(int32_t) * n);
      ctx.plan().inverse_row(row, b + j, &table.part1_mont[j]);
    }
    ctx.counters().intt += cnt;

    Polynomial ext(ctx.basis(), l, alpha, Domain::Evaluation, true,
                   &ctx.pool());
    // digit rows pass through unchanged; the rest come from the conversion
    for (uint32_t j = 0; j < cnt; ++j)
      std::memcpy(ext.row(b + j), d.row(b + j), sizeof(int32_t) * n);
    std::vector<int32_t*> dst_rows;
    dst_rows.reserve(table.dst_count());
    for (uint32_t i = 0; i < l + alpha; ++i)
      if (i < b || i >= e) dst_rows.push_back(ext.row(i));
    {
      // part 2 writes coefficient-domain rows; transformed in place below
      bconv_part2(scratch.data(), n, table, BConvTiling{}, dst_rows.data());
      ctx.counters().bconv += 1;
#pragma omp parallel for schedule(static)
      for (int64_t j = 0; j < static_cast<int64_t>(dst_rows.size()); ++j) {
        const uint32_t i =
            static_cast<uint32_t>(j) < b ? static_cast<uint32_t>(j)
                                         : static_cast<uint32_t>(j) + cnt;
        ctx.plan().forward_row(dst_rows[j], ext.global_prime_index(i));
      }
      ctx.counters().ntt += dst_rows.size();
    }
    hoist.digits.push_back(std::move(ext));
  }
  ctx.counters().modup += 1;
  return hoist;
}

std::pair<Polynomial, Polynomial> key_mult(CkksContext& ctx,
                                           const HoistState& hoist,
                                           const EvaluationKey& evk) {
  const uint32_t l = hoist.level;
  const uint32_t d_count = static_cast<uint32_t>(hoist.digits.size());
  if (evk.digits.size() < d_count)
    throw std::invalid_argument("evaluation key has too few digits");
  Polynomial v0(ctx.basis(), l, ctx.params().alpha, Domain::Evaluation, true,
                &ctx.pool());
  Polynomial v1 = v0.clone(&ctx.pool());
  const uint32_t n = v0.n();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < v0.rows(); ++i) {
    const uint32_t row = static_cast<uint32_t>(i);
    const uint32_t g = v0.global_prime_index(row);
    const PrimeContext& c = v0.prime_at(row);
    const int32_t q = static_cast<int32_t>(c.q);
    int32_t* o0 = v0.row(row);
    int32_t* o1 = v1.row(row);
    for (uint32_t k = 0; k < d_count; ++k) {
      const int32_t* dk = hoist.digits[k].row(row);
      const int32_t* eb = evk.digits[k].first.row(g);
      const int32_t* ea = evk.digits[k].second.row(g);
      for (uint32_t x = 0; x < n; ++x) {
        o0[x] += mont_mul(dk[x], eb[x], c);
        o1[x] += mont_mul(dk[x], ea[x], c);
      }
      // keep the running sums inside (-q, q): each MAC adds (-q, q)
      if (k % 3 == 2 || k + 1 == d_count)
        for (uint32_t x = 0; x < n; ++x) {
          o0[x] = narrow(o0[x], q);
          o1[x] = narrow(o1[x], q);
        }
    }
  }
  ctx.counters().keymult += d_count;
  return {std::move(v0), std::move(v1)};
}

Polynomial mod_down(CkksContext& ctx, const Polynomial& v) {
  auto out = mod_down_impl(ctx, v);
  ctx.counters().moddown += 1;
  return out;
}

std::pair<Polynomial, Polynomial> key_switch(CkksContext& ctx,
                                             const Polynomial& d,
                                             const EvaluationKey& evk) {
  auto hoist = mod_up(ctx, d);
  auto [v0, v1] = key_mult(ctx, hoist, evk);
  auto c0 = mod_down_impl(ctx, v0);
  auto c1 = mod_down_impl(ctx, v1);
  ctx.counters().moddown += 1;  // the pair counts as one logical ModDown
  return {std::move(c0), std::move(c1)};
}

Ciphertext rescale(CkksContext& ctx, const Ciphertext& ct) {
  check_pair(ct);
  const uint32_t l = ct.level;
  const SwitchTable& st = ctx.rescale_table(l);
  Ciphertext out;
  out.b = drop_and_divide(ctx, ct.b, st);
  out.a = drop_and_divide(ctx, ct.a, st);
  out.level = l - 2;
  out.scale = ct.scale / (Rational(BigInt(ctx.basis()->q_primes[l - 2].q) *
                                   ctx.basis()->q_primes[l - 1].q));
  out.pending_rescale = false;
  ctx.counters().rescale += 1;
  return out;
}

Ciphertext hmult(CkksContext& ctx, const Ciphertext& x_in,
                 const Ciphertext& y_in, const EvaluationKey& relin) {
  if (relin.kind != KeyKind::Relin)
    throw std::invalid_argument("hmult needs a relinearization key");
  Flushed fx(ctx, x_in), fy(ctx, y_in);
  const Ciphertext& x = *fx;
  const Ciphertext& y = *fy;
  check_pair(x);
  check_pair(y);
  if (x.level != y.level) throw std::invalid_argument("level mismatch");
  const uint32_t l = x.level;
  if (l < 4) throw std::invalid_argument("level exhausted");

  // tensor
  Polynomial d0 = ew_mul(x.b, y.b, &ctx.pool());
  Polynomial d1 = ew_mul(x.b, y.a, &ctx.pool());
  ew_add_inplace(d1, ew_mul(x.a, y.b, &ctx.pool()));
  Polynomial d2 = ew_mul(x.a, y.a, &ctx.pool());

  auto hoist = mod_up(ctx, d2);
  auto [v0, v1] = key_mult(ctx, hoist, relin);

  Ciphertext out;
  if (!ctx.params().lazy_rescale) {
    // merged ModDown + rescale: fold P*d into v over the Q rows (P*d vanishes
    // mod the P primes), then drop P and the trailing group in one ModSwitch
    const uint32_t n = v0.n();
    for (uint32_t i = 0; i < l; ++i) {
      const PrimeContext& c = v0.prime_at(i);
      const int32_t pm = static_cast<int32_t>(ctx.p_mont(i));
      const int32_t* r0 = d0.row(i);
      const int32_t* r1 = d1.row(i);
      int32_t* w0 = v0.row(i);
      int32_t* w1 = v1.row(i);
      for (uint32_t x = 0; x < n; ++x) {
        w0[x] += mont_mul(r0[x], pm, c);  // stays in (-2q, 2q)
        w1[x] += mont_mul(r1[x], pm, c);
      }
    }
    const SwitchTable& st = ctx.merged_table(l);
    out.b = drop_and_divide(ctx, v0, st);
    out.a = drop_and_divide(ctx, v1, st);
    ctx.counters().moddown += 1;
    out.level = l - 2;
    out.scale =
        x.scale * y.scale /
        Rational(BigInt(ctx.basis()->q_primes[l - 2].q) *
                 ctx.basis()->q_primes[l - 1].q);
    out.pending_rescale = false;
  } else {
    // lazy rescaling forces the unmerged path; the rescale is deferred
    auto c0 = mod_down_impl(ctx, v0);
    auto c1 = mod_down_impl(ctx, v1);
    ctx.counters().moddown += 1;
    out.b = ew_add(d0, c0, &ctx.pool());
    out.a = ew_add(d1, c1, &ctx.pool());
    out.level = l;
    out.scale = x.scale * y.scale;
    out.pending_rescale = true;
  }
  return out;
}

namespace {

Ciphertext rotate_with(CkksContext& ctx, const Ciphertext& ct,
                       const HoistState& hoist, int64_t r,
                       const EvaluationKey& evk) {
  if (evk.kind != KeyKind::Rotation || evk.rotation != r)
    throw std::invalid_argument("rotation key mismatch");
  auto [v0, v1] = key_mult(ctx, hoist, evk);
  auto c0 = mod_down_impl(ctx, v0);
  auto c1 = mod_down_impl(ctx, v1);
  ctx.counters().moddown += 1;
  const AutomorphismMap& map = ctx.rotation_map(r);
  Ciphertext out;
  ew_add_inplace(c0, ct.b);
  out.b = apply_automorphism(c0, map, &ctx.pool());
  out.a = apply_automorphism(c1, map, &ctx.pool());
  out.scale = ct.scale;
  out.level = ct.level;
  return out;
}

}  // namespace

Ciphertext hrot(CkksContext& ctx, const Ciphertext& ct_in, int64_t r,
                const EvaluationKey& evk) {
  Flushed f(ctx, ct_in);
  const Ciphertext& ct = *f;
  check_pair(ct);
  auto hoist = mod_up(ctx, ct.a);
  return rotate_with(ctx, ct, hoist, r, evk);
}

std::vector<Ciphertext> hoisted_rotations(
    CkksContext& ctx, const Ciphertext& ct_in,
    std::span<const int64_t> rotations,
    std::span<const EvaluationKey* const> evks) {
  if (rotations.size() != evks.size())
    throw std::invalid_argument("rotation/key count mismatch");
  Flushed f(ctx, ct_in);
  const Ciphertext& ct = *f;
  check_pair(ct);
  auto hoist = mod_up(ctx, ct.a);  // shared across all rotations
  std::vector<Ciphertext> out;
  out.reserve(rotations.size());
  for (size_t i = 0; i < rotations.size(); ++i) {
    if (rotations[i] == 0) {
      Ciphertext id;
      id.b = ct.b.clone(&ctx.pool());
      id.a = ct.a.clone(&ctx.pool());
      id.scale = ct.scale;
      id.level = ct.level;
      out.push_back(std::move(id));
      continue;
    }
    if (!evks[i]) throw std::invalid_argument("missing rotation key");
    out.push_back(rotate_with(ctx, ct, hoist, rotations[i], *evks[i]));
  }
  return out;
}

namespace {

// acc += x (.) y, element-wise over row-aligned polynomials, staying lazy.
void addmul_rows(Polynomial& acc, const Polynomial& x, const Polynomial& y) {
  const uint32_t n = acc.n();
  for (uint32_t i = 0; i < acc.rows(); ++i) {
    const PrimeContext& c = acc.prime_at(i);
    const int32_t q = static_cast<int32_t>(c.q);
    const int32_t* xr = x.row(i);
    const int32_t* yr = y.row(i);
    int32_t* o = acc.row(i);
    for (uint32_t k = 0; k < n; ++k)
      o[k] = narrow(o[k] + mont_mul(xr[k], yr[k], c), q);
  }
}

}  // namespace

Ciphertext hoisted_rotate_accumulate(
    CkksContext& ctx, const Ciphertext& ct_in,
    std::span<const int64_t> rotations, std::span<const Plaintext* const> pts,
    std::span<const EvaluationKey* const> evks) {
  if (rotations.empty() || rotations.size() != pts.size() ||
      rotations.size() != evks.size())
    throw std::invalid_argument("rotation/plaintext/key count mismatch");
  Flushed f(ctx, ct_in);
  const Ciphertext& ct = *f;
  check_pair(ct);
  const uint32_t l = ct.level;
  const uint32_t alpha = ctx.params().alpha;
  for (const Plaintext* pt : pts) {
    if (!pt) throw std::invalid_argument("missing plaintext");
    check_eval_mont(pt->poly, "hoisted accumulate");
    if (pt->level != l || pt->poly.p_count() != alpha)
      throw std::invalid_argument(
          "plaintexts must be P-extended at the ciphertext level");
    check_same_scale(pts[0]->scale, pt->scale);
  }

  auto hoist = mod_up(ctx, ct.a);
  // pre-ModDown accumulators over PQ, plus Q-only accumulators for the b-part
  // and the rotation-0 a-part contributions
  Polynomial acc0(ctx.basis(), l, alpha, Domain::Evaluation, true, &ctx.pool());
  Polynomial acc1 = acc0.clone(&ctx.pool());
  Polynomial acc_b(ctx.basis(), l, 0, Domain::Evaluation, true, &ctx.pool());
  Polynomial acc_a = acc_b.clone(&ctx.pool());
  bool used_pq = false;

  for (size_t i = 0; i < rotations.size(); ++i) {
    const int64_t r = rotations[i];
    const Polynomial& ptp = pts[i]->poly;
    if (r == 0) {
      // no key switch needed: accumulate pt * ct directly
      addmul_rows(acc_b, ct.b, ptp);
      addmul_rows(acc_a, ct.a, ptp);
      continue;
    }
    if (!evks[i] || evks[i]->kind != KeyKind::Rotation ||
        evks[i]->rotation != r)
      throw std::invalid_argument("rotation key mismatch");
    auto [v0, v1] = key_mult(ctx, hoist, *evks[i]);
    const AutomorphismMap& map = ctx.rotation_map(r);
    Polynomial w0 = apply_automorphism(v0, map, &ctx.pool());
    Polynomial w1 = apply_automorphism(v1, map, &ctx.pool());
    addmul_rows(acc0, w0, ptp);
    addmul_rows(acc1, w1, ptp);
    // the b-part needs no key material, only the rotation
    Polynomial rb = apply_automorphism(ct.b, map, &ctx.pool());
    addmul_rows(acc_b, rb, ptp);
    used_pq = true;
  }

  Ciphertext out;
  if (used_pq) {
    auto c0 = mod_down_impl(ctx, acc0);
    auto c1 = mod_down_impl(ctx, acc1);
    ctx.counters().moddown += 1;
    ew_add_inplace(acc_b, c0);
    ew_add_inplace(acc_a, c1);
  }
  out.b = std::move(acc_b);
  out.a = std::move(acc_a);
  out.scale = ct.scale * pts[0]->scale;
  out.level = l;
  return out;
}

// --- serialization ----------------------------------------------------------

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t& off) {
  if (off + 4 > b.size()) throw std::invalid_argument("truncated input");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[off + i]) << (8 * i);
  off += 4;
  return v;
}

uint64_t get_u64(std::span<const uint8_t> b, size_t& off) {
  if (off + 8 > b.size()) throw std::invalid_argument("truncated input");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[off + i]) << (8 * i);
  off += 8;
  return v;
}

void put_bigint(std::vector<uint8_t>& out, const BigInt& v) {
  std::vector<uint8_t> bytes;
  BigInt abs_v = v < 0 ? BigInt(-v) : v;
  boost::multiprecision::export_bits(abs_v, std::back_inserter(bytes), 8);
  put_u32(out, static_cast<uint32_t>(bytes.size()));
  out.push_back(v < 0 ? 1 : 0);
  out.insert(out.end(), bytes.begin(), bytes.end());
}

BigInt get_bigint(std::span<const uint8_t> b, size_t& off) {
  const uint32_t len = get_u32(b, off);
  if (off + 1 + len > b.size()) throw std::invalid_argument("truncated input");
  const bool neg = b[off] != 0;
  ++off;
  BigInt v = 0;
  if (len > 0)
    boost::multiprecision::import_bits(v, b.begin() + off, b.begin() + off + len, 8);
  off += len;
  return neg ? BigInt(-v) : v;
}

void put_rational(std::vector<uint8_t>& out, const Rational& r) {
  put_bigint(out, boost::multiprecision::numerator(r));
  put_bigint(out, boost::multiprecision::denominator(r));
}

Rational get_rational(std::span<const uint8_t> b, size_t& off) {
  const BigInt num = get_bigint(b, off);
  const BigInt den = get_bigint(b, off);
  if (den == 0) throw std::invalid_argument("zero denominator");
  return Rational(num, den);
}

void put_poly(std::vector<uint8_t>& out, const Polynomial& p) {
  auto bytes = serialize_poly(p);
  put_u64(out, bytes.size());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

Polynomial get_poly(std::span<const uint8_t> b, size_t& off,
                    std::shared_ptr<const RnsBasis> basis, BufferPool* pool) {
  const uint64_t len = get_u64(b, off);
  if (off + len > b.size()) throw std::invalid_argument("truncated input");
  auto p = deserialize_poly(b.subspan(off, len), std::move(basis), pool);
  off += len;
  return p;
}

constexpr uint32_t kCtMagic = 0x31535443;   // "CTS1"
constexpr uint32_t kEvkMagic = 0x314b5645;  // "EVK1"

}  // namespace

std::vector<uint8_t> serialize_ciphertext(const Ciphertext& ct) {
  std::vector<uint8_t> out;
  put_u32(out, kCtMagic);
  put_u32(out, 1);  // version
  put_u32(out, ct.level);
  out.push_back(ct.pending_rescale ? 1 : 0);
  put_rational(out, ct.scale);
  put_poly(out, ct.b);
  put_poly(out, ct.a);
  return out;
}

Ciphertext deserialize_ciphertext(std::span<const uint8_t> bytes,
                                  std::shared_ptr<const RnsBasis> basis,
                                  BufferPool* pool) {
  size_t off = 0;
  if (get_u32(bytes, off) != kCtMagic || get_u32(bytes, off) != 1)
    throw std::invalid_argument("bad ciphertext header");
  Ciphertext ct;
  ct.level = get_u32(bytes, off);
  if (off >= bytes.size()) throw std::invalid_argument("truncated input");
  ct.pending_rescale = bytes[off++] != 0;
  ct.scale = get_rational(bytes, off);
  ct.b = get_poly(bytes, off, basis, pool);
  ct.a = get_poly(bytes, off, basis, pool);
  return ct;
}

std::vector<uint8_t> serialize_evk(const EvaluationKey& evk) {
  std::vector<uint8_t> out;
  put_u32(out, kEvkMagic);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<uint32_t>(evk.kind));
  put_u64(out, static_cast<uint64_t>(evk.rotation));
  put_u32(out, static_cast<uint32_t>(evk.digits.size()));
  for (const auto& [b, a] : evk.digits) {
    put_poly(out, b);
    put_poly(out, a);
  }
  return out;
}

EvaluationKey deserialize_evk(std::span<const uint8_t> bytes,
                              std::shared_ptr<const RnsBasis> basis,
                              BufferPool* pool) {
  size_t off = 0;
  if (get_u32(bytes, off) != kEvkMagic || get_u32(bytes, off) != 1)
    throw std::invalid_argument("bad key header");
  EvaluationKey evk;
  evk.kind = static_cast<KeyKind>(get_u32(bytes, off));
  evk.rotation = static_cast<int64_t>(get_u64(bytes, off));
  const uint32_t d = get_u32(bytes, off);
  evk.digits.reserve(d);
  for (uint32_t k = 0; k < d; ++k) {
    auto b = get_poly(bytes, off, basis, pool);
    auto a = get_poly(bytes, off, basis, pool);
    evk.digits.emplace_back(std::move(b), std::move(a));
  }
  return evk;
}

}  // namespace ckks32
