#include "ckks32/rns.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ckks32 {
namespace {

// Largest k primes ≡ 1 mod 2n strictly below `top`, descending.
std::vector<uint32_t> scan_down(uint64_t top, uint32_t two_n, size_t count,
                                uint64_t stop_at = 0) {
  std::vector<uint32_t> out;
  uint64_t k = (top - 1) / two_n * two_n + 1;
  if (k >= top) k -= two_n;
  for (; k > two_n && k > stop_at && out.size() < count; k -= two_n) {
    if (is_prime_u64(k)) out.push_back(static_cast<uint32_t>(k));
  }
  return out;
}

struct DeltaGroup {
  uint32_t a, b;  // a >= b
  double log2_product() const {
    return std::log2(static_cast<double>(a)) + std::log2(static_cast<double>(b));
  }
};

// Greedy pairing: repeatedly match the smallest candidate with the largest
// partner keeping the product inside [2^(db-1), 2^(db+1)); when the strict
// window cannot supply all groups, widen it geometrically (bounded retries).
std::vector<DeltaGroup> pair_delta_groups(std::vector<uint32_t> avail,
                                          size_t groups_needed,
                                          uint32_t delta_bits) {
  std::sort(avail.begin(), avail.end());
  std::vector<DeltaGroup> groups;
  double lo = std::ldexp(1.0, static_cast<int>(delta_bits) - 1);
  double hi = std::ldexp(1.0, static_cast<int>(delta_bits) + 1);
  for (int widen = 0; groups.size() < groups_needed && widen <= 12; ++widen) {
    size_t i = 0;
    while (i < avail.size() && groups.size() < groups_needed) {
      const double a = static_cast<double>(avail[i]);
      size_t j = avail.size() - 1;
      while (j > i && a * static_cast<double>(avail[j]) >= hi) --j;
      if (j > i && a * static_cast<double>(avail[j]) >= lo) {
        groups.push_back({std::max(avail[i], avail[j]), std::min(avail[i], avail[j])});
        avail.erase(avail.begin() + j);
        avail.erase(avail.begin() + i);
      } else {
        ++i;
      }
    }
    lo /= 2;
    hi *= 2;
  }
  if (groups.size() < groups_needed)
    throw BasisExhausted("cannot form enough delta groups in the prime window");
  return groups;
}

}  // namespace

std::shared_ptr<const RnsBasis> generate_basis(uint32_t n, uint32_t l,
                                               uint32_t alpha,
                                               uint32_t delta_bits) {
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("n must be a power of two");
  if (l == 0 || l % 2 != 0) throw std::invalid_argument("l must be positive and even");
  const uint64_t two_n = 2ull * n;
  // Cap keeps the NTT lazy ranges int32-safe and the BConv int64 accumulator
  // exact even for the widest (alpha+2)-limb conversion source.
  const uint64_t cap =
      std::min<uint64_t>(1ull << 29, (1ull << 32) / std::max<uint32_t>(alpha + 2, 3));
  const uint64_t slots = cap > two_n ? (cap - two_n) / two_n : 0;
  if (slots < l + alpha)
    throw BasisExhausted("prime window smaller than requested prime count");

  auto p_list = scan_down(cap, static_cast<uint32_t>(two_n), alpha);
  if (p_list.size() < alpha) throw BasisExhausted("too few auxiliary primes");
  const uint64_t p_min = alpha ? p_list.back() : cap;

  // Q candidates: scan downward from sqrt(2*delta) so adjacent candidates
  // pair naturally; extend upward to the cap only when the supply is short.
  uint64_t q_top = std::min<uint64_t>(
      cap, static_cast<uint64_t>(std::sqrt(std::ldexp(1.0, static_cast<int>(delta_bits) + 1))));
  // ensure q_top <= p_min so Q and P never collide
  q_top = std::min(q_top, p_min);
  auto q_cands = scan_down(q_top, static_cast<uint32_t>(two_n), l);
  if (q_cands.size() < l) {
    auto extra = scan_down(p_min, static_cast<uint32_t>(two_n),
                           static_cast<size_t>(-1), q_top - 1);
    q_cands.insert(q_cands.end(), extra.begin(), extra.end());
  }
  std::sort(q_cands.begin(), q_cands.end());
  q_cands.erase(std::unique(q_cands.begin(), q_cands.end()), q_cands.end());
  if (q_cands.size() < l) throw BasisExhausted("too few main primes");

  auto groups = pair_delta_groups(std::move(q_cands), l / 2, delta_bits);
  // Worst-matched groups first: rescaling drops trailing groups, which are
  // then always the ones closest to the target scale.
  std::stable_sort(groups.begin(), groups.end(),
                   [&](const DeltaGroup& x, const DeltaGroup& y) {
                     return std::abs(x.log2_product() - delta_bits) >
                            std::abs(y.log2_product() - delta_bits);
                   });

  auto basis = std::make_shared<RnsBasis>();
  basis->n = n;
  basis->delta_bits = delta_bits;
  basis->q_primes.reserve(l);
  for (const auto& g : groups) {
    basis->q_primes.push_back(make_prime_context(g.a, n));
    basis->q_primes.push_back(make_prime_context(g.b, n));
  }
  basis->p_primes.reserve(alpha);
  for (uint32_t p : p_list) basis->p_primes.push_back(make_prime_context(p, n));
  return basis;
}

uint64_t RnsBasis::hash() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(n);
  mix(delta_bits);
  for (const auto& c : q_primes) mix(c.q);
  mix(0xffffffffffffffffull);
  for (const auto& c : p_primes) mix(c.q);
  return h;
}

CrtContext::CrtContext(std::span<const PrimeContext> primes) {
  modulus_ = 1;
  primes_.reserve(primes.size());
  for (const auto& c : primes) {
    primes_.push_back(c.q);
    modulus_ *= c.q;
  }
  lift_.reserve(primes.size());
  for (uint32_t q : primes_) {
    BigInt m_hat = modulus_ / q;
    uint32_t inv = static_cast<uint32_t>(
        inv_mod(static_cast<uint64_t>(m_hat % q), q));
    lift_.push_back(m_hat * inv);
  }
}

BigInt CrtContext::reconstruct(std::span<const uint32_t> residues) const {
  if (residues.size() != primes_.size()) throw std::invalid_argument("residue count mismatch");
  BigInt acc = 0;
  for (size_t i = 0; i < primes_.size(); ++i) acc += lift_[i] * residues[i];
  return acc % modulus_;
}

std::vector<uint32_t> CrtContext::decompose(const BigInt& value) const {
  BigInt v = value % modulus_;
  if (v < 0) v += modulus_;
  std::vector<uint32_t> out;
  out.reserve(primes_.size());
  for (uint32_t q : primes_) out.push_back(static_cast<uint32_t>(v % q));
  return out;
}

namespace {
constexpr uint32_t kBasisMagic = 0x31534252u;  // "RBS1"
constexpr uint32_t kBasisVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t get_u32(std::span<const uint8_t> bytes, size_t& pos) {
  if (pos + 4 > bytes.size()) throw std::runtime_error("truncated basis blob");
  uint32_t v = static_cast<uint32_t>(bytes[pos]) |
               static_cast<uint32_t>(bytes[pos + 1]) << 8 |
               static_cast<uint32_t>(bytes[pos + 2]) << 16 |
               static_cast<uint32_t>(bytes[pos + 3]) << 24;
  pos += 4;
  return v;
}
}  // namespace

std::vector<uint8_t> serialize_basis(const RnsBasis& basis) {
  std::vector<uint8_t> out;
  put_u32(out, kBasisMagic);
  put_u32(out, kBasisVersion);
  put_u32(out, basis.n);
  put_u32(out, static_cast<uint32_t>(basis.l()));
  put_u32(out, static_cast<uint32_t>(basis.alpha()));
  put_u32(out, basis.delta_bits);
  for (const auto& c : basis.q_primes) put_u32(out, c.q);
  for (const auto& c : basis.p_primes) put_u32(out, c.q);
  return out;
}

std::shared_ptr<const RnsBasis> deserialize_basis(std::span<const uint8_t> bytes) {
  size_t pos = 0;
  if (get_u32(bytes, pos) != kBasisMagic) throw std::runtime_error("bad basis magic");
  if (get_u32(bytes, pos) != kBasisVersion) throw std::runtime_error("bad basis version");
  auto basis = std::make_shared<RnsBasis>();
  basis->n = get_u32(bytes, pos);
  uint32_t l = get_u32(bytes, pos);
  uint32_t alpha = get_u32(bytes, pos);
  basis->delta_bits = get_u32(bytes, pos);
  for (uint32_t i = 0; i < l; ++i)
    basis->q_primes.push_back(make_prime_context(get_u32(bytes, pos), basis->n));
  for (uint32_t i = 0; i < alpha; ++i)
    basis->p_primes.push_back(make_prime_context(get_u32(bytes, pos), basis->n));
  return basis;
}

}  // namespace ckks32
