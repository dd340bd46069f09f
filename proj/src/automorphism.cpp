#include "ckks32/automorphism.hpp"

#include <bit>
#include <stdexcept>

#include "ckks32/ntt.hpp"

namespace ckks32 {
namespace {

uint64_t pow5(int64_t e, uint32_t n) {
  // 5 has order n/2 mod 2n; exponents reduce mod n/2.
  const int64_t half = static_cast<int64_t>(n) / 2;
  e %= half;
  if (e < 0) e += half;
  uint64_t g = 1;
  const uint64_t mod = 2ull * n;
  for (int64_t i = 0; i < e; ++i) g = g * 5 % mod;
  return g;
}

// Rotation by r slots acts on evaluation columns via 5^-r.
uint64_t galois_for_rotation(uint32_t n, int64_t r) { return pow5(-r, n); }

uint32_t phi(uint32_t i, uint64_t g, uint32_t n) {
  const uint64_t two_n = 2ull * n;
  return static_cast<uint32_t>((((2ull * i + 1) * g) % two_n - 1) / 2);
}

}  // namespace

uint32_t map_index(uint32_t i, int64_t r, uint32_t n) {
  const uint32_t bits = static_cast<uint32_t>(std::countr_zero(n));
  const uint64_t g = galois_for_rotation(n, r);
  return bit_reverse(phi(bit_reverse(i, bits), g, n), bits);
}

AutomorphismMap::AutomorphismMap(uint32_t n, int64_t r, uint64_t galois_elt,
                                 uint64_t galois_inv)
    : n_(n), r_(r) {
  const uint32_t bits = static_cast<uint32_t>(std::countr_zero(n));
  dest_.resize(n);
  src_.resize(n);
  coeff_idx_.resize(n);
  coeff_sign_.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t d = bit_reverse(phi(bit_reverse(i, bits), galois_elt, n), bits);
    dest_[i] = d;
    src_[d] = i;
  }
  // The evaluation permutation gathers column phi^-1(j) into j, which in the
  // coefficient domain is the substitution X -> X^(g^-1): build the scatter
  // from the inverse element so both domains realize the same ring map.
  const uint64_t two_n = 2ull * n;
  for (uint32_t k = 0; k < n; ++k) {
    const uint64_t e = static_cast<uint64_t>(k) * galois_inv % two_n;
    if (e < n) {
      coeff_idx_[k] = static_cast<uint32_t>(e);
      coeff_sign_[k] = 1;
    } else {
      coeff_idx_[k] = static_cast<uint32_t>(e - n);
      coeff_sign_[k] = -1;
    }
  }
}

AutomorphismMap AutomorphismMap::rotation(uint32_t n, int64_t r) {
  return AutomorphismMap(n, r, galois_for_rotation(n, r), pow5(r, n));
}

AutomorphismMap AutomorphismMap::conjugation(uint32_t n) {
  // 2n - 1 is its own inverse mod 2n.
  return AutomorphismMap(n, 0, 2ull * n - 1, 2ull * n - 1);
}

Polynomial apply_automorphism(const Polynomial& p, const AutomorphismMap& map,
                              BufferPool* pool) {
  if (p.n() != map.n()) throw std::invalid_argument("ring degree mismatch");
  Polynomial out(p.basis(), p.q_count(), p.p_count(), p.domain(), p.mont(), pool);
  const uint32_t n = p.n();
  if (p.domain() == Domain::Evaluation) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < p.rows(); ++i) {
      const int32_t* in = p.row(static_cast<uint32_t>(i));
      int32_t* o = out.row(static_cast<uint32_t>(i));
      for (uint32_t j = 0; j < n; ++j) o[j] = in[map.src(j)];
    }
  } else {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < p.rows(); ++i) {
      const int32_t* in = p.row(static_cast<uint32_t>(i));
      int32_t* o = out.row(static_cast<uint32_t>(i));
      for (uint32_t k = 0; k < n; ++k) {
        const int32_t v = in[k];
        o[map.coeff_idx(k)] = map.coeff_sign(k) > 0 ? v : -v;
      }
    }
  }
  return out;
}

void apply_automorphism_inplace(Polynomial& p, const AutomorphismMap& map) {
  if (p.domain() != Domain::Evaluation)
    throw std::invalid_argument("in-place variant is evaluation-domain only");
  if (p.n() != map.n()) throw std::invalid_argument("ring degree mismatch");
  const uint32_t n = p.n();
  std::vector<uint8_t> visited(n);
  for (uint32_t row = 0; row < p.rows(); ++row) {
    std::fill(visited.begin(), visited.end(), 0);
    int32_t* v = p.row(row);
    for (uint32_t start = 0; start < n; ++start) {
      if (visited[start]) continue;
      visited[start] = 1;
      int32_t carry = v[start];
      uint32_t cur = map.dest(start);
      while (cur != start) {
        visited[cur] = 1;
        std::swap(carry, v[cur]);
        cur = map.dest(cur);
      }
      v[start] = carry;
    }
  }
}

}  // namespace ckks32
