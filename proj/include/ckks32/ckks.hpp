#pragma once

// CKKS mechanism layer: encode/decode with double-prime scaling, key
// generation, encrypt/decrypt, HAdd/PAdd/PMult/HMult/HRot, key switching
// (ModUp -> KeyMult -> ModDown), rescaling, ModDown merging, lazy rescaling
// and hoisted rotation routines, with instrumentation counters.

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ckks32/automorphism.hpp"
#include "ckks32/bconv.hpp"
#include "ckks32/ntt.hpp"
#include "ckks32/poly.hpp"
#include "ckks32/rns.hpp"

namespace ckks32 {

// Exact scale tracking: double-prime group products are not powers of two, so
// the scale is carried as an exact rational and converted to double only for
// tolerance checks.
using Rational = boost::multiprecision::cpp_rational;

double log2_rational(const Rational& r);

struct OpCounters {
  uint64_t modup = 0;    // one per ModUp of a polynomial (all digits)
  uint64_t moddown = 0;  // one per ModDown / merged ModDown+rescale
  uint64_t ntt = 0;      // forward-transformed rows
  uint64_t intt = 0;     // inverse-transformed rows
  uint64_t keymult = 0;  // digit multiply-accumulates
  uint64_t bconv = 0;    // base-conversion invocations (part 2 calls)
  uint64_t rescale = 0;  // standalone rescales (merged ModDown+rescale counts
                         // as one moddown, zero rescales)
  void reset() { *this = OpCounters{}; }
};

struct CkksParams {
  uint32_t n = 1u << 16;
  uint32_t l = 54;
  uint32_t alpha = 14;
  uint32_t delta_bits = 48;
  uint32_t hamming = 256;  // secret Hamming weight
  double sigma = 3.2;      // error std deviation
  bool lazy_rescale = false;
};

struct Plaintext {
  Polynomial poly;  // evaluation domain, Montgomery
  Rational scale;
  uint32_t level = 0;  // Q-prefix length
};

struct Ciphertext {
  Polynomial b, a;  // share basis prefix, domain, Montgomery flag
  Rational scale;
  uint32_t level = 0;
  bool pending_rescale = false;  // lazy-rescaling bookkeeping
};

struct SecretKey {
  Polynomial s;                // full basis (L+alpha rows), evaluation, Montgomery
  std::vector<int8_t> coeffs;  // ternary coefficients, Hamming weight H
};

struct PublicKey {
  Polynomial b, a;  // full Q basis, evaluation, Montgomery
};

enum class KeyKind : uint8_t { Relin = 0, Rotation = 1 };

struct EvaluationKey {
  KeyKind kind = KeyKind::Relin;
  int64_t rotation = 0;
  // D gadget digits, each a (b, a) pair over the full PQ basis.
  std::vector<std::pair<Polynomial, Polynomial>> digits;
};

// ModUp-extended digit polynomials of one a-part, shared across rotations.
struct HoistState {
  uint32_t level = 0;
  std::vector<Polynomial> digits;  // each over (level Q + alpha P) rows
};

// Conversion table for the divide-and-drop ModSwitch variants (ModDown,
// rescale, merged ModDown+rescale): the tail source rows are converted to the
// surviving Q-prefix, subtracted, and the result multiplied by the divisor's
// inverse (one canonical Montgomery constant per destination row).
struct SwitchTable {
  BConvTable table;
  std::vector<uint32_t> div_inv_mont;
};

class CkksContext {
 public:
  explicit CkksContext(CkksParams params);

  const CkksParams& params() const { return params_; }
  const std::shared_ptr<const RnsBasis>& basis() const { return basis_; }
  const NttPlan& plan() const { return plan_; }
  BufferPool& pool() { return pool_; }
  OpCounters& counters() { return counters_; }
  uint32_t slots() const { return params_.n / 2; }
  uint32_t num_digits(uint32_t level) const {
    return (level + params_.alpha - 1) / params_.alpha;
  }
  // Default fresh scale 2^delta_bits.
  Rational default_scale() const;

  // Cached conversion tables / maps (built on first use).
  const BConvTable& modup_table(uint32_t level, uint32_t digit);
  const SwitchTable& moddown_table(uint32_t level);  // P -> Q-prefix
  const SwitchTable& rescale_table(uint32_t level);  // trailing group -> rest
  const SwitchTable& merged_table(uint32_t level);   // trailing group + P -> rest
  const AutomorphismMap& rotation_map(int64_t r);
  const CrtContext& crt_prefix(uint32_t count);
  // P mod q_i as a canonical Montgomery constant, one per Q prime.
  uint32_t p_mont(uint32_t q_idx) const { return p_mont_[q_idx]; }

  // Q-prefix product (level primes) and P product, exact.
  BigInt q_product(uint32_t level) const;
  const BigInt& p_product() const { return p_product_; }

 private:
  CkksParams params_;
  std::shared_ptr<const RnsBasis> basis_;
  std::shared_ptr<const TwiddleTables> twiddles_;
  NttPlan plan_;
  BufferPool pool_;
  OpCounters counters_;
  BigInt p_product_;
  std::vector<uint32_t> p_mont_;
  std::map<uint64_t, BConvTable> modup_cache_;
  std::map<uint64_t, SwitchTable> switch_cache_;
  std::map<int64_t, AutomorphismMap> rot_cache_;
  std::map<uint32_t, CrtContext> crt_cache_;
};

// --- encoding ---------------------------------------------------------------

// slots.size() <= N/2; missing slots are zero. p_extend adds the alpha P rows
// (same integer coefficients reduced mod the P primes) for plaintexts that
// multiply pre-ModDown accumulators.
Plaintext encode(CkksContext& ctx, std::span<const std::complex<double>> slots,
                 const Rational& scale, uint32_t level, bool p_extend = false);
std::vector<std::complex<double>> decode(CkksContext& ctx, const Plaintext& pt);

// --- keys and encryption ----------------------------------------------------

SecretKey keygen(CkksContext& ctx, std::mt19937_64& rng);
PublicKey pubkey_gen(CkksContext& ctx, const SecretKey& sk, std::mt19937_64& rng);
// Rotation keys re-target phi_{-r}(s); pass rotation = 0 for Relin.
EvaluationKey evk_gen(CkksContext& ctx, const SecretKey& sk, KeyKind kind,
                      int64_t rotation, std::mt19937_64& rng);

Ciphertext encrypt(CkksContext& ctx, const Plaintext& pt, const SecretKey& sk,
                   std::mt19937_64& rng);
Ciphertext encrypt(CkksContext& ctx, const Plaintext& pt, const PublicKey& pk,
                   std::mt19937_64& rng);
Plaintext decrypt(CkksContext& ctx, const Ciphertext& ct, const SecretKey& sk);

// --- mechanisms -------------------------------------------------------------

Ciphertext hadd(CkksContext& ctx, const Ciphertext& x, const Ciphertext& y);
Ciphertext padd(CkksContext& ctx, const Ciphertext& ct, const Plaintext& pt);
Ciphertext pmult(CkksContext& ctx, const Ciphertext& ct, const Plaintext& pt);
// Drops the trailing double-prime group; scale divided by its exact product.
Ciphertext rescale(CkksContext& ctx, const Ciphertext& ct);

// Key-switching pipeline pieces (exposed for hoisting and testing).
HoistState mod_up(CkksContext& ctx, const Polynomial& d);
// KeyMult only: accumulates digit MACs against the evk; outputs over PQ-prefix.
std::pair<Polynomial, Polynomial> key_mult(CkksContext& ctx,
                                           const HoistState& hoist,
                                           const EvaluationKey& evk);
// v over (level Q + alpha P) rows -> level Q rows, divided by P.
Polynomial mod_down(CkksContext& ctx, const Polynomial& v);
// Full pipeline: ModUp -> KeyMult -> ModDown.
std::pair<Polynomial, Polynomial> key_switch(CkksContext& ctx,
                                             const Polynomial& d,
                                             const EvaluationKey& evk);

// Merged path (single ModSwitch dropping P and the trailing group) unless the
// context's lazy-rescaling policy is set, in which case the unmerged ModDown
// path runs and the output carries a pending rescale at scale^2.
Ciphertext hmult(CkksContext& ctx, const Ciphertext& x, const Ciphertext& y,
                 const EvaluationKey& relin);
Ciphertext hrot(CkksContext& ctx, const Ciphertext& ct, int64_t r,
                const EvaluationKey& evk);

// One shared ModUp across all rotations.
std::vector<Ciphertext> hoisted_rotations(
    CkksContext& ctx, const Ciphertext& ct, std::span<const int64_t> rotations,
    std::span<const EvaluationKey* const> evks);
// Additionally defers the single ModDown past the sum of pt_k * rot_k(ct).
// Plaintexts must be P-extended; rotation 0 entries need no evk (pass null).
Ciphertext hoisted_rotate_accumulate(
    CkksContext& ctx, const Ciphertext& ct, std::span<const int64_t> rotations,
    std::span<const Plaintext* const> pts,
    std::span<const EvaluationKey* const> evks);

// --- serialization ----------------------------------------------------------

std::vector<uint8_t> serialize_ciphertext(const Ciphertext& ct);
Ciphertext deserialize_ciphertext(std::span<const uint8_t> bytes,
                                  std::shared_ptr<const RnsBasis> basis,
                                  BufferPool* pool);
std::vector<uint8_t> serialize_evk(const EvaluationKey& evk);
EvaluationKey deserialize_evk(std::span<const uint8_t> bytes,
                              std::shared_ptr<const RnsBasis> basis,
                              BufferPool* pool);

}  // namespace ckks32
