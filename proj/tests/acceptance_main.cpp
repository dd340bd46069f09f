// Acceptance suite: one pass/fail line per criterion, each with a wall-clock
// budget. Exit status is the number of failed criteria. argv[1] (optional)
// points at the benchmark CLI binary used by criterion 10.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ckks32/bconv.hpp"
#include "ckks32/ckks.hpp"
#include "ckks32/ntt.hpp"
#include "oracles.hpp"

using namespace ckks32;

namespace {

std::string g_cli_path = "tools/ckks32_bench";

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

Polynomial random_coeff_poly(const std::shared_ptr<const RnsBasis>& basis,
                             uint32_t qc, uint32_t pc, BufferPool* pool,
                             std::mt19937_64& rng) {
  Polynomial p(basis, qc, pc, Domain::Coefficient, false, pool);
  for (uint32_t i = 0; i < p.rows(); ++i)
    for (uint32_t j = 0; j < p.n(); ++j)
      p.row(i)[j] = static_cast<int32_t>(rng() % p.prime_at(i).q);
  return p;
}

std::vector<std::complex<double>> random_unit_slots(std::mt19937_64& rng,
                                                    uint32_t count) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<std::complex<double>> u(count);
  for (auto& v : u) v = {dist(rng), dist(rng)};
  return u;
}

double max_err(const std::vector<std::complex<double>>& got,
               const std::vector<std::complex<double>>& want) {
  double m = 0;
  for (size_t i = 0; i < got.size(); ++i)
    m = std::max(m, std::abs(got[i] - want[i]));
  return m;
}

// --- 1: Montgomery reduction vs wide-division reference ---------------------

Outcome criterion_1() {
  Outcome out;
  std::mt19937_64 rng(11);
  std::vector<std::shared_ptr<const RnsBasis>> bases = {
      generate_basis(1u << 16, 54, 14, 48), generate_basis(1u << 10, 8, 2, 48)};
  uint64_t pairs = 0;
  for (const auto& basis : bases) {
    std::vector<PrimeContext> primes = basis->q_primes;
    primes.insert(primes.end(), basis->p_primes.begin(),
                  basis->p_primes.end());
    std::vector<uint64_t> rinv(primes.size());
    for (size_t i = 0; i < primes.size(); ++i)
      rinv[i] = inv_mod((1ull << 32) % primes[i].q, primes[i].q);

    for (uint64_t it = 0; it < 500000; ++it, ++pairs) {
      const size_t pi = rng() % primes.size();
      const PrimeContext& c = primes[pi];
      const int64_t bound = static_cast<int64_t>(c.q) << 31;
      std::uniform_int_distribution<int64_t> dist(-bound, bound - 1);
      const int64_t a = dist(rng);
      const int32_t got = mont_reduce(a, c);
      if (!(got > -static_cast<int64_t>(c.q) &&
            got < static_cast<int64_t>(c.q))) {
        out.fail("result outside (-q, q)");
        return out;
      }
      const uint32_t want = static_cast<uint32_t>(
          static_cast<unsigned __int128>(reference_reduce(a, c.q)) * rinv[pi] %
          c.q);
      if (correct_lazy(got, c.q) != want) {
        out.fail("value mismatch at q=" + std::to_string(c.q));
        return out;
      }
    }
  }
  out.detail = std::to_string(pairs) + " pairs over 2 bases";
  return out;
}

// --- 2: NTT convolution vs schoolbook oracle --------------------------------

Outcome criterion_2() {
  Outcome out;
  std::mt19937_64 rng(13);
  BufferPool pool;
  for (uint32_t logn : {4u, 6u, 8u}) {
    const uint32_t n = 1u << logn;
    auto basis = generate_basis(n, 2, 1, 48);
    auto tw = build_twiddles(basis);
    NttPlan plan(tw, {2, n / 2, 2, 2, 1, false, 0});
    for (int rep = 0; rep < 100; ++rep) {
      auto a = random_coeff_poly(basis, 2, 1, &pool, rng);
      auto b = random_coeff_poly(basis, 2, 1, &pool, rng);
      auto ac = a.clone(&pool);
      auto bc = b.clone(&pool);
      ntt_forward(a, plan);
      ntt_forward(b, plan);
      auto prod = ew_mul(a, b, &pool);
      intt_inverse(prod, plan);
      for (uint32_t i = 0; i < prod.rows(); ++i) {
        const uint32_t q = prod.prime_at(i).q;
        std::vector<uint32_t> av(n), bv(n);
        for (uint32_t j = 0; j < n; ++j) {
          av[j] = correct(ac.row(i)[j], q);
          bv[j] = correct(bc.row(i)[j], q);
        }
        const auto want = oracles::negacyclic_mul(av, bv, q);
        for (uint32_t j = 0; j < n; ++j)
          if (correct(prod.row(i)[j], q) != want[j]) {
            out.fail("mismatch at N=" + std::to_string(n));
            return out;
          }
      }
    }
  }
  out.detail = "100 pairs x 3 primes at each N in {16, 64, 256}";
  return out;
}

// --- 3: plan invariance at N = 2^16 -----------------------------------------

Outcome criterion_3() {
  Outcome out;
  std::mt19937_64 rng(17);
  BufferPool pool;
  const uint32_t n = 1u << 16;
  auto basis = generate_basis(n, 2, 0, 48);
  auto tw = build_twiddles(basis);

  std::vector<NttPlanParams> plans;
  for (uint32_t n1 : {64u, 256u, 512u})
    for (uint32_t g : {8u, 16u})
      for (bool ot : {false, true})
        plans.push_back({n1, n / n1, g, g, std::min(16u, n / n1), ot, 0});
  NttPlan ref(tw, NttPlanParams{});  // default configuration

  for (int rep = 0; rep < 10; ++rep) {
    auto base = random_coeff_poly(basis, 2, 0, &pool, rng);
    auto fwd_ref = base.clone(&pool);
    ntt_forward(fwd_ref, ref);
    auto inv_ref = fwd_ref.clone(&pool);
    intt_inverse(inv_ref, ref);
    for (const auto& pp : plans) {
      NttPlan plan(tw, pp);
      auto f = base.clone(&pool);
      ntt_forward(f, plan);
      for (uint32_t i = 0; i < f.rows(); ++i)
        if (std::memcmp(f.row(i), fwd_ref.row(i), sizeof(int32_t) * n) != 0) {
          out.fail("forward mismatch");
          return out;
        }
      intt_inverse(f, plan);
      for (uint32_t i = 0; i < f.rows(); ++i)
        if (std::memcmp(f.row(i), inv_ref.row(i), sizeof(int32_t) * n) != 0) {
          out.fail("inverse mismatch");
          return out;
        }
    }
  }
  out.detail = std::to_string(plans.size() + 1) +
               " plans bit-identical on 10 polynomials";
  return out;
}

// --- 4: base-conversion error membership ------------------------------------

Outcome criterion_4() {
  Outcome out;
  std::mt19937_64 rng(19);
  BufferPool pool;
  const uint32_t alpha = 3;
  for (uint32_t logn : {4u, 5u, 6u}) {
    const uint32_t n = 1u << logn;
    auto basis = generate_basis(n, 2, alpha, 48);
    auto tw = build_twiddles(basis);
    NttPlan plan(tw, {2, n / 2, 2, 2, 1, false, 0});
    BConvTable t = make_bconv_table(basis->p_primes,
                                    std::span(basis->q_primes.data(), 2));
    CrtContext src_crt(basis->p_primes);
    const BigInt p_prod = src_crt.modulus();

    auto a = random_coeff_poly(basis, 0, alpha, &pool, rng);
    auto coeffs = a.clone(&pool);
    ntt_forward(a, plan);
    auto conv = mod_switch(a, 2, 0, t, plan, BConvTiling{}, &pool);
    intt_inverse(conv, plan);

    for (uint32_t j = 0; j < n; ++j) {
      std::vector<uint32_t> res;
      for (uint32_t i = 0; i < alpha; ++i)
        res.push_back(correct(coeffs.row(i)[j], basis->p_primes[i].q));
      const BigInt exact = src_crt.reconstruct(res);
      for (uint32_t i = 0; i < 2; ++i) {
        const uint32_t q = basis->q_primes[i].q;
        const uint32_t got = correct(conv.row(i)[j], q);
        bool member = false;
        for (uint32_t e = 0; e < alpha && !member; ++e)
          member = got == static_cast<uint32_t>((exact + e * p_prod) % q);
        if (!member) {
          out.fail("overflow multiple outside [0, alpha) at N=" +
                   std::to_string(n));
          return out;
        }
      }
    }
  }
  out.detail = "every coefficient = exact + e*P, e in [0, 3), N in {16,32,64}";
  return out;
}

// --- 5: tiling invariance at scale ------------------------------------------

Outcome criterion_5() {
  Outcome out;
  std::mt19937_64 rng(23);
  const uint32_t n = 1u << 16, alpha = 14;
  auto basis = generate_basis(n, 54, alpha, 48);

  std::vector<int32_t> src(static_cast<size_t>(alpha) * n);
  for (uint32_t j = 0; j < alpha; ++j)
    for (uint32_t k = 0; k < n; ++k)
      src[static_cast<size_t>(j) * n + k] =
          static_cast<int32_t>(rng() % basis->p_primes[j].q);

  const std::vector<BConvTiling> others = {
      {1, 4, 1, 256, 0, 0, 1}, {3, 8, 1, 256, 0, 0, 1},
      {6, 4, 1, 256, 0, 0, 1}, {3, 4, 2, 128, 0, 0, 1},
      {3, 4, 4, 64, 0, 0, 1},  {2, 16, 1, 256, 0, 0, 1},
      {3, 4, 1, 256, 0, 0, 2}, {3, 4, 1, 256, 0, 0, 4},
      {1, 8, 8, 32, 0, 0, 1}};

  for (uint32_t level : {54u, 28u}) {
    BConvTable table = make_bconv_table(
        basis->p_primes, std::span(basis->q_primes.data(), level));
    auto run = [&](const BConvTiling& t) {
      std::vector<std::vector<int32_t>> dst(level, std::vector<int32_t>(n));
      std::vector<int32_t*> rows;
      for (auto& d : dst) rows.push_back(d.data());
      bconv_part2(src.data(), n, table, validate_tiling(t, level, n),
                  rows.data());
      return dst;
    };
    const auto ref = run(BConvTiling{});  // default L_b=1 N_b=256 L_t=3 N_t=4
    for (const auto& t : others)
      if (run(t) != ref) {
        out.fail("tiling mismatch at L=" + std::to_string(level));
        return out;
      }
  }
  out.detail = "default + 9 tilings bit-identical at L=54 and L=28";
  return out;
}

// --- 6: automorphism write coalescing ---------------------------------------

Outcome criterion_6() {
  Outcome out;
  const uint32_t n = 1u << 16;
  for (int64_t r : {int64_t(1), int64_t(3), int64_t(1) << 14}) {
    auto m = AutomorphismMap::rotation(n, r);
    for (uint32_t blk = 0; blk < n / 32; ++blk) {
      const uint32_t base = m.dest(blk * 32) & ~31u;
      for (uint32_t t = 0; t < 32; ++t)
        if ((m.dest(blk * 32 + t) & ~31u) != base) {
          out.fail("block " + std::to_string(blk) + " splits at R=" +
                   std::to_string(r));
          return out;
        }
    }
  }
  out.detail = "all 2048 aligned 32-blocks contiguous for R in {1, 3, 2^14}";
  return out;
}

// --- 7: end-to-end homomorphism at full scale -------------------------------

Outcome criterion_7() {
  Outcome out;
  CkksContext ctx(CkksParams{});  // N=2^16, L=54, alpha=14, delta=2^48
  std::mt19937_64 key_rng(42);
  auto sk = keygen(ctx, key_rng);
  auto relin = evk_gen(ctx, sk, KeyKind::Relin, 0, key_rng);
  auto rot1 = evk_gen(ctx, sk, KeyKind::Rotation, 1, key_rng);
  const uint32_t slots = ctx.slots();

  double e_hadd = 0, e_pmult = 0, e_hmult = 0, e_hrot = 0;
  const int seeds = 100;
  for (int seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    auto u = random_unit_slots(rng, slots);
    auto v = random_unit_slots(rng, slots);
    auto pt_u = encode(ctx, u, ctx.default_scale(), ctx.params().l);
    auto pt_v = encode(ctx, v, ctx.default_scale(), ctx.params().l);
    auto ct_u = encrypt(ctx, pt_u, sk, rng);
    auto ct_v = encrypt(ctx, pt_v, sk, rng);

    std::vector<std::complex<double>> want(slots);

    auto sum = decode(ctx, decrypt(ctx, hadd(ctx, ct_u, ct_v), sk));
    for (uint32_t t = 0; t < slots; ++t) want[t] = u[t] + v[t];
    e_hadd = std::max(e_hadd, max_err(sum, want));

    auto pm = decode(
        ctx, decrypt(ctx, rescale(ctx, pmult(ctx, ct_u, pt_v)), sk));
    for (uint32_t t = 0; t < slots; ++t) want[t] = u[t] * v[t];
    e_pmult = std::max(e_pmult, max_err(pm, want));

    auto hm = decode(ctx, decrypt(ctx, hmult(ctx, ct_u, ct_v, relin), sk));
    e_hmult = std::max(e_hmult, max_err(hm, want));

    auto hr = decode(ctx, decrypt(ctx, hrot(ctx, ct_u, 1, rot1), sk));
    for (uint32_t t = 0; t < slots; ++t) want[t] = u[(t + 1) % slots];
    e_hrot = std::max(e_hrot, max_err(hr, want));
  }

  const double bound = std::ldexp(1.0, -20);
  std::ostringstream d;
  d << seeds << " seeds; max abs err: hadd=" << e_hadd
    << " pmult=" << e_pmult << " hmult=" << e_hmult << " hrot=" << e_hrot;
  out.detail = d.str();
  if (e_hadd > bound || e_pmult > bound || e_hmult > bound || e_hrot > bound)
    out.fail("empirical noise bound exceeds 2^-20: " + d.str());
  return out;
}

// --- 8: hoisting counter accounting -----------------------------------------

Outcome criterion_8() {
  Outcome out;
  CkksParams params;
  params.n = 1u << 10;
  params.l = 8;
  params.alpha = 2;
  params.hamming = 64;
  CkksContext ctx(params);
  std::mt19937_64 rng(29);
  auto sk = keygen(ctx, rng);

  std::vector<int64_t> rots;
  std::vector<EvaluationKey> keys;
  keys.reserve(8);
  std::vector<const EvaluationKey*> kp;
  for (int64_t r = 1; r <= 8; ++r) {
    rots.push_back(r);
    keys.push_back(evk_gen(ctx, sk, KeyKind::Rotation, r, rng));
    kp.push_back(&keys.back());
  }

  auto u = random_unit_slots(rng, ctx.slots());
  auto ct = encrypt(
      ctx, encode(ctx, u, ctx.default_scale(), params.l), sk, rng);

  ctx.counters().reset();
  for (size_t i = 0; i < rots.size(); ++i) hrot(ctx, ct, rots[i], *kp[i]);
  const uint64_t unhoisted = ctx.counters().modup;

  ctx.counters().reset();
  hoisted_rotations(ctx, ct, rots, kp);
  const uint64_t hoisted = ctx.counters().modup;

  std::vector<Plaintext> pts;
  pts.reserve(rots.size());
  std::vector<const Plaintext*> pp;
  for (size_t i = 0; i < rots.size(); ++i) {
    const std::vector<std::complex<double>> w(ctx.slots(),
                                              {0.125 * double(i + 1), 0.0});
    pts.push_back(
        encode(ctx, w, ctx.default_scale(), params.l, /*p_extend=*/true));
    pp.push_back(&pts.back());
  }
  ctx.counters().reset();
  hoisted_rotate_accumulate(ctx, ct, rots, pp, kp);
  const uint64_t acc_up = ctx.counters().modup;
  const uint64_t acc_down = ctx.counters().moddown;

  std::ostringstream d;
  d << "modup: unhoisted=" << unhoisted << " hoisted=" << hoisted
    << "; accumulate modup=" << acc_up << " moddown=" << acc_down;
  out.detail = d.str();
  if (unhoisted != 8 || hoisted != 1 || acc_up != 1 || acc_down != 1)
    out.fail(d.str());
  return out;
}

// --- 9: merged vs unmerged HMult --------------------------------------------

Outcome criterion_9() {
  Outcome out;
  CkksParams base;
  base.n = 1u << 12;
  base.l = 12;
  base.alpha = 3;
  base.hamming = 128;
  CkksParams lazy = base;
  lazy.lazy_rescale = true;

  CkksContext ctx_m(base), ctx_u(lazy);
  std::mt19937_64 kr_m(7), kr_u(7);
  auto sk_m = keygen(ctx_m, kr_m);
  auto sk_u = keygen(ctx_u, kr_u);
  auto relin_m = evk_gen(ctx_m, sk_m, KeyKind::Relin, 0, kr_m);
  auto relin_u = evk_gen(ctx_u, sk_u, KeyKind::Relin, 0, kr_u);

  double bound_m = 0, bound_u = 0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng_m(500 + seed), rng_u(500 + seed);
    auto u = random_unit_slots(rng_m, ctx_m.slots());
    auto v = random_unit_slots(rng_m, ctx_m.slots());
    // consume the same draws so both encryption streams stay aligned
    random_unit_slots(rng_u, ctx_u.slots());
    random_unit_slots(rng_u, ctx_u.slots());
    auto enc = [&](CkksContext& c, const SecretKey& sk, std::mt19937_64& r,
                   const std::vector<std::complex<double>>& m) {
      return encrypt(c, encode(c, m, c.default_scale(), base.l), sk, r);
    };
    auto ct_m = hmult(ctx_m, enc(ctx_m, sk_m, rng_m, u),
                      enc(ctx_m, sk_m, rng_m, v), relin_m);
    auto ct_l = hmult(ctx_u, enc(ctx_u, sk_u, rng_u, u),
                      enc(ctx_u, sk_u, rng_u, v), relin_u);
    if (!ct_l.pending_rescale) {
      out.fail("lazy path did not defer the rescale");
      return out;
    }
    auto ct_f = rescale(ctx_u, ct_l);  // flush to compare ledgers

    if (ct_m.level != ct_f.level || ct_m.scale != ct_f.scale) {
      out.fail("level/scale ledger mismatch at seed " + std::to_string(seed));
      return out;
    }

    auto dec_m = decode(ctx_m, decrypt(ctx_m, ct_m, sk_m));
    auto dec_u = decode(ctx_u, decrypt(ctx_u, ct_f, sk_u));
    std::vector<std::complex<double>> want(ctx_m.slots());
    for (uint32_t t = 0; t < ctx_m.slots(); ++t) want[t] = u[t] * v[t];
    const double e_m = max_err(dec_m, want);
    const double e_u = max_err(dec_u, want);
    bound_m = std::max(bound_m, e_m);
    bound_u = std::max(bound_u, e_u);
    if (max_err(dec_m, dec_u) > e_m + e_u + 1e-12) {
      out.fail("paths disagree beyond combined noise at seed " +
               std::to_string(seed));
      return out;
    }
  }
  std::ostringstream d;
  d << "50 seeds; noise bounds merged=" << bound_m
    << " unmerged=" << bound_u << "; ledgers identical";
  out.detail = d.str();
  if (bound_m > 4 * bound_u + 1e-12 || bound_u > 4 * bound_m + 1e-12)
    out.fail("noise bounds diverge: " + d.str());
  return out;
}

// --- 10: sweep harness reproduction via the CLI -----------------------------

struct CsvReport {
  size_t data_rows = 0;
  size_t valid_rows = 0;
  std::string body;
};

CsvReport read_csv(const std::string& path) {
  CsvReport rep;
  std::ifstream in(path);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    rep.body += line + "\n";
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rep.data_rows;
    // 4th field is the valid flag
    std::stringstream ss(line);
    std::string field;
    for (int i = 0; i < 4 && std::getline(ss, field, ','); ++i) {
    }
    if (field == "1") ++rep.valid_rows;
  }
  return rep;
}

Outcome criterion_10() {
  Outcome out;
  const std::string ntt_csv = "/tmp/acc_ntt.csv";
  const std::string bconv_csv = "/tmp/acc_bconv.csv";

  auto run = [&](const std::string& args) {
    const std::string cmd = g_cli_path + " " + args;
    return std::system(cmd.c_str()) == 0;
  };
  // design-space sweeps over the default grids at full and half levels
  if (!run("--op ntt --reps 3 --warmup 1 --strict --out " + ntt_csv)) {
    out.fail("ntt sweep CLI failed or skipped configurations");
    return out;
  }
  if (!run("--op bconv --reps 3 --warmup 1 --strict --out " + bconv_csv)) {
    out.fail("bconv sweep CLI failed or skipped configurations");
    return out;
  }

  const CsvReport ntt = read_csv(ntt_csv);
  const CsvReport bconv = read_csv(bconv_csv);
  // default grids: 3 n1 x 2 g1 x 2 ot = 12 points, 4 l_b x 2 l_t x 2 n_t = 16
  // points, each at levels {54, 28}
  if (ntt.data_rows != 24 || ntt.valid_rows != 24) {
    out.fail("ntt report shape: " + std::to_string(ntt.data_rows) + " rows, " +
             std::to_string(ntt.valid_rows) + " valid");
    return out;
  }
  if (bconv.data_rows != 32 || bconv.valid_rows != 32) {
    out.fail("bconv report shape: " + std::to_string(bconv.data_rows) +
             " rows, " + std::to_string(bconv.valid_rows) + " valid");
    return out;
  }
  for (const char* axis : {"n1=", "g1=", "ot=", "basis_hash"})
    if (ntt.body.find(axis) == std::string::npos) {
      out.fail(std::string("ntt report missing axis ") + axis);
      return out;
    }
  for (const char* axis : {"l_b=", "n_b=", "l_t=", "n_t="})
    if (bconv.body.find(axis) == std::string::npos) {
      out.fail(std::string("bconv report missing axis ") + axis);
      return out;
    }
  out.detail = "24 ntt + 32 bconv rows, all validated, levels {54, 28}";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];

  struct Criterion {
    const char* name;
    double limit_s;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"montgomery reduction vs wide-division reference", 10, criterion_1},
      {"ntt convolution vs schoolbook oracle", 30, criterion_2},
      {"plan invariance at N=2^16", 60, criterion_3},
      {"base-conversion overflow membership", 30, criterion_4},
      {"bconv tiling invariance at L=54/28", 60, criterion_5},
      {"automorphism 32-block coalescing", 10, criterion_6},
      {"end-to-end homomorphism at full scale", 600, criterion_7},
      {"hoisting counter accounting", 120, criterion_8},
      {"merged vs unmerged hmult", 300, criterion_9},
      {"sweep harness reproduction", 900, criterion_10},
  };

  int failures = 0;
  int idx = 0;
  for (const auto& c : criteria) {
    ++idx;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out.fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (secs > c.limit_s) out.fail("exceeded time budget");
    std::printf("[%s] %2d. %s — %s [%.1fs / %.0fs]\n", out.ok ? "PASS" : "FAIL",
                idx, c.name, out.detail.c_str(), secs, c.limit_s);
    std::fflush(stdout);
    if (!out.ok) ++failures;
  }
  return failures;
}
