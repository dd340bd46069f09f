#include <doctest.h>

#include <random>

#include "ckks32/bconv.hpp"
#include "ckks32/rns.hpp"
#include "oracles.hpp"

using namespace ckks32;

namespace {

NttPlanParams toy_params(uint32_t n) {
  return {2, n / 2, 2, 2, 1, false, 0};
}

}  // namespace

TEST_CASE("table constants are centered and part1 is trivial for alpha=1") {
  auto basis = generate_basis(1 << 4, 2, 1, 48);
  BConvTable t = make_bconv_table(basis->p_primes,
                                  std::span(basis->q_primes.data(), 2));
  for (size_t i = 0; i < t.dst_count(); ++i)
    for (size_t j = 0; j < t.src_count(); ++j)
      CHECK(std::abs(static_cast<int64_t>(t.c[i * t.src_count() + j])) <=
            (t.dst[i].q - 1) / 2);
  // single-prime source: (P/P_0)^-1 = 1
  CHECK(from_mont(static_cast<int32_t>(t.part1_mont[0]), t.src[0]) == 1);
}

TEST_CASE("standalone part1 equals a direct constant multiply") {
  std::mt19937_64 rng(103);
  BufferPool pool;
  auto basis = generate_basis(1 << 4, 4, 0, 48);
  BConvTable t = make_bconv_table(std::span(basis->q_primes.data() + 2, 2),
                                  std::span(basis->q_primes.data(), 2));
  // build a source polynomial over a 2-prime Q-prefix basis matching src
  auto src_basis = std::make_shared<RnsBasis>();
  src_basis->n = basis->n;
  src_basis->delta_bits = basis->delta_bits;
  src_basis->q_primes = {basis->q_primes[2], basis->q_primes[3]};
  Polynomial p(src_basis, 2, 0, Domain::Coefficient, false, &pool);
  for (uint32_t i = 0; i < 2; ++i)
    for (uint32_t j = 0; j < p.n(); ++j)
      p.row(i)[j] = static_cast<int32_t>(rng() % p.prime_at(i).q);
  auto orig = p.clone(&pool);
  bconv_part1(p, t);
  for (uint32_t i = 0; i < 2; ++i) {
    const PrimeContext& c = t.src[i];
    const uint32_t k = from_mont(static_cast<int32_t>(t.part1_mont[i]), c);
    for (uint32_t j = 0; j < p.n(); ++j) {
      const uint64_t expect =
          static_cast<uint64_t>(correct(orig.row(i)[j], c.q)) * k % c.q;
      CHECK(static_cast<uint32_t>(p.row(i)[j]) == expect);
    }
  }
}

TEST_CASE("part2: zero source maps to zero; toy instance matches the exact sum") {
  std::mt19937_64 rng(107);
  auto basis = generate_basis(1 << 4, 2, 2, 48);
  BConvTable t = make_bconv_table(basis->p_primes,
                                  std::span(basis->q_primes.data(), 2));
  const uint32_t n = 16;
  std::vector<int32_t> src(t.src_count() * n, 0);
  std::vector<std::vector<int32_t>> dst(t.dst_count(), std::vector<int32_t>(n));
  std::vector<int32_t*> dst_rows;
  for (auto& d : dst) dst_rows.push_back(d.data());
  BConvTiling tiling;
  bconv_part2(src.data(), n, t, tiling, dst_rows.data());
  for (const auto& d : dst)
    for (int32_t v : d) CHECK(v == 0);

  // random canonical source vs big-integer evaluation of the sum
  for (size_t k = 0; k < t.src_count(); ++k)
    for (uint32_t x = 0; x < n; ++x)
      src[k * n + x] = static_cast<int32_t>(rng() % t.src[k].q);
  bconv_part2(src.data(), n, t, tiling, dst_rows.data());
  oracles::BigInt p_prod = 1;
  for (const auto& s : t.src) p_prod *= s.q;
  for (size_t i = 0; i < t.dst_count(); ++i) {
    const uint32_t q = t.dst[i].q;
    for (uint32_t x = 0; x < n; ++x) {
      oracles::BigInt expect = 0;
      for (size_t k = 0; k < t.src_count(); ++k) {
        oracles::BigInt phat = p_prod / t.src[k].q;
        expect += phat % q * src[k * n + x];
      }
      expect %= q;
      CHECK(correct(dst[i][x], q) == static_cast<uint32_t>(expect));
    }
  }
}

TEST_CASE("tiling invariance on random inputs, including mid-reduction paths") {
  std::mt19937_64 rng(109);
  auto basis = generate_basis(1 << 6, 4, 4, 48);
  BConvTable t = make_bconv_table(basis->p_primes,
                                  std::span(basis->q_primes.data(), 4));
  // force the mid-accumulation schedule on a copy of the table
  BConvTable t_mid = t;
  t_mid.reduce_interval = 2;

  const uint32_t n = 1 << 6;
  std::vector<int32_t> src(t.src_count() * n);
  for (size_t k = 0; k < t.src_count(); ++k)
    for (uint32_t x = 0; x < n; ++x)
      src[k * n + x] = static_cast<int32_t>(rng() % t.src[k].q);

  auto run = [&](const BConvTable& tbl, const BConvTiling& tiling) {
    std::vector<std::vector<int32_t>> dst(tbl.dst_count(), std::vector<int32_t>(n));
    std::vector<int32_t*> rows;
    for (auto& d : dst) rows.push_back(d.data());
    bconv_part2(src.data(), n, tbl, tiling, rows.data());
    return dst;
  };

  for (const BConvTable* tbl : {&t, &t_mid}) {
    auto ref = run(*tbl, BConvTiling{});
    for (const BConvTiling& alt :
         {BConvTiling{1, 1, 1, 16, 0, 0, 1}, BConvTiling{2, 2, 2, 8, 0, 0, 2},
          BConvTiling{4, 4, 4, 4, 0, 0, 4}, BConvTiling{3, 4, 2, 256, 0, 0, 1},
          BConvTiling{1, 8, 2, 2, 0, 0, 2}}) {
      auto out = run(*tbl, alt);
      CHECK(out == ref);
    }
    // mid-reduction congruence sanity: both schedules agree mod q
    auto mid = run(t_mid, BConvTiling{});
    auto plain = run(t, BConvTiling{});
    for (size_t i = 0; i < t.dst_count(); ++i)
      for (uint32_t x = 0; x < n; ++x)
        CHECK(correct(mid[i][x], t.dst[i].q) == correct(plain[i][x], t.dst[i].q));
  }
}

TEST_CASE("invalid tilings are rejected") {
  CHECK_THROWS_AS(validate_tiling(BConvTiling{0, 1, 1, 1, 0, 0, 1}, 4, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_tiling(BConvTiling{1, 1, 1, 1, 1, 1, 3}, 4, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_tiling(BConvTiling{1, 1, 1, 1, 2, 2, 1}, 4, 16),
                  std::invalid_argument);  // grid too small
  CHECK_THROWS_AS(validate_tiling(BConvTiling{16, 16, 1, 1, 0, 0, 1}, 16, 16),
                  std::invalid_argument);  // tile too large
}

TEST_CASE("mod_switch error characterization: output = exact + e*P with 0 <= e < alpha") {
  std::mt19937_64 rng(113);
  BufferPool pool;
  for (uint32_t logn : {4u, 5u, 6u}) {
    auto basis = generate_basis(1u << logn, 2, 2, 48);
    auto tw = build_twiddles(basis);
    NttPlan plan(tw, toy_params(1u << logn));
    // source: the alpha P-primes; destination: the Q-prefix
    BConvTable t = make_bconv_table(basis->p_primes,
                                    std::span(basis->q_primes.data(), 2));
    CrtContext src_crt(basis->p_primes);
    oracles::BigInt p_prod = src_crt.modulus();

    Polynomial a(basis, 0, 2, Domain::Coefficient, false, &pool);
    for (uint32_t i = 0; i < a.rows(); ++i)
      for (uint32_t j = 0; j < a.n(); ++j)
        a.row(i)[j] = static_cast<int32_t>(rng() % a.prime_at(i).q);
    auto coeffs = a.clone(&pool);
    ntt_forward(a, plan);

    auto out = mod_switch(a, 2, 0, t, plan, BConvTiling{}, &pool);
    CHECK(out.domain() == Domain::Evaluation);
    CHECK(out.mont());
    intt_inverse(out, plan);

    for (uint32_t j = 0; j < a.n(); ++j) {
      std::vector<uint32_t> res;
      for (uint32_t i = 0; i < 2; ++i)
        res.push_back(correct(coeffs.row(i)[j], basis->p_primes[i].q));
      oracles::BigInt exact = src_crt.reconstruct(res);
      for (uint32_t i = 0; i < 2; ++i) {
        const uint32_t q = basis->q_primes[i].q;
        const uint32_t got = correct(out.row(i)[j], q);
        // got = (exact + e * P) mod q for some integer e in [0, alpha)
        bool found = false;
        for (uint32_t e = 0; e < 2 && !found; ++e) {
          oracles::BigInt cand = (exact + e * p_prod) % q;
          found = got == static_cast<uint32_t>(cand);
        }
        CHECK(found);
      }
    }
  }
}

TEST_CASE("mod_switch of a small constant is exact (e = 0)") {
  BufferPool pool;
  const uint32_t n = 1 << 4;
  auto basis = generate_basis(n, 2, 1, 48);
  auto tw = build_twiddles(basis);
  NttPlan plan(tw, toy_params(n));
  BConvTable t = make_bconv_table(basis->p_primes,
                                  std::span(basis->q_primes.data(), 2));
  Polynomial a(basis, 0, 1, Domain::Coefficient, false, &pool);
  for (uint32_t j = 0; j < n; ++j) a.row(0)[j] = static_cast<int32_t>(j + 1);
  ntt_forward(a, plan);
  auto out = mod_switch(a, 2, 0, t, plan, BConvTiling{}, &pool);
  intt_inverse(out, plan);
  for (uint32_t i = 0; i < 2; ++i)
    for (uint32_t j = 0; j < n; ++j)
      CHECK(correct(out.row(i)[j], basis->q_primes[i].q) == j + 1);
}

TEST_CASE("fused part1-through-INTT equals standalone part1 after INTT, bit-exactly") {
  std::mt19937_64 rng(127);
  BufferPool pool;
  const uint32_t n = 1 << 5;
  auto basis = generate_basis(n, 4, 2, 48);
  auto tw = build_twiddles(basis);
  NttPlan plan(tw, toy_params(n));
  BConvTable t = make_bconv_table(basis->p_primes,
                                  std::span(basis->q_primes.data(), 4));

  Polynomial a(basis, 0, 2, Domain::Evaluation, true, &pool);
  for (uint32_t i = 0; i < a.rows(); ++i)
    for (uint32_t j = 0; j < n; ++j)
      a.row(i)[j] = static_cast<int32_t>(rng() % a.prime_at(i).q);

  auto fused = a.clone(&pool);
  for (uint32_t i = 0; i < fused.rows(); ++i)
    plan.inverse_row(fused.row(i), fused.global_prime_index(i), &t.part1_mont[i]);

  auto standalone = a.clone(&pool);
  intt_inverse(standalone, plan);
  bconv_part1(standalone, t);

  for (uint32_t i = 0; i < a.rows(); ++i)
    for (uint32_t j = 0; j < n; ++j)
      CHECK(fused.row(i)[j] == standalone.row(i)[j]);
}
