#include "ckks32/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <functional>
#include <cmath>
#include <complex>
#include <cstring>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ckks32/bconv.hpp"
#include "ckks32/ckks.hpp"
#include "ckks32/ntt.hpp"
#include "ckks32/poly.hpp"
#include "ckks32/rns.hpp"

namespace ckks32::bench {
namespace {

constexpr const char* kVersion = "0.1.0";

NttPlanParams default_plan_params(uint32_t n) {
  if (n == (1u << 16)) return {};
  const uint32_t log2n = static_cast<uint32_t>(std::countr_zero(n));
  const uint32_t n1 = 1u << (log2n / 2);
  const uint32_t n2 = n / n1;
  return {n1, n2, std::min(16u, n1), std::min(8u, n2), std::min(16u, n2),
          false, 0};
}

std::vector<std::pair<std::string, std::string>> make_meta(
    const SweepSpec& spec, uint64_t basis_hash) {
  std::vector<std::pair<std::string, std::string>> meta;
  meta.emplace_back("library_version", kVersion);
  meta.emplace_back("host_cores",
                    std::to_string(std::thread::hardware_concurrency()));
#ifdef _OPENMP
  meta.emplace_back("omp_threads", std::to_string(omp_get_max_threads()));
#else
  meta.emplace_back("omp_threads", "1");
#endif
  meta.emplace_back("n", std::to_string(spec.n));
  meta.emplace_back("l", std::to_string(spec.l));
  meta.emplace_back("alpha", std::to_string(spec.alpha));
  meta.emplace_back("delta_bits", std::to_string(spec.delta_bits));
  meta.emplace_back("seed", std::to_string(spec.seed));
  std::ostringstream h;
  h << std::hex << basis_hash;
  meta.emplace_back("basis_hash", h.str());
  return meta;
}

// Cartesian product over ordered axes, row-major (last axis fastest).
std::vector<std::vector<int64_t>> cartesian(
    const std::vector<std::vector<int64_t>>& axes) {
  std::vector<std::vector<int64_t>> out = {{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<int64_t>> next;
    for (const auto& prefix : out)
      for (int64_t v : axis) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    out = std::move(next);
  }
  return out;
}

std::vector<std::vector<int64_t>> resolve_axes(
    const SweepSpec& spec, const std::vector<std::string>& names,
    const std::vector<std::vector<int64_t>>& defaults) {
  std::vector<std::vector<int64_t>> axes;
  for (size_t i = 0; i < names.size(); ++i) {
    auto it = spec.grid.find(names[i]);
    axes.push_back(it != spec.grid.end() ? it->second : defaults[i]);
  }
  return axes;
}

void fill_stats(BenchRow& row, std::vector<double>& ns) {
  if (ns.empty()) return;
  std::sort(ns.begin(), ns.end());
  row.reps = static_cast<uint32_t>(ns.size());
  row.min_ns = ns.front();
  row.median_ns = ns.size() % 2 == 1
                      ? ns[ns.size() / 2]
                      : 0.5 * (ns[ns.size() / 2 - 1] + ns[ns.size() / 2]);
  const size_t p99 =
      std::min(ns.size() - 1,
               static_cast<size_t>(std::ceil(0.99 * ns.size())) - 1);
  row.p99_ns = ns[p99];
}

double time_once(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::nano>(t1 - t0).count();
}

void run_timed(BenchRow& row, uint32_t warmup, uint32_t reps,
               const std::function<void()>& fn) {
  for (uint32_t i = 0; i < warmup; ++i) fn();
  std::vector<double> ns;
  ns.reserve(reps);
  for (uint32_t i = 0; i < reps; ++i) ns.push_back(time_once(fn));
  fill_stats(row, ns);
}

Polynomial random_poly(std::shared_ptr<const RnsBasis> basis, uint32_t q_count,
                       uint32_t p_count, std::mt19937_64& rng, BufferPool* pool,
                       Domain domain, bool mont) {
  Polynomial p(std::move(basis), q_count, p_count, domain, mont, pool);
  for (uint32_t i = 0; i < p.rows(); ++i)
    for (uint32_t k = 0; k < p.n(); ++k)
      p.row(i)[k] = static_cast<int32_t>(rng() % p.prime_at(i).q);
  return p;
}

bool rows_equal(const Polynomial& a, const Polynomial& b) {
  for (uint32_t i = 0; i < a.rows(); ++i)
    if (std::memcmp(a.row(i), b.row(i), sizeof(int32_t) * a.n()) != 0)
      return false;
  return true;
}

Report run_ntt_sweep(const SweepSpec& spec, bool compare_serial) {
  auto basis = generate_basis(spec.n, spec.l, spec.alpha, spec.delta_bits);
  auto tw = build_twiddles(basis);
  NttPlan ref_plan(tw, default_plan_params(spec.n));
  BufferPool pool;
  Report report;
  report.meta = make_meta(spec, basis->hash());

  const std::vector<std::string> names = {"n1", "g1", "g2", "b_k1", "ot"};
  const std::vector<std::vector<int64_t>> defaults = {
      {64, 128, 256}, {8, 16}, {8}, {16}, {0, 1}};
  const auto points =
      compare_serial
          ? std::vector<std::vector<int64_t>>{{0}, {1}}  // impl selector
          : cartesian(resolve_axes(spec, names, defaults));

  for (uint32_t level : spec.levels) {
    if (level < 1 || level > spec.l) {
      BenchRow row;
      row.op = spec.op;
      row.level = level;
      row.valid = false;
      row.reason = "level out of range";
      report.rows.push_back(std::move(row));
      continue;
    }
    std::mt19937_64 rng(spec.seed + level);
    Polynomial input = random_poly(basis, level, 0, rng, &pool,
                                   Domain::Coefficient, false);
    // reference forward output
    Polynomial ref = input.clone(&pool);
    for (uint32_t i = 0; i < level; ++i) ref_plan.forward_row(ref.row(i), i);

    for (const auto& pt : points) {
      BenchRow row;
      row.op = spec.op;
      row.level = level;
      if (compare_serial) {
        row.params.emplace_back("impl", pt[0]);
      } else {
        row.params.emplace_back("n1", pt[0]);
        row.params.emplace_back("n2", spec.n / pt[0]);
        row.params.emplace_back("g1", pt[1]);
        row.params.emplace_back("g2", pt[2]);
        row.params.emplace_back("b_k1", pt[3]);
        row.params.emplace_back("ot", pt[4]);
      }
      try {
        Polynomial out = input.clone(&pool);
        std::function<void()> fn;
        if (compare_serial && pt[0] == 1) {
          // serial single-segment reference path
          fn = [&, level]() {
            for (uint32_t i = 0; i < level; ++i)
              NttPlan::forward_row_serial(out.row(i), tw->per_prime[i], spec.n);
          };
        } else {
          NttPlanParams params =
              compare_serial
                  ? default_plan_params(spec.n)
                  : NttPlanParams{static_cast<uint32_t>(pt[0]),
                                  spec.n / static_cast<uint32_t>(pt[0]),
                                  static_cast<uint32_t>(pt[1]),
                                  static_cast<uint32_t>(pt[2]),
                                  static_cast<uint32_t>(pt[3]),
                                  pt[4] != 0,
                                  0};
          auto plan = std::make_shared<NttPlan>(tw, params);
          fn = [&, plan, level]() {
            for (uint32_t i = 0; i < level; ++i)
              plan->forward_row(out.row(i), i);
          };
        }
        // bit-exactness against the reference configuration, before timing
        for (uint32_t i = 0; i < level; ++i)
          std::memcpy(out.row(i), input.row(i), sizeof(int32_t) * spec.n);
        fn();
        if (!rows_equal(out, ref))
          throw std::runtime_error("output mismatch against reference plan");
        run_timed(row, spec.warmup, spec.reps, [&]() {
          for (uint32_t i = 0; i < level; ++i)
            std::memcpy(out.row(i), input.row(i), sizeof(int32_t) * spec.n);
          fn();
        });
      } catch (const std::exception& e) {
        row.valid = false;
        row.reason = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

Report run_bconv_sweep(const SweepSpec& spec) {
  auto basis = generate_basis(spec.n, spec.l, spec.alpha, spec.delta_bits);
  BufferPool pool;
  Report report;
  report.meta = make_meta(spec, basis->hash());

  const std::vector<std::string> names = {"l_b", "l_t", "n_t", "v"};
  const std::vector<std::vector<int64_t>> defaults = {
      {1, 2, 4, 8}, {1, 3}, {4, 8}, {1}};
  const auto points = cartesian(resolve_axes(spec, names, defaults));

  for (uint32_t level : spec.levels) {
    if (level < 1 || level > spec.l) {
      BenchRow row;
      row.op = spec.op;
      row.level = level;
      row.valid = false;
      row.reason = "level out of range";
      report.rows.push_back(std::move(row));
      continue;
    }
    BConvTable table = make_bconv_table(
        basis->p_primes, std::span(basis->q_primes.data(), level));
    std::mt19937_64 rng(spec.seed + level);
    std::vector<int32_t> src(static_cast<size_t>(spec.alpha) * spec.n);
    for (uint32_t j = 0; j < spec.alpha; ++j)
      for (uint32_t k = 0; k < spec.n; ++k)
        src[static_cast<size_t>(j) * spec.n + k] =
            static_cast<int32_t>(rng() % basis->p_primes[j].q);

    auto run_part2 = [&](const BConvTiling& tiling) {
      std::vector<std::vector<int32_t>> dst(level,
                                            std::vector<int32_t>(spec.n));
      std::vector<int32_t*> rows;
      for (auto& d : dst) rows.push_back(d.data());
      bconv_part2(src.data(), spec.n, table, tiling, rows.data());
      return dst;
    };
    const auto ref = run_part2(BConvTiling{});

    for (const auto& pt : points) {
      BenchRow row;
      row.op = spec.op;
      row.level = level;
      const uint32_t l_b = static_cast<uint32_t>(pt[0]);
      // fixed work-group budget: l_b * n_b = 256
      const uint32_t n_b = l_b && 256 % l_b == 0 ? 256 / l_b : 0;
      row.params.emplace_back("l_b", l_b);
      row.params.emplace_back("n_b", n_b);
      row.params.emplace_back("l_t", pt[1]);
      row.params.emplace_back("n_t", pt[2]);
      row.params.emplace_back("v", pt[3]);
      try {
        if (n_b == 0)
          throw std::invalid_argument("l_b must divide the group budget 256");
        const BConvTiling tiling = validate_tiling(
            BConvTiling{static_cast<uint32_t>(pt[1]),
                        static_cast<uint32_t>(pt[2]), l_b, n_b, 0, 0,
                        static_cast<uint32_t>(pt[3])},
            level, spec.n);
        if (run_part2(tiling) != ref)
          throw std::runtime_error("output mismatch against default tiling");
        run_timed(row, spec.warmup, spec.reps, [&]() { run_part2(tiling); });
      } catch (const std::exception& e) {
        row.valid = false;
        row.reason = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<std::complex<double>> bench_slots(std::mt19937_64& rng,
                                              uint32_t count) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<std::complex<double>> u(count);
  for (auto& v : u) v = {dist(rng), dist(rng)};
  return u;
}

void capture_counters(BenchRow& row, const OpCounters& c) {
  row.counters.emplace_back("modup", c.modup);
  row.counters.emplace_back("moddown", c.moddown);
  row.counters.emplace_back("ntt", c.ntt);
  row.counters.emplace_back("intt", c.intt);
  row.counters.emplace_back("keymult", c.keymult);
  row.counters.emplace_back("bconv", c.bconv);
  row.counters.emplace_back("rescale", c.rescale);
}

}  // namespace

Report run_sweep(const SweepSpec& spec) {
  if (spec.op == "ntt") return run_ntt_sweep(spec, false);
  if (spec.op == "ntt-compare") return run_ntt_sweep(spec, true);
  if (spec.op == "bconv") return run_bconv_sweep(spec);
  throw std::invalid_argument("unknown sweep op: " + spec.op);
}

Report run_mechanism_bench(const SweepSpec& spec) {
  CkksParams params;
  params.n = spec.n;
  params.l = spec.l;
  params.alpha = spec.alpha;
  params.delta_bits = spec.delta_bits;
  params.hamming = std::min(params.hamming, spec.n / 4);  // small-ring benches
  CkksContext ctx(params);
  const uint32_t level = spec.level ? spec.level : spec.l;
  if (level < 1 || level > spec.l)
    throw std::invalid_argument("level out of range");

  std::mt19937_64 rng(spec.seed);
  auto sk = keygen(ctx, rng);
  auto u = bench_slots(rng, ctx.slots());
  auto v = bench_slots(rng, ctx.slots());
  auto pt_u = encode(ctx, u, ctx.default_scale(), level);
  auto pt_v = encode(ctx, v, ctx.default_scale(), level);
  auto ct_u = encrypt(ctx, pt_u, sk, rng);
  auto ct_v = encrypt(ctx, pt_v, sk, rng);

  Report report;
  report.meta = make_meta(spec, ctx.basis()->hash());
  BenchRow row;
  row.op = spec.op;
  row.level = level;

  std::function<void()> fn;
  EvaluationKey evk;
  if (spec.op == "hadd") {
    fn = [&]() { hadd(ctx, ct_u, ct_v); };
  } else if (spec.op == "pmult") {
    fn = [&]() { pmult(ctx, ct_u, pt_v); };
  } else if (spec.op == "hmult") {
    evk = evk_gen(ctx, sk, KeyKind::Relin, 0, rng);
    fn = [&]() { hmult(ctx, ct_u, ct_v, evk); };
  } else if (spec.op == "hrot") {
    evk = evk_gen(ctx, sk, KeyKind::Rotation, 1, rng);
    fn = [&]() { hrot(ctx, ct_u, 1, evk); };
  } else if (spec.op == "modswitch") {
    fn = [&]() { rescale(ctx, ct_u); };
  } else {
    throw std::invalid_argument("unknown mechanism: " + spec.op);
  }

  // counter profile from a single run
  ctx.counters().reset();
  fn();
  capture_counters(row, ctx.counters());

  if (spec.reps == 0) {
    for (uint32_t i = 0; i < spec.warmup; ++i) fn();
  } else {
    run_timed(row, spec.warmup, spec.reps, fn);
  }
  report.rows.push_back(std::move(row));
  return report;
}

namespace {

std::string join_kv(const std::vector<std::pair<std::string, int64_t>>& kv) {
  std::ostringstream out;
  for (size_t i = 0; i < kv.size(); ++i) {
    if (i) out << ';';
    out << kv[i].first << '=' << kv[i].second;
  }
  return out.str();
}

std::string join_kv_u64(
    const std::vector<std::pair<std::string, uint64_t>>& kv) {
  std::ostringstream out;
  for (size_t i = 0; i < kv.size(); ++i) {
    if (i) out << ';';
    out << kv[i].first << '=' << kv[i].second;
  }
  return out.str();
}

}  // namespace

std::string to_csv(const Report& report) {
  std::ostringstream out;
  for (const auto& [k, v] : report.meta) out << "# " << k << ": " << v << "\n";
  out << "op,level,params,valid,reason,reps,median_ns,min_ns,p99_ns,counters\n";
  for (const auto& r : report.rows) {
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << r.op << ',' << r.level << ',' << join_kv(r.params) << ','
        << (r.valid ? 1 : 0) << ',' << reason << ',' << r.reps << ','
        << r.median_ns << ',' << r.min_ns << ',' << r.p99_ns << ','
        << join_kv_u64(r.counters) << "\n";
  }
  return out.str();
}

std::string to_json(const Report& report) {
  nlohmann::json j;
  j["meta"] = nlohmann::json::object();
  for (const auto& [k, v] : report.meta) j["meta"][k] = v;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["op"] = r.op;
    row["level"] = r.level;
    row["params"] = nlohmann::json::object();
    for (const auto& [k, v] : r.params) row["params"][k] = v;
    row["valid"] = r.valid;
    if (!r.valid) row["reason"] = r.reason;
    row["reps"] = r.reps;
    if (r.reps) {
      row["median_ns"] = r.median_ns;
      row["min_ns"] = r.min_ns;
      row["p99_ns"] = r.p99_ns;
    }
    if (!r.counters.empty()) {
      row["counters"] = nlohmann::json::object();
      for (const auto& [k, v] : r.counters) row["counters"][k] = v;
    }
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2);
}

}  // namespace ckks32::bench
