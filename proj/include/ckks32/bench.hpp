#pragma once

// Design-space sweep and mechanism microbenchmark harness: every timed
// configuration is first validated bit-exact against the default
// configuration; timing never gates correctness.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ckks32::bench {

struct BenchRow {
  std::string op;
  uint32_t level = 0;
  std::vector<std::pair<std::string, int64_t>> params;  // ordered axes
  bool valid = true;
  std::string reason;  // skip reason when invalid
  uint32_t reps = 0;
  double median_ns = 0, min_ns = 0, p99_ns = 0;
  std::vector<std::pair<std::string, uint64_t>> counters;  // mechanism profile
};

struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<BenchRow> rows;

  bool has_skips() const {
    for (const auto& r : rows)
      if (!r.valid) return true;
    return false;
  }
};

struct SweepSpec {
  std::string op;  // "ntt", "bconv", "ntt-compare" or a mechanism name
  uint32_t n = 1u << 16;
  uint32_t l = 54;
  uint32_t alpha = 14;
  uint32_t delta_bits = 48;
  uint32_t level = 0;  // mechanism level; 0 = full l
  std::vector<uint32_t> levels = {54, 28};  // sweep level settings
  // parameter grid, one entry per axis; empty = the op's default grid
  std::map<std::string, std::vector<int64_t>> grid;
  uint32_t reps = 5;
  uint32_t warmup = 1;
  uint64_t seed = 42;
};

// Kernel sweeps ("ntt", "bconv", "ntt-compare"); deterministic row order.
Report run_sweep(const SweepSpec& spec);
// Mechanism microbenchmarks ("hadd", "pmult", "hmult", "hrot", "modswitch");
// reps = 0 runs warmup only and reports empty stats.
Report run_mechanism_bench(const SweepSpec& spec);

std::string to_csv(const Report& report);
std::string to_json(const Report& report);

}  // namespace ckks32::bench
