// Design-space sweep / mechanism benchmark CLI.
//
// Kernel sweeps: --op ntt | bconv | ntt-compare (grid axes via --grid JSON).
// Mechanisms:    --op hadd | pmult | hmult | hrot | modswitch.
// Every timed configuration is validated bit-exact against the default
// configuration first; infeasible points become skip rows (exit 2 under
// --strict).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "ckks32/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ckks32 kernel / mechanism benchmark"};

  ckks32::bench::SweepSpec spec;
  std::string grid_path, format = "csv", out_path;
  int threads = 0;
  bool strict = false;

  app.add_option("--op", spec.op,
                 "ntt | bconv | ntt-compare | hadd | pmult | hmult | hrot | "
                 "modswitch")
      ->required();
  app.add_option("--n", spec.n, "ring degree (power of two)");
  app.add_option("--l", spec.l, "number of Q primes");
  app.add_option("--alpha", spec.alpha, "number of P primes");
  app.add_option("--delta-bits", spec.delta_bits, "scale bits per level");
  app.add_option("--level", spec.level, "mechanism level (0 = full l)");
  app.add_option("--grid", grid_path,
                 "JSON grid file: {\"axes\": {name: [values]}, \"levels\": "
                 "[...]} (optional)");
  app.add_option("--reps", spec.reps, "timed repetitions (0 = warmup only)");
  app.add_option("--warmup", spec.warmup, "warmup repetitions");
  app.add_option("--threads", threads, "worker threads (0 = runtime default)");
  app.add_option("--format", format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--seed", spec.seed, "input-generation seed");
  app.add_flag("--strict", strict, "exit 2 if any grid point was skipped");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
  }

  try {
    if (!grid_path.empty()) {
      std::ifstream in(grid_path);
      if (!in) throw std::runtime_error("cannot open grid file: " + grid_path);
      const auto j = nlohmann::json::parse(in);
      if (j.contains("axes"))
        for (const auto& [name, values] : j["axes"].items())
          spec.grid[name] = values.get<std::vector<int64_t>>();
      if (j.contains("levels"))
        spec.levels = j["levels"].get<std::vector<uint32_t>>();
    }

    static const std::set<std::string> kSweeps = {"ntt", "bconv",
                                                  "ntt-compare"};
    const ckks32::bench::Report report =
        kSweeps.count(spec.op) ? ckks32::bench::run_sweep(spec)
                               : ckks32::bench::run_mechanism_bench(spec);

    const std::string text = format == "json" ? ckks32::bench::to_json(report)
                                              : ckks32::bench::to_csv(report);
    if (out_path.empty()) {
      std::cout << text;
      if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot open output: " + out_path);
      out << text;
    }

    if (strict && report.has_skips()) {
      std::cerr << "strict mode: grid contains skipped points\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
