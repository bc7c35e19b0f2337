// Compares the OpenMP objective evaluator against the serial reference and
// verifies they agree bit-for-bit while timing both.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "plume/sampling.hpp"
#include "plume/scenario_io.hpp"

int main(int argc, char** argv) {
  using namespace plume;
  std::string scenario_path;
  int count = 2000;
  int sensors = 8;
  int reps = 3;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--scenario" && i + 1 < argc) scenario_path = argv[++i];
    else if (a == "--count" && i + 1 < argc) count = std::atoi(argv[++i]);
    else if (a == "--sensors" && i + 1 < argc) sensors = std::atoi(argv[++i]);
    else if (a == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr,
                   "usage: bench --scenario FILE [--count N] [--sensors n] [--reps R]\n");
      return 2;
    }
  }
  if (scenario_path.empty()) {
    std::fprintf(stderr, "bench: --scenario is required\n");
    return 2;
  }

  auto [scenario, wind_model] = parse_scenario(scenario_path);
  SensorLayout layout;
  StreamRng rng(RngStream{12345, 0});
  for (int i = 0; i < sensors; ++i)
    layout.positions.emplace_back(
        rng.uniform(scenario.domain_lo.x(), scenario.domain_hi.x()),
        rng.uniform(scenario.domain_lo.y(), scenario.domain_hi.y()));

  const InnerConfig inner;
  const RngStream base{777, 0};

  auto time_one = [&](auto&& fn) {
    double best = 1e300;
    ObjectiveValue value;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      value = fn();
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return std::pair<double, ObjectiveValue>(best, value);
  };

  const auto [t_serial, v_serial] = time_one([&] {
    return evaluate_objective_serial(scenario, wind_model, layout, count, base, inner);
  });
  const auto [t_parallel, v_parallel] = time_one([&] {
    return evaluate_objective(scenario, wind_model, layout, count, base, inner);
  });

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  const bool identical = v_serial.psi_hat == v_parallel.psi_hat &&
                         v_serial.per_sample == v_parallel.per_sample;
  std::printf("samples            %d\n", count);
  std::printf("sensors            %d\n", sensors);
  std::printf("threads            %d\n", threads);
  std::printf("serial_seconds     %.6f\n", t_serial);
  std::printf("parallel_seconds   %.6f\n", t_parallel);
  std::printf("speedup            %.2fx\n", t_serial / t_parallel);
  std::printf("psi_hat            %.17g\n", v_parallel.psi_hat);
  std::printf("bit_identical      %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
