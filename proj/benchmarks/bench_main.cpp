#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>

#include "refgov/governor.hpp"
#include "refgov/harness.hpp"
#include "refgov/linalg.hpp"
#include "refgov/qp.hpp"

namespace {

using namespace refgov;

struct Loaded {
  Scenario sc;
  std::vector<Certificate> certs;
};

const Loaded& scenario(const char* file) {
  static std::map<std::string, Loaded> cache;
  auto it = cache.find(file);
  if (it == cache.end()) {
    const ScenarioConfig cfg = load_config(std::string(REFGOV_SCENARIO_DIR) + "/" + file);
    Loaded l;
    l.sc = build_scenario(cfg);
    l.certs = certify_scenario(cfg, l.sc);
    it = cache.emplace(file, std::move(l)).first;
  }
  return it->second;
}

Governor make_governor(const Loaded& l) {
  return Governor(l.sc.model, l.sc.norm, l.certs, l.sc.governor, GovernorKind::kRgNl, l.sc.v0);
}

void BM_MatExp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = nd(rng);
  for (auto _ : state) benchmark::DoNotOptimize(mat_exp(a, 0.05));
}
BENCHMARK(BM_MatExp)->Arg(2)->Arg(6)->Arg(12);

void BM_SolveGovernorQp(benchmark::State& state, const char* file) {
  const Loaded& l = scenario(file);
  const Governor g = make_governor(l);
  const QpProblem p = g.assemble(g.steady_state(), l.sc.reference.at(0.0));
  state.counters["rows"] = static_cast<double>(p.A.rows());
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(p));
}
BENCHMARK_CAPTURE(BM_SolveGovernorQp, example1, "example1_nodist.json");
BENCHMARK_CAPTURE(BM_SolveGovernorQp, spacecraft, "spacecraft.json");

// Full step including relinearization at the new command.
void BM_GovernorStep(benchmark::State& state, const char* file) {
  const Loaded& l = scenario(file);
  const Vector r = l.sc.reference.at(0.0);
  for (auto _ : state) {
    state.PauseTiming();
    Governor g = make_governor(l);
    const Vector x = g.steady_state();
    state.ResumeTiming();
    benchmark::DoNotOptimize(g.step(x, r));
  }
}
BENCHMARK_CAPTURE(BM_GovernorStep, example1, "example1_nodist.json");
BENCHMARK_CAPTURE(BM_GovernorStep, spacecraft, "spacecraft.json");

void BM_Certify(benchmark::State& state, const char* file) {
  const ScenarioConfig cfg = load_config(std::string(REFGOV_SCENARIO_DIR) + "/" + file);
  const Scenario sc = build_scenario(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(certify_scenario(cfg, sc, 1));
}
BENCHMARK_CAPTURE(BM_Certify, spacecraft, "spacecraft.json")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
