// Serial reference vs blocked OpenMP kernels, plus an end-to-end EM fit.
#include <benchmark/benchmark.h>

#include <random>

#include "mismed/em.hpp"
#include "mismed/kernels.hpp"
#include "mismed/sim.hpp"

namespace {

using namespace mismed;

struct Inputs {
  Eigen::MatrixXd x;
  Eigen::VectorXd w, v, eta, y, e1, e2, e3, ms;
};

Inputs make_inputs(Eigen::Index n) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> z(0.0, 1.0);
  Inputs in;
  in.x.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) in.x(i, j) = j == 0 ? 1.0 : z(gen);
  auto vec = [&] {
    Eigen::VectorXd out(n);
    for (auto& e : out) e = z(gen);
    return out;
  };
  in.w = vec().cwiseAbs();
  in.v = vec();
  in.eta = vec();
  in.y = (in.eta.array() > 0.0).cast<double>();
  in.e1 = vec();
  in.e2 = vec();
  in.e3 = vec();
  in.ms = (vec().array() > 0.0).cast<double>();
  return in;
}

kernels::LatentClassInputs latent(const Inputs& in) {
  kernels::LatentClassInputs l;
  l.eta_mediator = &in.e1;
  l.eta_sensitivity = &in.e2;
  l.eta_false_positive = &in.e3;
  l.m_star_is_one = &in.ms;
  l.eta_outcome_class1 = &in.eta;
  l.eta_outcome_class2 = &in.e1;
  l.y = &in.y;
  l.family = Family::Bernoulli;
  return l;
}

template <bool Parallel>
void BM_NormalEquations(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  for (auto _ : state) {
    auto r = Parallel ? kernels::normal_equations(in.x, in.w, in.v)
                      : kernels::serial::normal_equations(in.x, in.w, in.v);
    benchmark::DoNotOptimize(r.gram.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_GlmTerms(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  for (auto _ : state) {
    auto r = Parallel ? kernels::glm_terms(Family::Bernoulli, in.eta, in.y, in.w, 1.0)
                      : kernels::serial::glm_terms(Family::Bernoulli, in.eta, in.y, in.w, 1.0);
    benchmark::DoNotOptimize(r.loglik);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_EStep(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  const auto l = latent(in);
  for (auto _ : state) {
    auto post = Parallel ? kernels::normalize(kernels::class_log_joint(l))
                         : kernels::serial::normalize(kernels::serial::class_log_joint(l));
    benchmark::DoNotOptimize(post.loglik);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EmSetting1(benchmark::State& state) {
  ScenarioSpec spec = ScenarioSpec::defaults(1, Level::Medium);
  const SimulatedData sim = generate_dataset(spec, 0);
  for (auto _ : state) {
    auto fit = run_em(sim.data, Family::Normal, EmConfig{}, false);
    benchmark::DoNotOptimize(fit.loglik_trace.back());
  }
}

}  // namespace

BENCHMARK(BM_NormalEquations<false>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_NormalEquations<true>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_GlmTerms<false>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_GlmTerms<true>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_EStep<false>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_EStep<true>)->Arg(20000)->Arg(200000);
BENCHMARK(BM_EmSetting1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
