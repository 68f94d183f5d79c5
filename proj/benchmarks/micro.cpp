#include <benchmark/benchmark.h>

#include <random>

#include "rhclus/engine.hpp"
#include "rhclus/fcm.hpp"
#include "rhclus/mca.hpp"
#include "rhclus/points.hpp"

using namespace rhclus;

namespace {

ingest::CategoricalDataset synthetic(std::size_t n, std::size_t q, std::uint32_t card) {
  std::vector<ingest::ColumnSpec> schema(q);
  for (std::size_t c = 0; c < q; ++c) {
    schema[c].name = "a" + std::to_string(c);
    for (std::uint32_t k = 0; k < card; ++k) schema[c].categories.push_back(std::to_string(k));
  }
  std::mt19937_64 rng(1);
  std::vector<std::uint32_t> cells(n * q);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    // Every category shows up in the first rows so no column mass is zero.
    cells[i] = i < q * card ? static_cast<std::uint32_t>((i / q) % card)
                            : static_cast<std::uint32_t>(rng() % card);
  }
  return ingest::CategoricalDataset(std::move(schema), std::move(cells));
}

mca::Model fit(const ingest::CategoricalDataset& ds) {
  const auto store = ingest::partition(ds, 8);
  const auto stats = mca::accumulate_burt(ds, store, {8, 4, "burt"});
  return mca::fit_mca(stats.margins, stats.burt);
}

}  // namespace

static void BM_MembershipRow(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Matrix v(c, 8);
  for (auto& x : v.values()) x = g(rng);
  std::vector<double> point(8), out(c);
  for (auto& x : point) x = g(rng);
  for (auto _ : state) {
    fcm::membership_row(point, v, 2.0, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MembershipRow)->Arg(2)->Arg(7)->Arg(16);

static void BM_Project(benchmark::State& state) {
  const auto ds = synthetic(5000, 10, 4);
  const auto model = fit(ds);
  std::vector<double> out(model.dims());
  std::size_t row = 0;
  for (auto _ : state) {
    model.project(ds.row(row), out);
    benchmark::DoNotOptimize(out.data());
    row = (row + 1) % ds.num_rows();
  }
}
BENCHMARK(BM_Project);

static void BM_BurtAccumulation(benchmark::State& state) {
  const auto ds = synthetic(static_cast<std::size_t>(state.range(0)), 10, 4);
  const auto store = ingest::partition(ds, 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mca::accumulate_burt(ds, store, {16, 8, "burt"}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BurtAccumulation)->Arg(10000)->Arg(100000);

static void BM_EngineShuffle(benchmark::State& state) {
  const auto mappers = static_cast<std::size_t>(state.range(0));
  const auto store = ingest::partition(100000, mappers);
  for (auto _ : state) {
    auto out = engine::run_job(
        {mappers, mappers / 2 + 1, "shuffle"}, store,
        [](std::size_t, ingest::RowBlock b, engine::Emitter& e) {
          for (std::size_t r = b.offset; r < b.offset + b.count; r += 100) {
            e.emit(engine::index_key('k', r % 64), "x");
          }
        },
        [](std::string_view k, std::span<const std::string> v, engine::Emitter& e) {
          e.emit(std::string(k), std::to_string(v.size()));
        });
    benchmark::DoNotOptimize(out.records.data());
  }
}
BENCHMARK(BM_EngineShuffle)->Arg(1)->Arg(50)->Arg(150);

static void BM_FcmIteration(benchmark::State& state) {
  const auto ds = synthetic(static_cast<std::size_t>(state.range(0)), 10, 4);
  const auto model = fit(ds);
  const ProjectedRecords points(ds, model);
  const auto store = ingest::partition(ds, 50);
  fcm::Config cfg;
  cfg.clusters = 7;
  cfg.max_iters = 1;
  cfg.fixed_iterations = true;
  cfg.track_objective = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fcm::run_fcm(store, points, cfg, {50, 25, "fcm"}));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FcmIteration)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
