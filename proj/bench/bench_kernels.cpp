// Serial reference kernels against their OpenMP counterparts.
//
//   fracdim_bench --benchmark_filter=CellBounds

#include <benchmark/benchmark.h>

#include "fracdim/entropy_bounds.hpp"
#include "fracdim/pisot.hpp"
#include "fracdim/selfaffine.hpp"
#include "fracdim/sweep.hpp"

using namespace fracdim;

namespace {

std::vector<Interval> cells_of(const Partition& p) {
  std::vector<Interval> out;
  for (std::size_t j = 0; j < p.cells(); ++j) out.push_back(p.cell(j));
  return out;
}

// Per-cell refinement queries on the tribonacci partition; arg 0 is the level,
// arg 1 the job count (0 selects the serial reference).
void BM_CellBounds(benchmark::State& state) {
  const IFS1D ifs = load_ifs(FRACDIM_DATA_DIR "/tribonacci_decimal.ifs");
  const auto cells = cells_of(generate_partition(ifs, static_cast<int>(state.range(0))));
  const UBConfig cfg = make_ub_config(ifs, 40, gamma_bernoulli);
  const int jobs = static_cast<int>(state.range(1));
  for (auto _ : state) {
    CellBounds b = jobs == 0 ? cell_bounds_serial(ifs, cells, cfg) : cell_bounds_parallel(ifs, cells, cfg, jobs);
    benchmark::DoNotOptimize(b.y.data());
  }
  state.counters["cells"] = static_cast<double>(cells.size());
}
BENCHMARK(BM_CellBounds)->ArgsProduct({{10, 12}, {0, 1, 2, 4, 8}})->Unit(benchmark::kMillisecond);

// Sweep cells with one uniform bound per cell.
void BM_SweepCells(benchmark::State& state) {
  std::vector<SweepCell> cells;
  for (int k = 0; k < 16; ++k) {
    SweepCell c;
    c.beta = parse_rational("1.6") + mpq_class(k, 10000);
    c.delta = parse_rational("1e-5");
    c.N = 5;
    c.L = 28;
    cells.push_back(c);
  }
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto rows = jobs == 0 ? run_cells_serial(cells) : run_cells(cells, jobs);
    benchmark::DoNotOptimize(rows.data());
  }
}
BENCHMARK(BM_SweepCells)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

// Planar grid queries.
void BM_PlanarCells(benchmark::State& state) {
  const DiagonalIFS2D ifs = selfaffine_ifs(1.5, 1.7);
  const Partition xs = generate_partition(bernoulli_ifs(1.5), 5);
  const Partition ys = generate_partition(bernoulli_ifs(1.7), 5);
  const UBConfig2D cfg = make_ub_config(ifs, 30, gamma_bernoulli, gamma_bernoulli);
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    CellBounds b = planar_cell_bounds(ifs, xs, ys, cfg, jobs);
    benchmark::DoNotOptimize(b.y.data());
  }
}
BENCHMARK(BM_PlanarCells)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

// Cylinder enumeration for the entropy sequence.
void BM_EntropySequence(benchmark::State& state) {
  const MatrixFamily fam = load_family(FRACDIM_DATA_DIR "/fair_coin.family");
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(entropy_upper_seq(fam, 18, jobs).u.value);
}
BENCHMARK(BM_EntropySequence)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
