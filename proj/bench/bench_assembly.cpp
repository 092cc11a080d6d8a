#include <benchmark/benchmark.h>

#include <omp.h>

#include "bdie/bdies_m12.hpp"
#include "bdie/reference.hpp"

using namespace bdie;

namespace {

struct Fixture {
  MeshPair meshes;
  CoefficientField field = CoefficientField::gaussian_bump();
  std::vector<RowMeta> rows;
  std::vector<ColMeta> tris, verts;

  explicit Fixture(int level) : meshes(build_mesh_pair(level)) {
    rows = cell_rows(meshes.volume);
    const auto b = boundary_rows(meshes.surface);
    rows.insert(rows.end(), b.begin(), b.end());
    tris = triangle_columns(meshes.surface, Support::All);
    verts = vertex_columns(meshes.surface, Support::All);
  }
};

const Fixture& fixture(int level) {
  static Fixture f1(1), f2(2);
  return level == 1 ? f1 : f2;
}

int workers_arg(const benchmark::State& st) { return st.range(1) == 0 ? omp_get_max_threads() : 1; }

// range(0): mesh level; range(1): 1 serial reference, 0 parallel engine.

void BM_V(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  const SurfaceQuadrature sq(f.meshes.surface, QuadratureOptions{}.layer, &f.field);
  for (auto _ : st) {
    OperatorBlock b = st.range(1) ? reference::assemble_V_block_serial(sq, f.rows, f.tris)
                                  : assemble_V_block(sq, f.rows, f.tris, Exec{workers_arg(st)});
    benchmark::DoNotOptimize(b.matrix.data());
  }
}

void BM_W(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  const SurfaceQuadrature sq(f.meshes.surface, QuadratureOptions{}.layer, &f.field);
  for (auto _ : st) {
    OperatorBlock b = st.range(1) ? reference::assemble_W_block_serial(sq, f.rows, f.verts)
                                  : assemble_W_block(sq, f.rows, f.verts, Exec{workers_arg(st)});
    benchmark::DoNotOptimize(b.matrix.data());
  }
}

void BM_R(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  const VolumeQuadrature vq(f.meshes.volume, QuadratureOptions{}.volume, &f.field);
  for (auto _ : st) {
    OperatorBlock b = st.range(1) ? reference::assemble_R_block_serial(vq, f.rows)
                                  : assemble_R_block(vq, f.rows, Exec{workers_arg(st)});
    benchmark::DoNotOptimize(b.matrix.data());
  }
}

void BM_M12(benchmark::State& st) {
  const Fixture& f = fixture(static_cast<int>(st.range(0)));
  M12Options o;
  o.exec = Exec{st.range(1) ? 1 : 0};
  for (auto _ : st) {
    M12System s = assemble_M12(f.meshes, f.field, o);
    benchmark::DoNotOptimize(s.matrix.data());
  }
}

void args(benchmark::internal::Benchmark* b) {
  b->ArgNames({"level", "serial"})->Unit(benchmark::kMillisecond);
  for (int level : {1, 2})
    for (int serial : {1, 0}) b->Args({level, serial});
}

}  // namespace

BENCHMARK(BM_V)->Apply(args);
BENCHMARK(BM_W)->Apply(args);
BENCHMARK(BM_R)->Apply(args);
BENCHMARK(BM_M12)->Apply(args);

BENCHMARK_MAIN();
