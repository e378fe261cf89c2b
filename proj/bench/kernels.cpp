// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "nslf/ingest/synth.hpp"
#include "nslf/ingest/unproject.hpp"
#include "nslf/mana/runtime.hpp"
#include "nslf/render/metrics.hpp"
#include "nslf/render/render.hpp"

using namespace nslf;

namespace {

CameraIntrinsics camera() {
  CameraIntrinsics K;
  K.width = 160;
  K.height = 120;
  K.fx = K.fy = 160;
  K.cx = 79.5;
  K.cy = 59.5;
  return K;
}

struct Scene {
  TriangleMesh mesh;
  Bvh bvh;
  Pose pose;
  Snapshot snapshot;
  std::vector<Vec3d> points;
  std::vector<Vec3f> dirs;
  Image a, b;
};

const Scene& scene() {
  static const Scene s = [] {
    Scene sc;
    const SynthScene synth = SynthScene::shiny_sphere({0, 0, 0}, 1.0, 0.15);
    sc.mesh = SynthOracle(synth).mesh(96);
    sc.bvh = Bvh::build(sc.mesh);
    sc.pose = Pose::look_at({0, 0.5, 3}, {0, 0, 0}, {0, 1, 0});

    ManaConfig cfg;
    cfg.grid.b_min = {-2, -2, -2};
    cfg.grid.b_max = {2, 2, 2};
    cfg.grid.cell_edge = 2;
    cfg.quota = 20;
    cfg.deterministic = true;
    ManaRuntime rt(cfg);
    const auto seq = synth_scene_frames(synth, std::span(&sc.pose, 1), camera());
    const auto batch = unproject_frame(seq.frames[0].depth, seq.frames[0].color, camera(), sc.pose, 1);
    rt.feed_frame(batch);
    sc.snapshot = rt.quiesce_and_snapshot();
    sc.points = batch.points;
    sc.dirs = batch.directions;

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    sc.a = Image(640, 480);
    sc.b = Image(640, 480);
    for (auto& v : sc.a.rgb) v = u(rng);
    for (std::size_t i = 0; i < sc.b.rgb.size(); ++i) sc.b.rgb[i] = 0.8f * sc.a.rgb[i] + 0.2f * u(rng);
    return sc;
  }();
  return s;
}

void BM_RaycastSerial(benchmark::State& st) {
  const auto& s = scene();
  for (auto _ : st) benchmark::DoNotOptimize(raycast_serial(s.bvh, s.mesh, camera(), s.pose));
}
void BM_RaycastOpenMP(benchmark::State& st) {
  const auto& s = scene();
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(raycast(s.bvh, s.mesh, camera(), s.pose));
}

void BM_PredictSerial(benchmark::State& st) {
  const auto& s = scene();
  for (auto _ : st) benchmark::DoNotOptimize(predict_batch_serial(s.snapshot, s.points, s.dirs));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.points.size()));
}
void BM_PredictOpenMP(benchmark::State& st) {
  const auto& s = scene();
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(predict_batch(s.snapshot, s.points, s.dirs));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.points.size()));
}

void BM_SsimSerial(benchmark::State& st) {
  const auto& s = scene();
  for (auto _ : st) benchmark::DoNotOptimize(ssim_serial(s.a, s.b));
}
void BM_SsimOpenMP(benchmark::State& st) {
  const auto& s = scene();
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(ssim(s.a, s.b));
}

void threads(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= omp_get_num_procs(); t *= 2) b->Arg(t);
  if ((omp_get_num_procs() & (omp_get_num_procs() - 1)) != 0) b->Arg(omp_get_num_procs());
}

}  // namespace

BENCHMARK(BM_RaycastSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RaycastOpenMP)->Apply(threads)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictOpenMP)->Apply(threads)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SsimSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SsimOpenMP)->Apply(threads)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
