// SPDX-License-Identifier: Apache-2.0
// Micro-benchmarks for the hot paths: rasterization (forward and backward),
// field ray marching, SSIM, and point-cloud scale estimation.
#include <benchmark/benchmark.h>

#include "splatinit/field.hpp"
#include "splatinit/init.hpp"
#include "splatinit/metrics.hpp"
#include "splatinit/rng.hpp"
#include "splatinit/scenes.hpp"
#include "splatinit/splat.hpp"

namespace {

using namespace splatinit;

GaussianScene make_bench_scene(int n_primitives, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud cloud;
  cloud.positions.reserve(static_cast<std::size_t>(n_primitives));
  cloud.colors.reserve(static_cast<std::size_t>(n_primitives));
  for (int i = 0; i < n_primitives; ++i) {
    cloud.positions.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                 rng.uniform(0.0, 2.4));
    cloud.colors.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
  }
  return scene_from_point_cloud(cloud);
}

Camera make_bench_camera(int resolution) {
  const ToyScene toy = make_toy_scene("spheres", 8, 4, 1);
  Camera camera = toy.dataset.cameras.front();
  camera.width = resolution;
  camera.height = resolution;
  camera.fx = camera.fy = 0.75 * resolution;
  camera.cx = camera.cy = 0.5 * resolution;
  return camera;
}

void BM_RenderForward(benchmark::State& state) {
  const GaussianScene scene = make_bench_scene(static_cast<int>(state.range(0)), 11);
  const Camera camera = make_bench_camera(128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render(scene, camera));
  }
}
BENCHMARK(BM_RenderForward)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RenderBackward(benchmark::State& state) {
  const GaussianScene scene = make_bench_scene(static_cast<int>(state.range(0)), 11);
  const Camera camera = make_bench_camera(128);
  Image d_color(camera.width, camera.height, 3);
  Image d_depth(camera.width, camera.height, 1);
  for (double& v : d_color.data) v = 1e-3;
  for (double& v : d_depth.data) v = 1e-4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_backward(scene, camera, d_color, d_depth));
  }
}
BENCHMARK(BM_RenderBackward)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FieldRender(benchmark::State& state) {
  const ToyScene toy = make_toy_scene("spheres", 8, 4, 1);
  const Camera camera = make_bench_camera(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_field(toy.field, camera, 192));
  }
}
BENCHMARK(BM_FieldRender)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(3);
  Image a(side, side, 3);
  Image b(side, side, 3);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ssim_with_gradient(a, b));
  }
}
BENCHMARK(BM_Ssim)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SceneFromPoints(benchmark::State& state) {
  Rng rng(5);
  PointCloud cloud;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    cloud.positions.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                 rng.uniform(-2.0, 2.0));
    cloud.colors.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(scene_from_point_cloud(cloud));
  }
}
BENCHMARK(BM_SceneFromPoints)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
