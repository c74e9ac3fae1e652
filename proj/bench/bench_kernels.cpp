// Serial reference vs OpenMP kernels on camera-sized frames.
//   ./bench_kernels --benchmark_filter=filter
#include <benchmark/benchmark.h>

#include <random>

#include "sonicgrid/kernels.hpp"

using namespace sonicgrid;
namespace k = sonicgrid::kernels;

namespace {

GrayImage noise_frame(int w, int h) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(w, h);
  for (std::uint8_t& p : img.pixels()) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

GrayImage corridor_frame(int w, int h) {
  CameraConfig cam;
  cam.width = w;
  cam.height = h;
  Pose pose;
  pose.cam_pitch_deg = -20;
  return render_camera(generate_layout(0), pose, cam);
}

int side(const benchmark::State& s) { return static_cast<int>(s.range(0)); }

template <auto Kernel>
void single_pass(benchmark::State& s) {
  const GrayImage img = corridor_frame(side(s), side(s) * 3 / 4);
  SalientMask out(img.width(), img.height());
  const std::int64_t limit = single_pass_limit(0.7);
  for (auto _ : s) {
    Kernel(img, limit, out);
    benchmark::DoNotOptimize(out);
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(img.size()));
}

template <auto Kernel>
void filter_step(benchmark::State& s) {
  const GrayImage img = noise_frame(side(s), side(s) * 3 / 4);
  NeuronStates prev(img.width(), img.height(), NeuronStates::kScale), next(img.width(), img.height(), 0);
  const std::int64_t limit = numerator_limit(0.7);
  for (auto _ : s) {
    Kernel(img, prev, limit, next);
    benchmark::DoNotOptimize(next);
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(img.size()));
}

template <auto Kernel>
void cell_counts(benchmark::State& s) {
  const GrayImage img = noise_frame(side(s), side(s) * 3 / 4);
  const SalientMask mask = salient_mask(img, FilterConfig::operational());
  const GridSpec grid = grid_spec(img.width(), img.height());
  CellCounts out;
  for (auto _ : s) {
    Kernel(mask, grid, out);
    benchmark::DoNotOptimize(out);
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(img.size()));
}

template <auto Kernel>
void render(benchmark::State& s) {
  const Scene scene = generate_layout(0);
  CameraConfig cam;
  cam.width = side(s);
  cam.height = side(s) * 3 / 4;
  Pose pose;
  pose.cam_pitch_deg = -20;
  GrayImage out(cam.width, cam.height);
  for (auto _ : s) {
    Kernel(scene, pose, cam, out);
    benchmark::DoNotOptimize(out);
  }
  s.SetItemsProcessed(s.iterations() * cam.width * cam.height);
}

}  // namespace

#define SIZES ->Arg(192)->Arg(640)->Arg(1280)
BENCHMARK(single_pass<k::serial::single_pass_mask>)->Name("single_pass/serial") SIZES;
BENCHMARK(single_pass<k::omp::single_pass_mask>)->Name("single_pass/omp") SIZES;
BENCHMARK(filter_step<k::serial::filter_step>)->Name("filter_step/serial") SIZES;
BENCHMARK(filter_step<k::omp::filter_step>)->Name("filter_step/omp") SIZES;
BENCHMARK(cell_counts<k::serial::cell_counts>)->Name("cell_counts/serial") SIZES;
BENCHMARK(cell_counts<k::omp::cell_counts>)->Name("cell_counts/omp") SIZES;
BENCHMARK(render<k::serial::render_camera>)->Name("render_camera/serial") SIZES;
BENCHMARK(render<k::omp::render_camera>)->Name("render_camera/omp") SIZES;

BENCHMARK_MAIN();
