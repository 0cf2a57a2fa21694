// Times the serial reference kernels against the OpenMP versions at
// model-typical shapes and prints per-kernel speedups.

#include <chrono>
#include <cstdio>
#include <vector>

#include "stt/common.hpp"
#include "stt/kernels.hpp"

using namespace stt;

namespace {

std::vector<float> randomVec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = rng.uniformSigned(1.0f);
  return v;
}

template <class F>
double timeMs(F&& fn, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double omp_ms) {
  std::printf("%-24s %10.3f ms %10.3f ms %8.2fx\n", name, serial_ms, omp_ms,
              serial_ms / omp_ms);
}

}  // namespace

int main() {
  Rng rng(1234);
  const int reps = 5;

  std::printf("kernel backends: openmp %s, max threads %d\n",
              kernels::openmpAvailable() ? "available" : "unavailable", kernels::maxThreads());
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  {
    int n = 512, k = 256, m = 256;
    auto a = randomVec(static_cast<std::size_t>(n) * k, rng);
    auto b = randomVec(static_cast<std::size_t>(k) * m, rng);
    std::vector<float> c(static_cast<std::size_t>(n) * m);
    double s = timeMs([&] { kernels::serial::gemmNN(a.data(), b.data(), c.data(), n, k, m, false); }, reps);
    double o = timeMs([&] { kernels::omp::gemmNN(a.data(), b.data(), c.data(), n, k, m, false); }, reps);
    report("gemmNN 512x256x256", s, o);
  }
  {
    int n = 512, k = 256, m = 512;
    auto a = randomVec(static_cast<std::size_t>(n) * k, rng);
    auto b = randomVec(static_cast<std::size_t>(m) * k, rng);
    std::vector<float> c(static_cast<std::size_t>(n) * m);
    double s = timeMs([&] { kernels::serial::gemmNT(a.data(), b.data(), c.data(), n, k, m, false); }, reps);
    double o = timeMs([&] { kernels::omp::gemmNT(a.data(), b.data(), c.data(), n, k, m, false); }, reps);
    report("gemmNT 512x256x512", s, o);
  }
  {
    int rows = 512, cols = 512;
    auto x = randomVec(static_cast<std::size_t>(rows) * cols, rng);
    std::vector<float> y(x.size());
    double s = timeMs([&] { kernels::serial::softmaxRows(x.data(), y.data(), rows, cols, -1e30f); }, reps);
    double o = timeMs([&] { kernels::omp::softmaxRows(x.data(), y.data(), rows, cols, -1e30f); }, reps);
    report("softmax 512x512", s, o);
  }
  {
    int rows = 512, cols = 256;
    auto x = randomVec(static_cast<std::size_t>(rows) * cols, rng);
    auto gamma = randomVec(cols, rng);
    auto beta = randomVec(cols, rng);
    std::vector<float> y(x.size()), xhat(x.size()), inv_std(rows);
    double s = timeMs(
        [&] {
          kernels::serial::layerNormRows(x.data(), gamma.data(), beta.data(), y.data(),
                                         xhat.data(), inv_std.data(), rows, cols, 1e-5f);
        },
        reps);
    double o = timeMs(
        [&] {
          kernels::omp::layerNormRows(x.data(), gamma.data(), beta.data(), y.data(), xhat.data(),
                                      inv_std.data(), rows, cols, 1e-5f);
        },
        reps);
    report("layernorm 512x256", s, o);
  }
  {
    int n = 512, dk = 32, clip = 256;
    auto q = randomVec(static_cast<std::size_t>(n) * dk, rng);
    auto e = randomVec(static_cast<std::size_t>(2 * clip + 1) * dk, rng);
    std::vector<float> out(static_cast<std::size_t>(n) * n);
    double s = timeMs([&] { kernels::serial::relativeLogits(q.data(), e.data(), out.data(), n, dk, clip); }, reps);
    double o = timeMs([&] { kernels::omp::relativeLogits(q.data(), e.data(), out.data(), n, dk, clip); }, reps);
    report("rel-logits 512x32", s, o);
  }
  {
    std::size_t count = 1 << 22;
    auto g = randomVec(count, rng);
    std::vector<float> p(count, 0.1f), m(count, 0.0f), v(count, 0.0f);
    double s = timeMs(
        [&] {
          kernels::serial::adamUpdate(p.data(), g.data(), m.data(), v.data(), count, 1e-3f, 0.9f,
                                      0.999f, 1e-8f, 0.9f, 0.999f);
        },
        reps);
    double o = timeMs(
        [&] {
          kernels::omp::adamUpdate(p.data(), g.data(), m.data(), v.data(), count, 1e-3f, 0.9f,
                                   0.999f, 1e-8f, 0.9f, 0.999f);
        },
        reps);
    report("adam 4M params", s, o);
  }
  return 0;
}
