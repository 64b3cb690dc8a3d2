// Times each serial kernel against its OpenMP variant on synthetic inputs.
// Usage: labemb_bench [scale]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <vector>

#include <omp.h>

#include "labemb/glove.hpp"
#include "labemb/kernels.hpp"
#include "labemb/random.hpp"

using namespace labemb;
using bench_clock = std::chrono::steady_clock;

static double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  auto t0 = bench_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double, std::milli>(bench_clock::now() - t0).count() / reps;
}

static void report(const char* name, double serial, double omp) {
  std::printf("%-24s serial %9.2f ms   omp %9.2f ms   speedup %5.2fx\n", name, serial, omp, serial / omp);
}

int main(int argc, char** argv) {
  const int scale = argc > 1 ? std::atoi(argv[1]) : 1;
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(42);

  // co-occurrence over short units
  std::vector<std::vector<std::int32_t>> units(20000 * scale);
  for (auto& u : units) {
    u.resize(3 + rng.below(8));
    for (auto& t : u) t = static_cast<std::int32_t>(rng.below(400));
  }
  report("cooccurrence", time_ms([&] { kernels::cooccurrence_serial(units, 5, true); }, 3),
         time_ms([&] { kernels::cooccurrence_omp(units, 5, true); }, 3));

  // one GloVe epoch
  const auto entries = kernels::cooccurrence_serial(units, 5, true);
  const std::size_t dim = 100, v = 400;
  std::vector<double> w(v * dim), wc(v * dim), b(v), bc(v), gw(v * dim, 1.0), gc(v * dim, 1.0), gb(v, 1.0), gbc(v, 1.0);
  for (auto& x : w) x = rng.uniform(-0.5, 0.5) / dim;
  for (auto& x : wc) x = rng.uniform(-0.5, 0.5) / dim;
  kernels::GloveBuffers buf{w.data(), wc.data(), b.data(), bc.data(), gw.data(), gc.data(), gb.data(), gbc.data(), dim};
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  const kernels::GloveStep step{100.0, 0.75, 0.05};
  report("glove_epoch", time_ms([&] { kernels::glove_epoch_serial(entries, order, buf, step); }, 3),
         time_ms([&] { kernels::glove_epoch_omp(entries, order, buf, step); }, 3));

  // t-SNE pieces on 500 x 100
  RowMatrix x(500, 100);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  report("squared_distances", time_ms([&] { kernels::squared_distances_serial(x); }, 5),
         time_ms([&] { kernels::squared_distances_omp(x); }, 5));
  const Eigen::MatrixXd d2 = kernels::squared_distances_serial(x);
  report("conditional_affinities", time_ms([&] { kernels::conditional_affinities_serial(d2, 30.0); }, 3),
         time_ms([&] { kernels::conditional_affinities_omp(d2, 30.0); }, 3));
  RowMatrix p = kernels::conditional_affinities_serial(d2, 30.0);
  p = (p + p.transpose().eval()) / 1000.0;
  RowMatrix y(500, 2), grad(500, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  report("tsne_gradient", time_ms([&] { kernels::tsne_gradient_serial(p, y, 1.0, grad); }, 20),
         time_ms([&] { kernels::tsne_gradient_omp(p, y, 1.0, grad); }, 20));

  // mean aggregation over 20000 records
  std::vector<std::vector<std::int32_t>> ids(20000 * scale);
  for (auto& r : ids) {
    r.resize(rng.below(40));
    for (auto& t : r) t = static_cast<std::int32_t>(rng.below(400));
  }
  RowMatrix vecs(400, 300);
  for (Eigen::Index i = 0; i < vecs.size(); ++i) vecs.data()[i] = rng.normal();
  report("mean_rows", time_ms([&] { kernels::mean_rows_serial(ids, vecs); }, 3),
         time_ms([&] { kernels::mean_rows_omp(ids, vecs); }, 3));
  return 0;
}
