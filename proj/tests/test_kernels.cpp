#include <doctest.h>

#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "labemb/glove.hpp"
#include "labemb/kernels.hpp"
#include "labemb/random.hpp"

using namespace labemb;

namespace {

std::vector<std::vector<std::int32_t>> random_units(std::size_t n, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::int32_t>> units(n);
  for (auto& u : units) {
    const auto len = 1 + rng.below(12);
    for (std::uint64_t k = 0; k < len; ++k) u.push_back(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(vocab))));
  }
  return units;
}

RowMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("cooccurrence kernels agree") {
  const auto units = random_units(500, 40, 1);
  for (bool weighted : {false, true}) {
    const auto a = kernels::cooccurrence_serial(units, 3, weighted);
    const auto b = kernels::cooccurrence_omp(units, 3, weighted);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].row == b[i].row);
      CHECK(a[i].col == b[i].col);
      CHECK(a[i].weight == doctest::Approx(b[i].weight).epsilon(1e-12));
    }
  }
}

TEST_CASE("squared distance kernels agree bitwise") {
  const auto x = random_matrix(60, 7, 2);
  const auto a = kernels::squared_distances_serial(x);
  CHECK(a == kernels::squared_distances_omp(x));
  CHECK(a(3, 3) == 0.0);
  CHECK(a(1, 2) == doctest::Approx((x.row(1) - x.row(2)).squaredNorm()));
}

TEST_CASE("affinity kernels agree bitwise") {
  const auto d = kernels::squared_distances_serial(random_matrix(50, 5, 3));
  std::vector<double> b1, b2;
  CHECK(kernels::conditional_affinities_serial(d, 8.0, &b1) == kernels::conditional_affinities_omp(d, 8.0, &b2));
  CHECK(b1 == b2);
}

TEST_CASE("tsne gradient kernels agree bitwise") {
  const auto p0 = random_matrix(40, 40, 4).cwiseAbs();
  const RowMatrix p = (p0 + p0.transpose()) / (p0.sum() * 2);
  const auto y = random_matrix(40, 2, 5);
  RowMatrix g1, g2;
  double kl1 = 0, kl2 = 0;
  kernels::tsne_gradient_serial(p, y, 12.0, g1, &kl1);
  kernels::tsne_gradient_omp(p, y, 12.0, g2, &kl2);
  CHECK(g1 == g2);
  CHECK(kl1 == kl2);
}

TEST_CASE("mean_rows kernels agree bitwise") {
  const auto v = random_matrix(30, 6, 6);
  auto ids = random_units(100, 30, 7);
  ids[5].clear();
  const auto a = kernels::mean_rows_serial(ids, v);
  CHECK(a == kernels::mean_rows_omp(ids, v));
  CHECK(a.row(5).isZero());
}

TEST_CASE("glove epoch kernels agree on a single thread") {
  const auto entries = kernels::cooccurrence_serial(random_units(200, 20, 8), 3, true);
  const std::size_t dim = 4, n = 20;
  auto init = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n * dim);
    for (auto& e : v) e = rng.uniform(-0.1, 0.1);
    return v;
  };
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  const kernels::GloveStep step{100.0, 0.75, 0.05};
  auto run = [&](bool omp) {
    auto w = init(1), wc = init(2);
    std::vector<double> b(n, 0), bc(n, 0), gw(n * dim, 1), gc(n * dim, 1), gb(n, 1), gbc(n, 1);
    const kernels::GloveBuffers buf{w.data(), wc.data(), b.data(), bc.data(), gw.data(), gc.data(), gb.data(), gbc.data(), dim};
    const double loss = omp ? kernels::glove_epoch_omp(entries, order, buf, step)
                            : kernels::glove_epoch_serial(entries, order, buf, step);
    return std::make_pair(loss, w);
  };
  const auto s = run(false);
  const auto o = run(true);
  CHECK(std::isfinite(s.first));
  // Hogwild updates only coincide with the serial order when one thread runs.
#ifdef _OPENMP
  if (omp_get_max_threads() == 1) CHECK(s == o);
#else
  CHECK(s == o);
#endif
}
