#include "gpool/pooling.hpp"
#include "gpool/random.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gpool;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_features(Index n, Index d, Rng& rng, bool integral = false) {
  Matrix m(n, d);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = integral ? static_cast<double>(rng.below(3)) - 1.0 : rng.uniform(-1.0, 1.0);
  return m;
}

PoolingConfig geometric_cfg(Index k, Metric metric = Metric::euclidean) {
  PoolingConfig c;
  c.method = PoolMethod::geometric;
  c.k = k;
  c.metric = metric;
  return c;
}

constexpr Metric kMetrics[] = {Metric::euclidean, Metric::inner_product, Metric::cosine};

/// Smallest gap between any two similarity values.
double min_gap(const Vector& s) {
  std::vector<double> v(s.data(), s.data() + s.size());
  std::sort(v.begin(), v.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
  return gap;
}

}  // namespace

TEST_SUITE("pooling") {

TEST_CASE("similarity examples") {
  CHECK(similarity(column({3.0}), Metric::euclidean).values == Vector::Zero(1));
  const auto s = similarity(column({0, 0, 1}), Metric::euclidean);
  CHECK(s.values == (Vector(3) << 1, 1, 2).finished());
  CHECK(s.orientation == Orientation::distance_like);
  CHECK(similarity(column({0, 0, 1}), Metric::cosine).orientation == Orientation::similarity_like);

  const Matrix same = Matrix::Constant(5, 3, 0.7);
  for (Metric m : kMetrics) {
    const Vector v = similarity(same, m).values;
    CHECK((v.array() == v(0)).all());
    CHECK(v.allFinite());
  }
}

TEST_CASE("inner product and cosine exclude the self term") {
  Matrix h(2, 2);
  h << 1, 0, 2, 0;
  CHECK(similarity(h, Metric::inner_product).values == (Vector(2) << 2, 2).finished());
  CHECK(similarity(h, Metric::cosine).values == (Vector(2) << 1, 1).finished());
  Matrix z(2, 2);
  z << 0, 0, 1, 1;
  CHECK(similarity(z, Metric::cosine).values == Vector::Zero(2));
}

TEST_CASE("geometric selection examples") {
  const auto r = geometric_select(column({0, 0, 1}), geometric_cfg(2));
  CHECK(r.idx == std::vector<Index>{0, 2});
  CHECK(r.order == std::vector<Index>{2, 0});
  CHECK(r.pooled == column({1, 0}));

  const auto tie = geometric_select(Matrix::Constant(5, 2, 0.3), geometric_cfg(3));
  CHECK(tie.idx == std::vector<Index>{0, 1, 2});

  const auto pad = geometric_select(column({0.4, -0.2}), geometric_cfg(5));
  CHECK(pad.idx == std::vector<Index>{0, 1});
  CHECK(pad.pooled.rows() == 5);
  CHECK(pad.pooled.bottomRows(3).isZero(0));
}

TEST_CASE("similarity-like metrics keep the smallest sums") {
  Matrix h(3, 2);
  h << 1, 0, 1, 0.1, -1, 0;
  const auto r = geometric_select(h, geometric_cfg(1, Metric::inner_product));
  CHECK(r.idx == std::vector<Index>{2});
  PoolingConfig flipped = geometric_cfg(1, Metric::inner_product);
  flipped.keep_most_similar = true;
  CHECK(geometric_select(h, flipped).idx != r.idx);
  flipped.metric = Metric::euclidean;
  CHECK(geometric_select(column({0, 0, 1}), flipped).idx == std::vector<Index>{0});
}

TEST_CASE("sort selection examples") {
  const auto r = sort_select(column({3, 1, 2}), 0, 1, 2);
  CHECK(r.idx == std::vector<Index>{0, 2});
  CHECK(r.pooled == column({3, 2}));
  CHECK(sort_select(Matrix::Ones(6, 1), 0, 1, 4).idx == std::vector<Index>{0, 1, 2, 3});
  const auto pad = sort_select(column({1, 2}), 0, 1, 3);
  CHECK(pad.idx == std::vector<Index>{0, 1});
  CHECK(pad.pooled.row(2).isZero(0));

  Matrix h(3, 2);
  h << 5, 1, 7, 1, 6, 0;
  CHECK(sort_select(h, 0, 2, 3).order == std::vector<Index>{1, 0, 2});
  CHECK_THROWS(sort_select(h, 1, 1, 2));
}

TEST_CASE("mixed selection degenerates to geometric") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Matrix h = random_features(n, 4, rng);
    for (Metric m : kMetrics) {
      PoolingConfig c = geometric_cfg(n + static_cast<Index>(rng.below(3)), m);
      c.method = PoolMethod::mixed;
      CHECK(mixed_select(h, 3, 4, c).order == geometric_select(h, c).order);
      c.k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      c.mixed_ratio = 1e6;
      CHECK(mixed_select(h, 3, 4, c).order == geometric_select(h, c).order);
    }
  }
}

TEST_CASE("mixed selection on six nodes composes both stages") {
  Matrix h(6, 2);
  // Last channel ranks nodes 5, 1, 3, 0 into the sort stage.
  h << 0.0, 0.2, 0.9, 0.8, 0.1, -0.5, -0.8, 0.6, 0.5, -0.1, -0.9, 0.9;
  PoolingConfig c = geometric_cfg(2);
  c.method = PoolMethod::mixed;
  const auto r = mixed_select(h, 1, 2, c);
  CHECK(r.order == oracle::mixed(oracle::to_rows(h), 1, 2, 2, 2.0, Metric::euclidean));
  for (Index i : r.idx) CHECK((i == 5 || i == 1 || i == 3 || i == 0));
  CHECK(r.idx.size() == 2);
}

TEST_CASE("selectors match brute-force oracles") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(12));
    const Index d = 1 + static_cast<Index>(rng.below(8));
    const bool integral = trial % 3 == 0;
    const Matrix h = random_features(n, d, rng, integral);
    const auto rows = oracle::to_rows(h);
    const Index k = 1 + static_cast<Index>(rng.below(14));
    const Index c0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    for (Metric m : kMetrics) {
      CAPTURE(trial);
      CAPTURE(to_string(m));
      const auto s = similarity(h, m).values;
      const auto so = oracle::similarity(rows, m);
      for (Index j = 0; j < n; ++j) CHECK(std::abs(s(j) - so[j]) <= 1e-12 * (1 + std::abs(so[j])));
      if (integral && m != Metric::inner_product) continue;
      PoolingConfig c = geometric_cfg(k, m);
      CHECK(geometric_select(h, c).order == oracle::geometric(rows, k, m));
      if (integral) continue;
      c.method = PoolMethod::mixed;
      CHECK(mixed_select(h, c0, d, c).order == oracle::mixed(rows, c0, d, k, c.mixed_ratio, m));
    }
    if (!integral)
      CHECK(sort_select(h, c0, d, k).order == oracle::sort_pool(rows, c0, d, k));
  }
}

TEST_CASE("idx is ascending and unique, pooled is k by d") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(12)), d = 1 + static_cast<Index>(rng.below(6));
    const Matrix h = random_features(n, d, rng, trial % 2 == 0);
    PoolingConfig c = geometric_cfg(1 + static_cast<Index>(rng.below(15)), kMetrics[trial % 3]);
    c.method = static_cast<PoolMethod>(trial % 3);
    const Selection sel = select_nodes(h, c, d - 1, d);
    const Matrix pooled = gather_pooled(h, sel, c.k);
    CHECK(pooled.rows() == c.k);
    CHECK(pooled.cols() == d);
    CHECK(sel.idx.size() == static_cast<std::size_t>(std::min(n, c.k)));
    CHECK(std::is_sorted(sel.idx.begin(), sel.idx.end()));
    CHECK(std::adjacent_find(sel.idx.begin(), sel.idx.end()) == sel.idx.end());
    CHECK(pooled.bottomRows(c.k - static_cast<Index>(sel.idx.size())).isZero(0));
  }
}

TEST_CASE("permuting rows permutes the selected set") {
  Rng rng(31);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(11));
    const Matrix h = random_features(n, 3, rng);
    const Metric m = kMetrics[trial % 3];
    if (min_gap(similarity(h, m).values) < 1e-9) continue;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    Matrix ph(n, 3);
    for (Index i = 0; i < n; ++i) ph.row(i) = h.row(perm[static_cast<std::size_t>(i)]);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    std::vector<Index> mapped;
    for (Index i : geometric_select(ph, geometric_cfg(k, m)).idx) mapped.push_back(perm[static_cast<std::size_t>(i)]);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == geometric_select(h, geometric_cfg(k, m)).idx);
    ++checked;
  }
  CHECK(checked > 250);
}

TEST_CASE("cosine selection ignores positive scaling") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(11));
    const Matrix h = random_features(n, 4, rng);
    if (min_gap(similarity(h, Metric::cosine).values) < 1e-9) continue;
    const double a = rng.uniform(0.01, 100.0);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    CHECK(geometric_select(Matrix(a * h), geometric_cfg(k, Metric::cosine)).idx ==
          geometric_select(h, geometric_cfg(k, Metric::cosine)).idx);
  }
}

TEST_CASE("dropped values") {
  Matrix h(3, 3);
  h << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const Selection keep_all = Selection::from_order({2, 0, 1});
  CHECK(dropped_values(h, keep_all).empty());
  CHECK(dropped_values(h, Selection::from_order({2, 0})) == std::vector<double>{4, 5, 6});
}

TEST_CASE("selectors work on float matrices") {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic> h(3, 1);
  h << 0.f, 0.f, 1.f;
  const auto r = geometric_select(h, geometric_cfg(2));
  CHECK(r.idx == std::vector<Index>{0, 2});
  CHECK(r.pooled(0, 0) == 1.f);
}

TEST_CASE("config validation and names") {
  PoolingConfig c;
  c.k = 0;
  CHECK_THROWS(c.validate());
  c.k = 2;
  c.mixed_ratio = 1.0;
  CHECK_THROWS(c.validate());
  CHECK(parse_method("gp") == PoolMethod::geometric);
  CHECK(parse_method("mixed") == PoolMethod::mixed);
  CHECK(parse_metric("cosine") == Metric::cosine);
  CHECK(parse_metric(to_string(Metric::inner_product)) == Metric::inner_product);
  CHECK_THROWS(parse_metric("manhattan"));
}

}  // TEST_SUITE
