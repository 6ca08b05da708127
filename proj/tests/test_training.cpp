#include "gpool/training.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace gpool;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) { return row(v).row(0).transpose(); }

ModelConfig tiny_model(PoolMethod method = PoolMethod::geometric, Index k = 4) {
  ModelConfig c;
  c.widths = {8, 8, 1};
  c.hidden = 16;
  c.pooling.method = method;
  c.pooling.k = k;
  return c;
}

TrainConfig quick(int epochs, int folds = 5, int repeats = 1) {
  TrainConfig c;
  c.epochs = epochs;
  c.folds = folds;
  c.repeats = repeats;
  c.learning_rate = 1e-2;
  c.batch_size = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("cross entropy examples") {
  Tape t;
  CHECK(cross_entropy(t.constant(row({0, 1})), 1).value()(0, 0) == 0.0);
  CHECK(cross_entropy(t.constant(row({0.5, 0.5})), 0).value()(0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(cross_entropy(t.constant(row({0.8, 0.2})), 1).value()(0, 0) == doctest::Approx(1.6094).epsilon(1e-4));
  CHECK(cross_entropy(vec({0.8, 0.2}), 1) == doctest::Approx(-std::log(0.2)));
  CHECK(std::isfinite(cross_entropy(t.constant(row({1, 0})), 1).value()(0, 0)));
  CHECK_THROWS(cross_entropy(t.constant(row({1, 0})), 2));
}

TEST_CASE("kl to uniform examples") {
  Tape t;
  CHECK(kl_uniform(t.constant(row({0.5, 0.5}))).value()(0, 0) == 0.0);
  CHECK(kl_uniform(vec({0.25, 0.25, 0.25, 0.25})) == 0.0);
  CHECK(kl_uniform(t.constant(row({1 - 1e-9, 1e-9}))).value()(0, 0) > 9.0);
  const double expected = -std::log(2.0) - 0.5 * (std::log(0.8) + std::log(0.2));
  CHECK(kl_uniform(t.constant(row({0.8, 0.2}))).value()(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(kl_uniform(vec({0.8, 0.2})) == doctest::Approx(0.2231).epsilon(1e-4));
  CHECK(kl_uniform(vec({0.0, 1.0})) > 0);
}

TEST_CASE("total loss examples") {
  Tape t;
  const Tensor q[] = {t.constant(row({0.8, 0.2}))};
  const int y[] = {0};
  CHECK(total_loss(q, y, 1.0).value()(0, 0) == doctest::Approx(0.4462).epsilon(1e-4));

  const Tensor u[] = {t.constant(row({1.0 / 3, 1.0 / 3, 1.0 / 3}))};
  const int y2[] = {2};
  CHECK(total_loss(u, y2, 5.0).value()(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS(total_loss(q, y, -1.0));
}

TEST_CASE("lambda zero is exactly mean cross entropy") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    std::vector<Tensor> q;
    std::vector<int> y;
    const int batch = 1 + static_cast<int>(rng.below(6));
    double ce = 0.0;
    for (int i = 0; i < batch; ++i) {
      Matrix z(1, 3);
      for (Index c = 0; c < 3; ++c) z(0, c) = rng.uniform(-4, 4);
      q.push_back(softmax_rows(t.constant(z)));
      y.push_back(static_cast<int>(rng.below(3)));
      ce = i == 0 ? cross_entropy(q.back(), y.back()).value()(0, 0)
                  : ce + cross_entropy(q.back(), y.back()).value()(0, 0);
    }
    const double mean_ce = batch == 1 ? ce : ce * (1.0 / batch);
    CHECK(total_loss(q, y, 0.0).value()(0, 0) == mean_ce);
  }
}

TEST_CASE("entropy bounds") {
  CHECK(entropy(vec({0.5, 0.5})) == doctest::Approx(std::log(2.0)));
  CHECK(entropy(vec({1.0, 0.0})) == 0.0);
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix z(1, 4);
    for (Index c = 0; c < 4; ++c) z(0, c) = rng.uniform(-10, 10);
    const double h = entropy(softmax_rows(z).row(0).transpose());
    CHECK(h >= 0.0);
    CHECK(h <= std::log(4.0) + 1e-12);
  }
}

TEST_CASE("one optimizer step decreases the loss on a separable toy") {
  Dataset ds = synthetic::separable(2, 4);
  const PreparedDataset prepared(ds);
  for (OptimizerKind kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    Model m(tiny_model(PoolMethod::geometric, 3), 2, 2, 8);
    TrainConfig cfg;
    cfg.optimizer = kind;
    auto loss = [&] {
      double s = 0;
      for (std::size_t i = 0; i < 2; ++i) s += cross_entropy(predict(m, prepared, i), ds.graphs[i].label);
      return s / 2;
    };
    const double before = loss();
    Optimizer opt(cfg, m.parameters());
    Tape t;
    for (std::size_t i = 0; i < 2; ++i) {
      const Tensor q = softmax_rows(m.forward(t, ds.graphs[i], prepared.adjacency[i]).logits);
      t.backward(scale(cross_entropy(q, ds.graphs[i].label), 0.5));
    }
    opt.step();
    CHECK(loss() < before);
    for (Parameter* p : m.parameters()) CHECK(p->grad.isZero(0));
  }
}

TEST_CASE("training history has one entry per epoch and bounded entropy") {
  const Dataset ds = synthetic::noise(20, 3);
  const PreparedDataset prepared(ds);
  Model m(tiny_model(), ds.feature_dim, 2, 1);
  std::vector<std::size_t> train{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, eval{10, 11, 12, 13};
  const TrainHistory h = train_model(m, prepared, train, eval, quick(6), 5);
  REQUIRE(h.loss.size() == 6);
  REQUIRE(h.entropy.size() == 6);
  for (double e : h.entropy) {
    CHECK(e >= 0.0);
    CHECK(e <= std::log(2.0) + 1e-12);
  }
  const std::vector<std::size_t> one_class{0, 2, 4};
  const double e = mean_prediction_entropy(m, prepared, one_class);
  CHECK(std::isfinite(e));
}

TEST_CASE("separable data is learned") {
  const Dataset ds = synthetic::separable(40, 7);
  const RunReport r = run_cross_validation(ds, tiny_model(), quick(30));
  CHECK(r.runs.size() == 5);
  CHECK(r.mean_accuracy >= 0.99);
}

TEST_CASE("an untrained model sits at chance") {
  const Dataset ds = synthetic::noise(60, 9);
  const RunReport r = run_cross_validation(ds, tiny_model(), quick(0));
  CHECK(std::abs(r.mean_accuracy - 0.5) <= 0.1);
  const PreparedDataset prepared(ds);
  Model m(tiny_model(), ds.feature_dim, 2, 4);
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  CHECK(mean_prediction_entropy(m, prepared, all) == doctest::Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("cross-validation is bit-identical across runs and job counts") {
  const Dataset ds = synthetic::noise(30, 11);
  TrainConfig cfg = quick(3, 3, 2);
  const RunReport a = run_cross_validation(ds, tiny_model(), cfg);
  cfg.jobs = 3;
  const RunReport b = run_cross_validation(ds, tiny_model(), cfg);
  REQUIRE(a.runs.size() == 6);
  REQUIRE(b.runs.size() == 6);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].repeat == b.runs[i].repeat);
    CHECK(a.runs[i].fold == b.runs[i].fold);
    CHECK(a.runs[i].accuracy == b.runs[i].accuracy);
    CHECK(a.runs[i].loss_curve == b.runs[i].loss_curve);
    CHECK(a.runs[i].entropy_curve == b.runs[i].entropy_curve);
  }
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.std_accuracy == b.std_accuracy);
}

TEST_CASE("pooling methods share folds and initial weights") {
  const Dataset ds = synthetic::noise(30, 12);
  for (int repeat = 0; repeat < 3; ++repeat) {
    const auto folds = stratified_folds(ds, 5, fold_seed(3, repeat));
    CHECK(folds == stratified_folds(ds, 5, fold_seed(3, repeat)));
    for (int fold = 0; fold < 5; ++fold) {
      Model sort(tiny_model(PoolMethod::sort), ds.feature_dim, 2, init_seed(3, repeat, fold));
      Model gp(tiny_model(PoolMethod::geometric), ds.feature_dim, 2, init_seed(3, repeat, fold));
      Model mixed(tiny_model(PoolMethod::mixed), ds.feature_dim, 2, init_seed(3, repeat, fold));
      const auto ps = sort.parameters(), pg = gp.parameters(), pm = mixed.parameters();
      REQUIRE(ps.size() == pg.size());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(ps[i]->value == pg[i]->value);
        CHECK(ps[i]->value == pm[i]->value);
      }
    }
  }
  CHECK(init_seed(3, 0, 1) != init_seed(3, 1, 0));
  CHECK(fold_seed(3, 0) != fold_seed(4, 0));
}

TEST_CASE("summarize uses the population standard deviation") {
  RunReport r;
  r.runs.resize(2);
  r.runs[0].accuracy = 0.5;
  r.runs[1].accuracy = 1.0;
  r.summarize();
  CHECK(r.mean_accuracy == 0.75);
  CHECK(r.std_accuracy == 0.25);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = -1;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.folds = 1;
  CHECK_THROWS(c.validate());
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS(parse_optimizer("rmsprop"));
}

}  // TEST_SUITE
