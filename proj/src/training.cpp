#include "gpool/training.hpp"

#include "gpool/random.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace gpool {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

// ---------------------------------------------------------------------------
// Losses

namespace {

Tensor log_probabilities(const Tensor& q) {
  if (q.rows() != 1) throw ShapeError("loss: expected a 1xC probability row");
  return log(clamp_min(q, kProbabilityFloor));
}

}  // namespace

Tensor cross_entropy(const Tensor& q, int label) {
  if (label < 0 || label >= q.cols()) throw std::out_of_range("cross_entropy: label out of range");
  return scale(pick(log_probabilities(q), 0, label), -1.0);
}

Tensor kl_uniform(const Tensor& q) {
  const double c = static_cast<double>(q.cols());
  const Tensor neg_mean_log = scale(mean(log_probabilities(q)), -1.0);
  const Tensor shift = q.tape().constant(Matrix::Constant(1, 1, -std::log(c)));
  return add(neg_mean_log, shift);
}

Tensor total_loss(std::span<const Tensor> q, std::span<const int> labels, double lambda) {
  if (q.empty() || q.size() != labels.size())
    throw std::invalid_argument("total_loss: need one label per output");
  if (!(lambda >= 0)) throw std::invalid_argument("total_loss: lambda must be >= 0");
  Tensor acc;
  for (std::size_t i = 0; i < q.size(); ++i) {
    Tensor term = cross_entropy(q[i], labels[i]);
    if (lambda != 0.0) term = add(term, scale(kl_uniform(q[i]), lambda));
    acc = i == 0 ? term : add(acc, term);
  }
  return q.size() == 1 ? acc : scale(acc, 1.0 / static_cast<double>(q.size()));
}

double cross_entropy(const Vector& q, int label) {
  return -std::log(std::max(q(label), kProbabilityFloor));
}

double kl_uniform(const Vector& q) {
  const double c = static_cast<double>(q.size());
  double s = 0.0;
  for (Index i = 0; i < q.size(); ++i) s += std::log(std::max(q(i), kProbabilityFloor));
  return -std::log(c) - s / c;
}

double entropy(const Vector& q) {
  double h = 0.0;
  for (Index i = 0; i < q.size(); ++i)
    if (q(i) > 0) h -= q(i) * std::log(q(i));
  return h;
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(const TrainConfig& cfg, std::vector<Parameter*> params)
    : cfg_(cfg), params_(std::move(params)) {
  for (Parameter* p : params_) {
    p->zero_grad();
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Optimizer::step() {
  ++t_;
  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == OptimizerKind::sgd) {
    for (Parameter* p : params_) {
      p->value -= lr * p->grad;
      p->grad.setZero();
    }
    return;
  }
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.epsilon);
    p.grad.setZero();
  }
}

// ---------------------------------------------------------------------------
// Training

PreparedDataset::PreparedDataset(const Dataset& ds) : data(&ds) {
  adjacency.reserve(ds.size());
  for (const Graph& g : ds.graphs) adjacency.push_back(normalize_adjacency(g));
}

Vector predict(Model& model, const PreparedDataset& ds, std::size_t i) {
  Tape tape;
  const ForwardResult out = model.forward(tape, ds.graph(i), ds.adjacency[i]);
  return softmax_rows(out.logits.value()).row(0).transpose();
}

double accuracy(Model& model, const PreparedDataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : indices) {
    const Vector q = predict(model, ds, i);
    Index best = 0;
    q.maxCoeff(&best);
    if (best == ds.graph(i).label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

double mean_prediction_entropy(Model& model, const PreparedDataset& ds,
                               std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  Vector mean_q = Vector::Zero(model.classes());
  for (std::size_t i : indices) mean_q += predict(model, ds, i);
  return entropy(mean_q / static_cast<double>(indices.size()));
}

TrainHistory train_model(Model& model, const PreparedDataset& ds, std::span<const std::size_t> train,
                         std::span<const std::size_t> eval, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainHistory hist;
  Optimizer opt(cfg, model.parameters());
  Rng rng(seed);
  std::vector<std::size_t> order(train.begin(), train.end());
  Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double weight = 1.0 / static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const ForwardResult out = model.forward(tape, ds.graph(i), ds.adjacency[i]);
        const Tensor q = softmax_rows(out.logits);
        const int label = ds.graph(i).label;
        const Tensor loss = total_loss(std::span(&q, 1), std::span(&label, 1), cfg.lambda);
        epoch_loss += loss.value()(0, 0);
        tape.backward(scale(loss, weight));
      }
      opt.step();
    }
    hist.loss.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
    hist.entropy.push_back(mean_prediction_entropy(model, ds, eval));
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Cross-validation

void RunReport::summarize() {
  if (runs.empty()) {
    mean_accuracy = std_accuracy = 0.0;
    return;
  }
  double s = 0.0;
  for (const auto& r : runs) s += r.accuracy;
  mean_accuracy = s / static_cast<double>(runs.size());
  double v = 0.0;
  for (const auto& r : runs) v += (r.accuracy - mean_accuracy) * (r.accuracy - mean_accuracy);
  std_accuracy = std::sqrt(v / static_cast<double>(runs.size()));
}

std::uint64_t fold_seed(std::uint64_t seed, int repeat) {
  return derive_seed(seed, {0xF0, static_cast<std::uint64_t>(repeat)});
}
std::uint64_t init_seed(std::uint64_t seed, int repeat, int fold) {
  return derive_seed(seed, {0x1D, static_cast<std::uint64_t>(repeat), static_cast<std::uint64_t>(fold)});
}
std::uint64_t order_seed(std::uint64_t seed, int repeat, int fold) {
  return derive_seed(seed, {0x5F, static_cast<std::uint64_t>(repeat), static_cast<std::uint64_t>(fold)});
}

RunRecord run_fold(const PreparedDataset& ds, const ModelConfig& model_cfg, const TrainConfig& cfg,
                   int repeat, int fold, const std::function<void(Model&)>& after_training) {
  const std::vector<int> assignment = stratified_folds(*ds.data, cfg.folds, fold_seed(cfg.seed, repeat));
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < assignment.size(); ++i) (assignment[i] == fold ? test : train).push_back(i);

  Model model(model_cfg, ds.data->feature_dim, ds.data->class_count, init_seed(cfg.seed, repeat, fold));
  TrainHistory hist = train_model(model, ds, train, test, cfg, order_seed(cfg.seed, repeat, fold));

  RunRecord rec;
  rec.repeat = repeat;
  rec.fold = fold;
  rec.accuracy = accuracy(model, ds, test);
  rec.loss_curve = std::move(hist.loss);
  rec.entropy_curve = std::move(hist.entropy);
  if (after_training) after_training(model);
  return rec;
}

RunReport run_cross_validation(const Dataset& ds, const ModelConfig& model_cfg, const TrainConfig& cfg) {
  cfg.validate();
  const PreparedDataset prepared(ds);
  RunReport report;
  report.dataset = ds.name;
  report.model = model_cfg;
  report.train = cfg;
  {
    Model probe(model_cfg, ds.feature_dim, ds.class_count, 0);
    report.parameter_count = count_parameters(probe);
  }
  // Fail early on an unsplittable dataset.
  (void)stratified_folds(ds, cfg.folds, fold_seed(cfg.seed, 0));

  const int total = cfg.repeats * cfg.folds;
  report.runs.resize(static_cast<std::size_t>(total));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(total));
  auto worker = [&] {
    for (int t = next++; t < total; t = next++) {
      try {
        report.runs[static_cast<std::size_t>(t)] =
            run_fold(prepared, model_cfg, cfg, t / cfg.folds, t % cfg.folds);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
  };
  const int jobs = std::min(cfg.jobs, total);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  report.summarize();
  return report;
}

}  // namespace gpool
