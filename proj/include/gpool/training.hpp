#ifndef GPOOL_TRAINING_HPP
#define GPOOL_TRAINING_HPP

#include "gpool/graph.hpp"
#include "gpool/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gpool {

inline constexpr double kProbabilityFloor = 1e-12;

enum class OptimizerKind { adam, sgd };
std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Weight of the KL(uniform ‖ q) penalty.
  double lambda = 0.0;
  /// Graphs whose gradients are accumulated before each optimizer step.
  int batch_size = 32;
  int folds = 10;
  int repeats = 10;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

// Losses on a 1×C probability row. Both clamp q at kProbabilityFloor first.

/// −log q[label].
Tensor cross_entropy(const Tensor& q, int label);
/// D_KL(U ‖ q) = −log C − (1/C) Σ_c log q_c.
Tensor kl_uniform(const Tensor& q);
/// mean_i [ CE(q_i, y_i) + λ·KL(U ‖ q_i) ].
Tensor total_loss(std::span<const Tensor> q, std::span<const int> labels, double lambda);

double cross_entropy(const Vector& q, int label);
double kl_uniform(const Vector& q);
/// Shannon entropy in nats.
double entropy(const Vector& q);

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::vector<Parameter*> params);
  /// Applies one update from the accumulated grads, then zeroes them.
  void step();

 private:
  TrainConfig cfg_;
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_, v_;
  long long t_ = 0;
};

/// Dataset plus the per-graph propagation matrices, computed once.
struct PreparedDataset {
  const Dataset* data = nullptr;
  std::vector<Matrix> adjacency;

  explicit PreparedDataset(const Dataset& ds);
  const Graph& graph(std::size_t i) const { return data->graphs[i]; }
  std::size_t size() const { return data->size(); }
};

struct TrainHistory {
  std::vector<double> loss;     ///< mean training loss per epoch
  std::vector<double> entropy;  ///< H(mean eval prediction) per epoch
};

/// Softmax output for graph i (no gradient).
Vector predict(Model& model, const PreparedDataset& ds, std::size_t i);
double accuracy(Model& model, const PreparedDataset& ds, std::span<const std::size_t> indices);
/// H(q̄), q̄ the mean softmax output over `indices`.
double mean_prediction_entropy(Model& model, const PreparedDataset& ds,
                               std::span<const std::size_t> indices);

/// Trains in place. Visiting order is reshuffled every epoch from `seed`.
TrainHistory train_model(Model& model, const PreparedDataset& ds, std::span<const std::size_t> train,
                         std::span<const std::size_t> eval, const TrainConfig& cfg, std::uint64_t seed);

struct RunRecord {
  int repeat = 0;
  int fold = 0;
  double accuracy = 0.0;
  std::vector<double> loss_curve;
  std::vector<double> entropy_curve;
};

struct RunReport {
  std::string dataset;
  ModelConfig model;
  TrainConfig train;
  std::size_t parameter_count = 0;
  std::vector<RunRecord> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;

  void summarize();
};

/// Seeds depend only on (seed, repeat, fold), never on the pooling config.
std::uint64_t fold_seed(std::uint64_t seed, int repeat);
std::uint64_t init_seed(std::uint64_t seed, int repeat, int fold);
std::uint64_t order_seed(std::uint64_t seed, int repeat, int fold);

/// One train/evaluate run: fold `fold` of repeat `repeat` is held out.
/// `after_training`, if set, sees the trained model before it is discarded.
RunRecord run_fold(const PreparedDataset& ds, const ModelConfig& model_cfg, const TrainConfig& cfg,
                   int repeat, int fold, const std::function<void(Model&)>& after_training = {});

RunReport run_cross_validation(const Dataset& ds, const ModelConfig& model_cfg, const TrainConfig& cfg);

}  // namespace gpool

#endif  // GPOOL_TRAINING_HPP
