#ifndef GPOOL_MODEL_HPP
#define GPOOL_MODEL_HPP

#include "gpool/graph.hpp"
#include "gpool/layers.hpp"
#include "gpool/pooling.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gpool {

/// flatten(pooled) → tanh(dense) → dense → logits.
struct ClassifierHead {
  Parameter hidden_weight;
  Parameter hidden_bias;
  Parameter out_weight;
  Parameter out_bias;

  ClassifierHead() = default;
  ClassifierHead(Index input_dim, Index hidden, Index classes, std::uint64_t seed);

  Index input_dim() const { return hidden_weight.value.rows(); }
  Index classes() const { return out_weight.value.cols(); }
  std::vector<Parameter*> parameters();
};

/// Returns 1×C logits.
Tensor head_forward(const Tensor& pooled, ClassifierHead& head);

struct ModelConfig {
  std::vector<Index> widths{32, 32, 32, 32, 1};
  Activation activation = Activation::tanh;
  bool include_input = false;
  PoolingConfig pooling;
  Index hidden = 128;
};

struct ForwardResult {
  Tensor logits;
  Selection selection;
};

class Model {
 public:
  Model(const ModelConfig& cfg, Index input_dim, int classes, std::uint64_t seed);

  /// Records backbone → pooling → head on `tape`. `adjacency` is the
  /// normalized propagation matrix of `g`.
  ForwardResult forward(Tape& tape, const Graph& g, const Matrix& adjacency);
  /// Concatenated node features only (no head), as a plain matrix.
  Matrix node_features(const Graph& g, const Matrix& adjacency);

  std::vector<Parameter*> parameters();
  const ModelConfig& config() const { return config_; }
  Backbone& backbone() { return backbone_; }
  ClassifierHead& head() { return head_; }
  int classes() const { return classes_; }

 private:
  ModelConfig config_;
  int classes_;
  Backbone backbone_;
  ClassifierHead head_;
};

std::size_t count_parameters(std::span<Parameter* const> params);
std::size_t count_parameters(Backbone& b);
std::size_t count_parameters(Model& m);

}  // namespace gpool

#endif  // GPOOL_MODEL_HPP
