#ifndef GPOOL_LAYERS_HPP
#define GPOOL_LAYERS_HPP

#include "gpool/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gpool {

enum class Activation { tanh, relu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

/// Glorot-style symmetric uniform initialisation, bound √(6/(rows+cols)).
Matrix glorot_uniform(Index rows, Index cols, std::uint64_t seed);

/// σ(Â·H·W), no bias.
struct GraphConvLayer {
  Parameter weight;
  Activation activation = Activation::tanh;

  GraphConvLayer(Index in, Index out, Activation act, std::uint64_t seed);

  Index in_dim() const { return weight.value.rows(); }
  Index out_dim() const { return weight.value.cols(); }
};

Tensor conv_forward(const Tensor& h, const Tensor& adjacency, GraphConvLayer& layer);

struct BackboneOutput {
  Tensor concat;      ///< n×d', H^{0:L}
  Index last_begin;   ///< column range of the final conv layer inside concat
  Index last_end;
};

/// Stacked graph convolutions whose outputs are concatenated column-wise,
/// optionally preceded by the raw input features.
class Backbone {
 public:
  Backbone() = default;
  Backbone(Index input_dim, const std::vector<Index>& widths, Activation act, bool include_input,
           std::uint64_t seed);

  BackboneOutput forward(Tape& tape, const Matrix& features, const Matrix& adjacency);

  /// d' = Σ of concatenated widths.
  Index output_dim() const;
  Index input_dim() const { return input_dim_; }
  bool include_input() const { return include_input_; }
  std::vector<GraphConvLayer>& layers() { return layers_; }
  const std::vector<GraphConvLayer>& layers() const { return layers_; }
  std::vector<Parameter*> parameters();

 private:
  Index input_dim_ = 0;
  bool include_input_ = false;
  std::vector<GraphConvLayer> layers_;
};

}  // namespace gpool

#endif  // GPOOL_LAYERS_HPP
