#include "gpool/layers.hpp"

#include "gpool/random.hpp"

#include <cmath>
#include <stdexcept>

namespace gpool {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

Matrix glorot_uniform(Index rows, Index cols, std::uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

GraphConvLayer::GraphConvLayer(Index in, Index out, Activation act, std::uint64_t seed)
    : weight("conv_weight", glorot_uniform(in, out, seed)), activation(act) {}

Tensor conv_forward(const Tensor& h, const Tensor& adjacency, GraphConvLayer& layer) {
  Tape& tape = h.tape();
  const Tensor w = tape.parameter(layer.weight);
  const Tensor z = matmul(adjacency, matmul(h, w));
  return layer.activation == Activation::tanh ? tanh(z) : relu(z);
}

Backbone::Backbone(Index input_dim, const std::vector<Index>& widths, Activation act,
                   bool include_input, std::uint64_t seed)
    : input_dim_(input_dim), include_input_(include_input) {
  if (widths.empty()) throw std::invalid_argument("backbone needs at least one layer");
  Index in = input_dim;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    if (widths[l] < 1) throw std::invalid_argument("layer width must be positive");
    layers_.emplace_back(in, widths[l], act, derive_seed(seed, {0xC0, l}));
    layers_.back().weight.name = "conv" + std::to_string(l);
    in = widths[l];
  }
}

BackboneOutput Backbone::forward(Tape& tape, const Matrix& features, const Matrix& adjacency) {
  if (features.cols() != input_dim_)
    throw ShapeError("backbone: features have " + std::to_string(features.cols()) +
                     " columns, expected " + std::to_string(input_dim_));
  const Tensor adj = tape.constant(adjacency);
  Tensor h = tape.constant(features);
  std::vector<Tensor> parts;
  if (include_input_) parts.push_back(h);
  for (GraphConvLayer& layer : layers_) {
    h = conv_forward(h, adj, layer);
    parts.push_back(h);
  }
  const Index d = output_dim();
  const Index last = layers_.back().out_dim();
  return {parts.size() == 1 ? parts.front() : concat_cols(parts), d - last, d};
}

Index Backbone::output_dim() const {
  Index d = include_input_ ? input_dim_ : 0;
  for (const auto& l : layers_) d += l.out_dim();
  return d;
}

std::vector<Parameter*> Backbone::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) out.push_back(&l.weight);
  return out;
}

}  // namespace gpool
