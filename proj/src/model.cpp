#include "gpool/model.hpp"

#include "gpool/random.hpp"

namespace gpool {

ClassifierHead::ClassifierHead(Index input_dim, Index hidden, Index classes, std::uint64_t seed)
    : hidden_weight("head_hidden_weight", glorot_uniform(input_dim, hidden, derive_seed(seed, {0x4E, 0}))),
      hidden_bias("head_hidden_bias", Matrix::Zero(1, hidden)),
      out_weight("head_out_weight", glorot_uniform(hidden, classes, derive_seed(seed, {0x4E, 1}))),
      out_bias("head_out_bias", Matrix::Zero(1, classes)) {}

std::vector<Parameter*> ClassifierHead::parameters() {
  return {&hidden_weight, &hidden_bias, &out_weight, &out_bias};
}

Tensor head_forward(const Tensor& pooled, ClassifierHead& head) {
  Tape& t = pooled.tape();
  const Tensor x = flatten(pooled);
  if (x.cols() != head.input_dim())
    throw ShapeError("head: input has " + std::to_string(x.cols()) + " entries, expected " +
                     std::to_string(head.input_dim()));
  const Tensor hidden =
      tanh(add_row_bias(matmul(x, t.parameter(head.hidden_weight)), t.parameter(head.hidden_bias)));
  return add_row_bias(matmul(hidden, t.parameter(head.out_weight)), t.parameter(head.out_bias));
}

Model::Model(const ModelConfig& cfg, Index input_dim, int classes, std::uint64_t seed)
    : config_(cfg),
      classes_(classes),
      backbone_(input_dim, cfg.widths, cfg.activation, cfg.include_input, derive_seed(seed, {0xBB})) {
  config_.pooling.validate();
  if (classes < 1) throw std::invalid_argument("model: need at least one class");
  head_ = ClassifierHead(config_.pooling.k * backbone_.output_dim(), cfg.hidden, classes,
                         derive_seed(seed, {0xEE}));
}

ForwardResult Model::forward(Tape& tape, const Graph& g, const Matrix& adjacency) {
  const BackboneOutput b = backbone_.forward(tape, g.features, adjacency);
  Selection sel = select_nodes(b.concat.value(), config_.pooling, b.last_begin, b.last_end);
  const Tensor pooled = gather_rows(b.concat, sel.order, config_.pooling.k);
  return {head_forward(pooled, head_), std::move(sel)};
}

Matrix Model::node_features(const Graph& g, const Matrix& adjacency) {
  Tape tape;
  return backbone_.forward(tape, g.features, adjacency).concat.value();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = backbone_.parameters();
  for (Parameter* p : head_.parameters()) out.push_back(p);
  return out;
}

std::size_t count_parameters(std::span<Parameter* const> params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += static_cast<std::size_t>(p->size());
  return n;
}

std::size_t count_parameters(Backbone& b) { return count_parameters(b.parameters()); }
std::size_t count_parameters(Model& m) { return count_parameters(m.parameters()); }

}  // namespace gpool
