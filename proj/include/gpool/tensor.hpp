#ifndef GPOOL_TENSOR_HPP
#define GPOOL_TENSOR_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpool {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A trainable leaf. The value lives here; the tape only references it, so
/// large weight matrices are never copied per forward pass.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape. Nodes are appended in evaluation order, so
/// every node's inputs precede it and a single reverse sweep visits each node
/// exactly once.
class Tape {
 public:
  /// Receives the upstream gradient of a node and accumulates into its inputs.
  using Pullback = std::function<void(const Matrix& upstream, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a non-trainable input (copied).
  Tensor constant(Matrix value);
  /// Records a trainable leaf; backward() accumulates into p.grad.
  Tensor parameter(Parameter& p);
  /// Records the result of an operation.
  Tensor record(Matrix value, std::vector<std::size_t> inputs, Pullback pullback);

  const Matrix& value(std::size_t id) const;
  /// False for constants and for results that depend only on constants.
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Adds g into the gradient of node `id`. Parameter leaves accumulate
  /// straight into Parameter::grad. No-op when the node needs no gradient.
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    Matrix& target = n.param ? n.param->grad : n.grad;
    if (target.size() == 0)
      target = g;
    else
      target.noalias() += g;
  }

  /// Propagates d(loss)/d(node) for every node and adds the results into the
  /// grad of each Parameter leaf. Clears the tape afterwards.
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* borrowed = nullptr;
    Parameter* param = nullptr;
    std::vector<std::size_t> inputs;
    Pullback pullback;
    Matrix grad;
    bool needs_grad = false;

    const Matrix& value() const { return borrowed ? *borrowed : owned; }
  };

  std::vector<Node> nodes_;
};

inline const Matrix& Tensor::value() const {
  if (!tape_) throw std::logic_error("tensor is not attached to a tape");
  return tape_->value(id_);
}

// Differentiable operations. Operands must live on the same tape.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
/// x (r×c) + bias (1×c), the one broadcast the core supports.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
/// Throws DomainError on any non-positive entry.
Tensor log(const Tensor& x);
/// max(x, floor); gradient passes only where x > floor.
Tensor clamp_min(const Tensor& x, double floor);
Tensor softmax_rows(const Tensor& logits);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// 1×1 tensor holding x(r, c).
Tensor pick(const Tensor& x, Index r, Index c);
Tensor concat_cols(std::span<const Tensor> parts);
/// Row-major flatten to a 1×(rows·cols) tensor.
Tensor flatten(const Tensor& x);
/// Gathers `rows` of x into a `out_rows`×cols tensor; rows beyond
/// rows.size() are zero. Gradient flows only into gathered rows.
Tensor gather_rows(const Tensor& x, std::span<const Index> rows, Index out_rows);

/// Plain (tape-free) row softmax with max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const Scalar m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

}  // namespace gpool

#endif  // GPOOL_TENSOR_HPP
