#include "gpool/tensor.hpp"

#include <cmath>
#include <sstream>

namespace gpool {

namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Tape& same_tape(const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw std::logic_error("operand is not attached to a tape");
  if (&a.tape() != &b.tape()) throw std::logic_error("operands live on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::parameter(Parameter& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
  Node n;
  n.borrowed = &p.value;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::vector<std::size_t> inputs, Pullback pullback) {
  Node n;
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw std::logic_error("input recorded after its consumer");
    n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  n.owned = std::move(value);
  n.inputs = std::move(inputs);
  n.pullback = std::move(pullback);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

const Matrix& Tape::value(std::size_t id) const { return nodes_.at(id).value(); }

void Tape::backward(const Tensor& loss) {
  if (&loss.tape() != this) throw std::logic_error("loss does not belong to this tape");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss must be 1x1, got " + shape_of(lv));

  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || n.param) continue;
    if (n.pullback) {
      Matrix g = std::move(n.grad);
      Pullback pb = std::move(n.pullback);
      pb(g, *this);
    }
  }
  clear();
}

// ---------------------------------------------------------------------------
// Operations

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows())
    throw ShapeError("matmul: inner dimensions differ " + shape_of(av) + " * " + shape_of(bv));
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(av * bv, {ia, ib}, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g * tp.value(ib).transpose());
    tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), {ia, ib}, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& t = same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), {ia, ib}, [ia, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -g);
  });
}

Tensor scale(const Tensor& a, double s) {
  const std::size_t ia = a.id();
  return a.tape().record(a.value() * s, {ia},
                         [ia, s](const Matrix& g, Tape& tp) { tp.accumulate(ia, g * s); });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  Tape& t = same_tape(x, bias);
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("add_row_bias: bias " + shape_of(bv) + " does not match " + shape_of(xv));
  Matrix out = xv.rowwise() + bv.row(0);
  const std::size_t ix = x.id(), ib = bias.id();
  return t.record(std::move(out), {ix, ib}, [ix, ib](const Matrix& g, Tape& tp) {
    tp.accumulate(ix, g);
    tp.accumulate(ib, g.colwise().sum());
  });
}

Tensor tanh(const Tensor& x) {
  Matrix z = x.value().array().tanh().matrix();
  const std::size_t ix = x.id();
  Tape& t = x.tape();
  // Id of the node being recorded.
  const std::size_t self = t.size();
  return t.record(std::move(z), {ix}, [ix, self](const Matrix& g, Tape& tp) {
    const Matrix& zv = tp.value(self);
    tp.accumulate(ix, (g.array() * (1.0 - zv.array().square())).matrix());
  });
}

Tensor relu(const Tensor& x) {
  const std::size_t ix = x.id();
  return x.tape().record(x.value().cwiseMax(0.0), {ix}, [ix](const Matrix& g, Tape& tp) {
    const Matrix& xv = tp.value(ix);
    tp.accumulate(ix, (xv.array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Tensor exp(const Tensor& x) {
  const std::size_t ix = x.id();
  Tape& t = x.tape();
  const std::size_t self = t.size();
  return t.record(x.value().array().exp().matrix(), {ix}, [ix, self](const Matrix& g, Tape& tp) {
    tp.accumulate(ix, g.cwiseProduct(tp.value(self)));
  });
}

Tensor log(const Tensor& x) {
  const Matrix& xv = x.value();
  for (Index r = 0; r < xv.rows(); ++r)
    for (Index c = 0; c < xv.cols(); ++c)
      if (!(xv(r, c) > 0.0))
        throw DomainError("log: non-positive entry at (" + std::to_string(r) + "," +
                          std::to_string(c) + ")");
  const std::size_t ix = x.id();
  return x.tape().record(xv.array().log().matrix(), {ix}, [ix](const Matrix& g, Tape& tp) {
    tp.accumulate(ix, g.cwiseQuotient(tp.value(ix)));
  });
}

Tensor clamp_min(const Tensor& x, double floor) {
  const std::size_t ix = x.id();
  return x.tape().record(x.value().cwiseMax(floor), {ix}, [ix, floor](const Matrix& g, Tape& tp) {
    tp.accumulate(ix, (tp.value(ix).array() > floor).select(g.array(), 0.0).matrix());
  });
}

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t ix = logits.id();
  Tape& t = logits.tape();
  const std::size_t self = t.size();
  return t.record(softmax_rows(logits.value()), {ix}, [ix, self](const Matrix& g, Tape& tp) {
    const Matrix& p = tp.value(self);
    // dL/dx = p ⊙ (g − rowsum(g ⊙ p))
    const Vector dots = g.cwiseProduct(p).rowwise().sum();
    Matrix dx = p.cwiseProduct(g - dots.replicate(1, g.cols()));
    tp.accumulate(ix, dx);
  });
}

Tensor sum(const Tensor& x) {
  const std::size_t ix = x.id();
  const Index r = x.rows(), c = x.cols();
  return x.tape().record(Matrix::Constant(1, 1, x.value().sum()), {ix},
                         [ix, r, c](const Matrix& g, Tape& tp) {
                           tp.accumulate(ix, Matrix::Constant(r, c, g(0, 0)));
                         });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / n);
}

Tensor pick(const Tensor& x, Index r, Index c) {
  const Matrix& xv = x.value();
  if (r < 0 || r >= xv.rows() || c < 0 || c >= xv.cols())
    throw ShapeError("pick: index out of range for " + shape_of(xv));
  const std::size_t ix = x.id();
  const Index rows = xv.rows(), cols = xv.cols();
  return x.tape().record(Matrix::Constant(1, 1, xv(r, c)), {ix},
                         [ix, r, c, rows, cols](const Matrix& g, Tape& tp) {
                           Matrix dx = Matrix::Zero(rows, cols);
                           dx(r, c) = g(0, 0);
                           tp.accumulate(ix, dx);
                         });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  std::vector<std::size_t> ids;
  std::vector<Index> widths;
  for (const Tensor& p : parts) {
    same_tape(parts.front(), p);
    if (p.rows() != rows)
      throw ShapeError("concat_cols: row count " + std::to_string(p.rows()) + " vs " +
                       std::to_string(rows));
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Tensor& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return t.record(std::move(out), ids, [ids, widths](const Matrix& g, Tape& tp) {
    Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      tp.accumulate(ids[i], g.middleCols(off, widths[i]));
      off += widths[i];
    }
  });
}

Tensor flatten(const Tensor& x) {
  const Matrix& xv = x.value();
  const Index r = xv.rows(), c = xv.cols();
  Matrix out = Eigen::Map<const Matrix>(xv.data(), 1, r * c);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, r, c](const Matrix& g, Tape& tp) {
    tp.accumulate(ix, Eigen::Map<const Matrix>(g.data(), r, c));
  });
}

Tensor gather_rows(const Tensor& x, std::span<const Index> rows, Index out_rows) {
  const Matrix& xv = x.value();
  if (static_cast<Index>(rows.size()) > out_rows)
    throw ShapeError("gather_rows: more indices than output rows");
  Matrix out = Matrix::Zero(out_rows, xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= xv.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Index>(i)) = xv.row(rows[i]);
  }
  const std::size_t ix = x.id();
  std::vector<Index> idx(rows.begin(), rows.end());
  const Index src_rows = xv.rows(), cols = xv.cols();
  return x.tape().record(std::move(out), {ix},
                         [ix, idx = std::move(idx), src_rows, cols](const Matrix& g, Tape& tp) {
                           Matrix dx = Matrix::Zero(src_rows, cols);
                           for (std::size_t i = 0; i < idx.size(); ++i)
                             dx.row(idx[i]) += g.row(static_cast<Index>(i));
                           tp.accumulate(ix, dx);
                         });
}

}  // namespace gpool
