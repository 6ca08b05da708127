#ifndef GPOOL_POOLING_HPP
#define GPOOL_POOLING_HPP

// Global top-k node selection: sort pooling, geometric pooling and the
// two-stage mix of both.
//
// Every selector returns the retained nodes twice: `order` in ranking order
// (best first), which is the row order of the pooled matrix fed to the
// classifier, and `idx` in ascending node order, which is the retained set.
// Ties are always broken towards the smaller node index.

#include "gpool/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpool {

enum class PoolMethod { sort, geometric, mixed };
enum class Metric { euclidean, inner_product, cosine };
/// distance_like: larger means less similar. similarity_like: the opposite.
enum class Orientation { distance_like, similarity_like };

std::string to_string(PoolMethod m);
std::string to_string(Metric m);
PoolMethod parse_method(const std::string& s);
Metric parse_metric(const std::string& s);

inline Orientation orientation_of(Metric m) {
  return m == Metric::euclidean ? Orientation::distance_like : Orientation::similarity_like;
}

struct PoolingConfig {
  PoolMethod method = PoolMethod::geometric;
  Index k = 1;
  Metric metric = Metric::euclidean;
  /// Mixed pooling keeps ceil(mixed_ratio·k) nodes after the sort stage.
  double mixed_ratio = 2.0;
  /// Keep the most similar nodes instead (debug comparison only).
  bool keep_most_similar = false;

  void validate() const {
    if (k < 1) throw std::invalid_argument("pooling: k must be >= 1");
    if (!(mixed_ratio > 1.0)) throw std::invalid_argument("pooling: mixed ratio must be > 1");
  }
};

template <typename Scalar>
struct SimilarityVector {
  VectorX<Scalar> values;
  Orientation orientation = Orientation::distance_like;
};

struct Selection {
  std::vector<Index> order;  ///< retained nodes, ranking order
  std::vector<Index> idx;    ///< retained nodes, ascending

  static Selection from_order(std::vector<Index> order) {
    Selection s;
    s.idx = order;
    std::sort(s.idx.begin(), s.idx.end());
    s.order = std::move(order);
    return s;
  }
};

template <typename Scalar>
struct SelectionResult : Selection {
  MatrixX<Scalar> pooled;  ///< k×d', rows in `order`, zero-padded
};

/// Per-node sum of pairwise metric values against every other node.
template <typename Derived>
SimilarityVector<typename Derived::Scalar> similarity(const Eigen::MatrixBase<Derived>& h,
                                                      Metric metric) {
  using Scalar = typename Derived::Scalar;
  const Index n = h.rows();
  SimilarityVector<Scalar> s;
  s.orientation = orientation_of(metric);
  s.values = VectorX<Scalar>::Zero(n);
  switch (metric) {
    case Metric::euclidean:
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) s.values(j) += (h.row(i) - h.row(j)).norm();
      break;
    case Metric::inner_product:
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
          if (i != j) s.values(j) += h.row(i).dot(h.row(j));
      break;
    case Metric::cosine: {
      const VectorX<Scalar> norms = h.rowwise().norm();
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
          if (i != j && norms(i) > Scalar(0) && norms(j) > Scalar(0))
            s.values(j) += h.row(i).dot(h.row(j)) / (norms(i) * norms(j));
      break;
    }
  }
  return s;
}

/// Ranks nodes least-similar first and keeps min(n, k) of them.
template <typename Scalar>
std::vector<Index> rank_least_similar(const SimilarityVector<Scalar>& s, Index k,
                                      bool keep_most_similar = false) {
  const Index n = s.values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const bool larger_first = (s.orientation == Orientation::distance_like) != keep_most_similar;
  const auto& v = s.values;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (v(a) != v(b)) return larger_first ? v(a) > v(b) : v(a) < v(b);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(std::min(n, k)));
  return order;
}

template <typename Derived>
Selection geometric_rank(const Eigen::MatrixBase<Derived>& h, const PoolingConfig& cfg) {
  return Selection::from_order(rank_least_similar(similarity(h, cfg.metric), cfg.k, cfg.keep_most_similar));
}

/// Sort pooling: descending by the last column of [col_begin, col_end), then
/// by the preceding columns right to left, then by node index.
template <typename Derived>
Selection sort_rank(const Eigen::MatrixBase<Derived>& h, Index col_begin, Index col_end, Index k) {
  if (col_begin < 0 || col_end > h.cols() || col_begin >= col_end)
    throw std::invalid_argument("sort pooling: empty or invalid channel range");
  std::vector<Index> order(static_cast<std::size_t>(h.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index c = col_end; c-- > col_begin;)
      if (h(a, c) != h(b, c)) return h(a, c) > h(b, c);
    return a < b;
  });
  order.resize(static_cast<std::size_t>(std::min(h.rows(), k)));
  return Selection::from_order(std::move(order));
}

/// Sort pooling down to ceil(ratio·k), then geometric pooling down to k on
/// the survivors. Indices refer to rows of `h`.
template <typename Derived>
Selection mixed_rank(const Eigen::MatrixBase<Derived>& h, Index col_begin, Index col_end,
                     const PoolingConfig& cfg) {
  const Index n = h.rows();
  const Index wide =
      std::min<Index>(n, static_cast<Index>(std::ceil(cfg.mixed_ratio * static_cast<double>(cfg.k))));
  // Survivors in ascending node order.
  const std::vector<Index> survivors = sort_rank(h, col_begin, col_end, wide).idx;
  MatrixX<typename Derived::Scalar> sub(static_cast<Index>(survivors.size()), h.cols());
  for (std::size_t i = 0; i < survivors.size(); ++i) sub.row(static_cast<Index>(i)) = h.row(survivors[i]);
  std::vector<Index> order =
      rank_least_similar(similarity(sub, cfg.metric), cfg.k, cfg.keep_most_similar);
  for (Index& o : order) o = survivors[static_cast<std::size_t>(o)];
  return Selection::from_order(std::move(order));
}

/// Dispatches on cfg.method. [col_begin, col_end) is the final conv layer's
/// channel range, used by the sort stage.
template <typename Derived>
Selection select_nodes(const Eigen::MatrixBase<Derived>& h, const PoolingConfig& cfg, Index col_begin,
                       Index col_end) {
  cfg.validate();
  switch (cfg.method) {
    case PoolMethod::sort:
      return sort_rank(h, col_begin, col_end, cfg.k);
    case PoolMethod::geometric:
      return geometric_rank(h, cfg);
    case PoolMethod::mixed:
      return mixed_rank(h, col_begin, col_end, cfg);
  }
  throw std::logic_error("unreachable");
}

/// k×d' matrix of the selected rows in ranking order, zero-padded.
template <typename Derived>
MatrixX<typename Derived::Scalar> gather_pooled(const Eigen::MatrixBase<Derived>& h, const Selection& sel,
                                                Index k) {
  MatrixX<typename Derived::Scalar> out = MatrixX<typename Derived::Scalar>::Zero(k, h.cols());
  for (std::size_t i = 0; i < sel.order.size(); ++i) out.row(static_cast<Index>(i)) = h.row(sel.order[i]);
  return out;
}

template <typename Derived>
SelectionResult<typename Derived::Scalar> geometric_select(const Eigen::MatrixBase<Derived>& h,
                                                           const PoolingConfig& cfg) {
  SelectionResult<typename Derived::Scalar> r{geometric_rank(h, cfg), {}};
  r.pooled = gather_pooled(h, r, cfg.k);
  return r;
}

template <typename Derived>
SelectionResult<typename Derived::Scalar> sort_select(const Eigen::MatrixBase<Derived>& h, Index col_begin,
                                                      Index col_end, Index k) {
  SelectionResult<typename Derived::Scalar> r{sort_rank(h, col_begin, col_end, k), {}};
  r.pooled = gather_pooled(h, r, k);
  return r;
}

template <typename Derived>
SelectionResult<typename Derived::Scalar> mixed_select(const Eigen::MatrixBase<Derived>& h, Index col_begin,
                                                       Index col_end, const PoolingConfig& cfg) {
  SelectionResult<typename Derived::Scalar> r{mixed_rank(h, col_begin, col_end, cfg), {}};
  r.pooled = gather_pooled(h, r, cfg.k);
  return r;
}

/// Every entry of every row of h that the selection dropped, row by row.
template <typename Derived>
std::vector<typename Derived::Scalar> dropped_values(const Eigen::MatrixBase<Derived>& h,
                                                     const Selection& sel) {
  std::vector<bool> kept(static_cast<std::size_t>(h.rows()), false);
  for (Index i : sel.idx) kept[static_cast<std::size_t>(i)] = true;
  std::vector<typename Derived::Scalar> out;
  for (Index r = 0; r < h.rows(); ++r)
    if (!kept[static_cast<std::size_t>(r)])
      for (Index c = 0; c < h.cols(); ++c) out.push_back(h(r, c));
  return out;
}

}  // namespace gpool

#endif  // GPOOL_POOLING_HPP
