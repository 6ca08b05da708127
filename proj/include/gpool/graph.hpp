#ifndef GPOOL_GRAPH_HPP
#define GPOOL_GRAPH_HPP

#include "gpool/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gpool {

using Edge = std::pair<Index, Index>;

/// Undirected simple graph with node features. Edges are stored once each,
/// as (u, v) with u < v, and never as self-loops.
struct Graph {
  Index n = 0;
  std::vector<Edge> edges;
  Matrix features;
  int label = 0;

  Index feature_dim() const { return features.cols(); }
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int class_count = 0;
  Index feature_dim = 0;
  /// Original label value for each dense class index.
  std::vector<long long> class_values;

  std::size_t size() const { return graphs.size(); }
};

/// Raised on malformed TUDataset input. what() names the file and line.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& file, std::size_t line, const std::string& message);
  IngestError(const std::string& file, const std::string& message);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

/// Sorts, orients (u < v) and deduplicates an edge list; drops self-loops.
std::vector<Edge> canonical_edges(std::vector<Edge> edges);

/// Reads the TUDataset flat-file layout for `name` from `root`. Files are
/// looked up as root/NAME_*.txt, then root/NAME/NAME_*.txt.
Dataset parse_tudataset(const std::filesystem::path& root, const std::string& name);

/// Resolves common aliases (PTC → PTC_MR, D&D → DD, ...) to the directory
/// name actually present under `root`. Returns `name` unchanged if nothing
/// matches.
std::string resolve_dataset_name(const std::filesystem::path& root, const std::string& name);

/// D̃⁻¹(A + I): row-stochastic propagation matrix.
Matrix normalize_adjacency(const Graph& g);

/// Number of retained nodes: the (1 − percentile) nearest-rank quantile of
/// graph sizes, at least 1.
Index select_k(const Dataset& ds, double percentile = 0.6);
Index select_k(std::vector<Index> sizes, double percentile = 0.6);

/// Seeded stratified fold assignment; result[i] is the fold of graph i.
std::vector<int> stratified_folds(const Dataset& ds, int folds, std::uint64_t seed);

}  // namespace gpool

#endif  // GPOOL_GRAPH_HPP
