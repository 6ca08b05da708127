#ifndef GPOOL_DIAGNOSTICS_HPP
#define GPOOL_DIAGNOSTICS_HPP

#include "gpool/training.hpp"

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gpool {

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  std::size_t bins() const { return counts.size(); }
  std::size_t total() const;
  double bin_lo(std::size_t b) const;
  double bin_hi(std::size_t b) const;
  void write_csv(std::ostream& os) const;
};

/// Equal-width bins over [lo, hi]. Out-of-range values land in the edge bins.
Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

/// Fraction of values with |v| < band.
double central_fraction(std::span<const double> values, double band = 0.1);

/// Entries of every dropped node row over the given graphs, using the
/// model's own pooling configuration unless `pooling` is given.
std::vector<double> collect_dropped_values(Model& model, const PreparedDataset& ds,
                                           std::span<const std::size_t> indices,
                                           const PoolingConfig* pooling = nullptr);

struct DroppedHistogram {
  Histogram histogram;
  std::size_t dropped_units = 0;
  double central_fraction = 0.0;
  bool empty() const { return dropped_units == 0; }
};

/// Histogram of dropped units over every graph of the dataset.
DroppedHistogram dropped_histogram(Model& model, const PreparedDataset& ds, PoolMethod method,
                                   std::size_t bins = 50, double lo = -1.0, double hi = 1.0);

/// Mean-prediction entropy per epoch on `eval`, training on `train`.
std::vector<double> entropy_trace(Model& model, const PreparedDataset& ds, std::span<const std::size_t> train,
                                  std::span<const std::size_t> eval, const TrainConfig& cfg,
                                  std::uint64_t seed);

/// Rows are labelled by method (and metric when it is not euclidean),
/// columns by dataset. Every row must cover the same datasets.
struct ComparisonTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  /// cells[row][column] = {mean, std}
  std::vector<std::vector<std::pair<double, double>>> cells;

  void write_csv(std::ostream& os) const;
  void write_text(std::ostream& os) const;
};

std::string row_label(const RunReport& r);
ComparisonTable comparison_table(std::span<const RunReport> reports);

}  // namespace gpool

#endif  // GPOOL_DIAGNOSTICS_HPP
