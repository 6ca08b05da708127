#include "gpool/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace gpool {

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

double Histogram::bin_lo(std::size_t b) const {
  return lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins());
}

double Histogram::bin_hi(std::size_t b) const { return bin_lo(b + 1); }

void Histogram::write_csv(std::ostream& os) const {
  os << "bin_lo,bin_hi,count\n";
  os << std::setprecision(10);
  for (std::size_t b = 0; b < bins(); ++b) os << bin_lo(b) << ',' << bin_hi(b) << ',' << counts[b] << '\n';
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins < 3) throw std::invalid_argument("histogram: need at least 3 bins");
  if (!(hi > lo)) throw std::invalid_argument("histogram: empty range");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double n = static_cast<double>(bins);
  for (double v : values) {
    double pos = std::floor((v - lo) / (hi - lo) * n);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    ++h.counts[static_cast<std::size_t>(pos)];
  }
  return h;
}

double central_fraction(std::span<const double> values, double band) {
  if (values.empty()) return 0.0;
  const auto n = std::count_if(values.begin(), values.end(), [band](double v) { return std::abs(v) < band; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

std::vector<double> collect_dropped_values(Model& model, const PreparedDataset& ds,
                                           std::span<const std::size_t> indices, const PoolingConfig* pooling) {
  const PoolingConfig& cfg = pooling ? *pooling : model.config().pooling;
  const Backbone& b = model.backbone();
  const Index d = b.output_dim();
  const Index last_begin = d - b.layers().back().out_dim();
  std::vector<double> out;
  for (std::size_t i : indices) {
    const Matrix h = model.node_features(ds.graph(i), ds.adjacency[i]);
    const Selection sel = select_nodes(h, cfg, last_begin, d);
    const auto dropped = dropped_values(h, sel);
    out.insert(out.end(), dropped.begin(), dropped.end());
  }
  return out;
}

DroppedHistogram dropped_histogram(Model& model, const PreparedDataset& ds, PoolMethod method, std::size_t bins,
                                   double lo, double hi) {
  PoolingConfig cfg = model.config().pooling;
  cfg.method = method;
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::vector<double> values = collect_dropped_values(model, ds, all, &cfg);
  DroppedHistogram out;
  out.histogram = make_histogram(values, bins, lo, hi);
  out.dropped_units = values.size();
  out.central_fraction = central_fraction(values);
  if (values.empty()) std::cerr << "warning: no units were dropped (k >= every graph size)\n";
  return out;
}

std::vector<double> entropy_trace(Model& model, const PreparedDataset& ds, std::span<const std::size_t> train,
                                  std::span<const std::size_t> eval, const TrainConfig& cfg, std::uint64_t seed) {
  return train_model(model, ds, train, eval, cfg, seed).entropy;
}

// ---------------------------------------------------------------------------

std::string row_label(const RunReport& r) {
  std::string label = to_string(r.model.pooling.method);
  if (r.model.pooling.method != PoolMethod::sort && r.model.pooling.metric != Metric::euclidean)
    label += "/" + to_string(r.model.pooling.metric);
  if (r.model.activation != Activation::tanh) label += "-" + to_string(r.model.activation);
  if (r.train.lambda != 0.0) {
    std::ostringstream os;
    os << "+kl" << r.train.lambda;
    label += os.str();
  }
  return label;
}

ComparisonTable comparison_table(std::span<const RunReport> reports) {
  if (reports.empty()) throw std::invalid_argument("comparison table: no reports");
  ComparisonTable t;
  std::map<std::string, std::map<std::string, std::pair<double, double>>> grid;
  for (const RunReport& r : reports) {
    const std::string row = row_label(r);
    if (!grid.contains(row)) t.rows.push_back(row);
    grid[row][r.dataset] = {r.mean_accuracy, r.std_accuracy};
  }
  std::set<std::string> reference;
  for (const auto& [ds, cell] : grid[t.rows.front()]) reference.insert(ds);
  for (const std::string& row : t.rows) {
    std::set<std::string> have;
    for (const auto& [ds, cell] : grid[row]) have.insert(ds);
    if (have != reference) {
      std::ostringstream os;
      os << "comparison table: row '" << row << "' covers {";
      for (const auto& d : have) os << ' ' << d;
      os << " } but row '" << t.rows.front() << "' covers {";
      for (const auto& d : reference) os << ' ' << d;
      os << " }";
      throw std::invalid_argument(os.str());
    }
  }
  // Column order follows first appearance in the input.
  for (const RunReport& r : reports)
    if (std::find(t.columns.begin(), t.columns.end(), r.dataset) == t.columns.end()) t.columns.push_back(r.dataset);
  for (const std::string& row : t.rows) {
    t.cells.emplace_back();
    for (const std::string& col : t.columns) t.cells.back().push_back(grid[row][col]);
  }
  return t;
}

void ComparisonTable::write_csv(std::ostream& os) const {
  os << "method";
  for (const auto& c : columns) os << ',' << c << "_mean," << c << "_std";
  os << '\n' << std::fixed << std::setprecision(2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << rows[r];
    for (const auto& [m, s] : cells[r]) os << ',' << 100.0 * m << ',' << 100.0 * s;
    os << '\n';
  }
  os.unsetf(std::ios::fixed);
}

void ComparisonTable::write_text(std::ostream& os) const {
  std::size_t w0 = 6;
  for (const auto& r : rows) w0 = std::max(w0, r.size());
  constexpr int cw = 16;
  os << std::left << std::setw(static_cast<int>(w0) + 2) << "Method";
  for (const auto& c : columns) os << std::right << std::setw(cw) << c;
  os << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << std::left << std::setw(static_cast<int>(w0) + 2) << rows[r];
    for (const auto& [m, s] : cells[r]) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(2) << 100.0 * m << " ± " << 100.0 * s;
      // Pad by display width.
      os << std::right << std::setw(cw + 1) << cell.str();
    }
    os << '\n';
  }
}

}  // namespace gpool
