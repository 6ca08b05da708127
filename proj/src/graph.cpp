#include "gpool/graph.hpp"

#include "gpool/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string_view>

namespace gpool {

namespace fs = std::filesystem;

IngestError::IngestError(const std::string& file, std::size_t line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message), file_(file), line_(line) {}

IngestError::IngestError(const std::string& file, const std::string& message)
    : std::runtime_error(file + ": " + message), file_(file) {}

namespace {

struct Line {
  std::size_t number;
  std::string text;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Non-blank lines with their 1-based line numbers.
std::vector<Line> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.filename().string(), "cannot open file");
  std::vector<Line> out;
  std::string s;
  std::size_t number = 0;
  while (std::getline(in, s)) {
    ++number;
    std::string_view t = trim(s);
    if (!t.empty()) out.push_back({number, std::string(t)});
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

long long parse_int(std::string_view s, const std::string& file, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IngestError(file, line, "expected an integer, got '" + std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, const std::string& file, std::size_t line) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v))
    throw IngestError(file, line, "expected a finite real, got '" + tmp + "'");
  return v;
}

std::optional<fs::path> dataset_dir(const fs::path& root, const std::string& name) {
  const std::string a = name + "_A.txt";
  if (fs::exists(root / a)) return root;
  if (fs::exists(root / name / a)) return root / name;
  return std::nullopt;
}

}  // namespace

std::vector<Edge> canonical_edges(std::vector<Edge> edges) {
  for (auto& [u, v] : edges)
    if (u > v) std::swap(u, v);
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::string resolve_dataset_name(const fs::path& root, const std::string& name) {
  if (dataset_dir(root, name)) return name;
  static const std::map<std::string, std::vector<std::string>> aliases = {
      {"PTC", {"PTC_MR"}},          {"D&D", {"DD"}},           {"DD", {"DD"}},
      {"IMDB-B", {"IMDB-BINARY"}}, {"IMDB-M", {"IMDB-MULTI"}},
  };
  if (auto it = aliases.find(name); it != aliases.end())
    for (const auto& alt : it->second)
      if (dataset_dir(root, alt)) return alt;
  return name;
}

Dataset parse_tudataset(const fs::path& root, const std::string& requested) {
  const std::string name = resolve_dataset_name(root, requested);
  const auto dir = dataset_dir(root, name);
  if (!dir) throw IngestError(name + "_A.txt", "missing mandatory file under " + root.string());

  const auto file = [&](const char* suffix) { return name + suffix; };
  const auto path = [&](const char* suffix) { return *dir / file(suffix); };
  for (const char* mandatory : {"_graph_indicator.txt", "_graph_labels.txt"})
    if (!fs::exists(path(mandatory))) throw IngestError(file(mandatory), "missing mandatory file");

  // Graph membership of every global node.
  const std::string ind_file = file("_graph_indicator.txt");
  const auto ind_lines = read_lines(path("_graph_indicator.txt"));
  const std::string lab_file = file("_graph_labels.txt");
  const auto lab_lines = read_lines(path("_graph_labels.txt"));
  const std::size_t graph_count = lab_lines.size();
  if (graph_count == 0) throw IngestError(lab_file, "no graph labels");

  const std::size_t node_count = ind_lines.size();
  std::vector<std::size_t> graph_of(node_count);
  std::vector<Index> local_of(node_count);
  std::vector<Index> sizes(graph_count, 0);
  for (std::size_t i = 0; i < node_count; ++i) {
    const long long gid = parse_int(ind_lines[i].text, ind_file, ind_lines[i].number);
    if (gid < 1 || static_cast<std::size_t>(gid) > graph_count)
      throw IngestError(ind_file, ind_lines[i].number,
                        "graph id " + std::to_string(gid) + " outside 1.." + std::to_string(graph_count));
    graph_of[i] = static_cast<std::size_t>(gid - 1);
    local_of[i] = sizes[graph_of[i]]++;
  }

  Dataset ds;
  ds.name = requested;
  ds.graphs.resize(graph_count);

  // Graph labels, remapped to 0..C-1 in ascending order of the raw value.
  std::vector<long long> raw_labels(graph_count);
  std::set<long long> distinct;
  for (std::size_t g = 0; g < graph_count; ++g) {
    raw_labels[g] = parse_int(lab_lines[g].text, lab_file, lab_lines[g].number);
    distinct.insert(raw_labels[g]);
  }
  ds.class_values.assign(distinct.begin(), distinct.end());
  ds.class_count = static_cast<int>(ds.class_values.size());
  for (std::size_t g = 0; g < graph_count; ++g) {
    ds.graphs[g].n = sizes[g];
    ds.graphs[g].label = static_cast<int>(
        std::lower_bound(ds.class_values.begin(), ds.class_values.end(), raw_labels[g]) -
        ds.class_values.begin());
  }

  // Edges.
  const std::string a_file = file("_A.txt");
  std::vector<std::vector<Edge>> raw_edges(graph_count);
  for (const Line& l : read_lines(path("_A.txt"))) {
    const auto parts = split_commas(l.text);
    if (parts.size() != 2) throw IngestError(a_file, l.number, "expected 'i, j'");
    const long long u = parse_int(parts[0], a_file, l.number);
    const long long v = parse_int(parts[1], a_file, l.number);
    for (long long x : {u, v})
      if (x < 1 || static_cast<std::size_t>(x) > node_count)
        throw IngestError(a_file, l.number,
                          "dangling node index " + std::to_string(x) + " (dataset has " +
                              std::to_string(node_count) + " nodes)");
    const std::size_t gu = graph_of[u - 1], gv = graph_of[v - 1];
    if (gu != gv)
      throw IngestError(a_file, l.number,
                        "edge " + std::to_string(u) + "-" + std::to_string(v) +
                            " crosses graphs " + std::to_string(gu + 1) + " and " + std::to_string(gv + 1));
    raw_edges[gu].emplace_back(local_of[u - 1], local_of[v - 1]);
  }
  for (std::size_t g = 0; g < graph_count; ++g)
    ds.graphs[g].edges = canonical_edges(std::move(raw_edges[g]));

  // Node features: one-hot node labels, then continuous attributes.
  std::vector<Index> node_label_col;
  Index label_width = 0;
  if (fs::exists(path("_node_labels.txt"))) {
    const std::string nl_file = file("_node_labels.txt");
    const auto lines = read_lines(path("_node_labels.txt"));
    if (lines.size() != node_count)
      throw IngestError(nl_file, "has " + std::to_string(lines.size()) + " entries, expected " +
                                     std::to_string(node_count));
    std::vector<long long> raw(node_count);
    std::set<long long> values;
    for (std::size_t i = 0; i < node_count; ++i) {
      // First column of a multi-column node label file.
      raw[i] = parse_int(split_commas(lines[i].text).front(), nl_file, lines[i].number);
      values.insert(raw[i]);
    }
    const std::vector<long long> sorted(values.begin(), values.end());
    label_width = static_cast<Index>(sorted.size());
    node_label_col.resize(node_count);
    for (std::size_t i = 0; i < node_count; ++i)
      node_label_col[i] = std::lower_bound(sorted.begin(), sorted.end(), raw[i]) - sorted.begin();
  }

  std::vector<std::vector<double>> attrs;
  Index attr_width = 0;
  if (fs::exists(path("_node_attributes.txt"))) {
    const std::string na_file = file("_node_attributes.txt");
    const auto lines = read_lines(path("_node_attributes.txt"));
    if (lines.size() != node_count)
      throw IngestError(na_file, "has " + std::to_string(lines.size()) + " entries, expected " +
                                     std::to_string(node_count));
    attrs.resize(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
      for (auto part : split_commas(lines[i].text))
        attrs[i].push_back(parse_real(part, na_file, lines[i].number));
      if (i == 0) attr_width = static_cast<Index>(attrs[0].size());
      if (static_cast<Index>(attrs[i].size()) != attr_width)
        throw IngestError(na_file, lines[i].number, "inconsistent attribute count");
    }
  }

  const bool degree_only = label_width == 0 && attr_width == 0;
  ds.feature_dim = degree_only ? 1 : label_width + attr_width;
  for (Graph& g : ds.graphs) g.features = Matrix::Zero(g.n, ds.feature_dim);
  if (degree_only) {
    for (Graph& g : ds.graphs) {
      Vector deg = Vector::Zero(g.n);
      for (const auto& [u, v] : g.edges) {
        deg(u) += 1.0;
        deg(v) += 1.0;
      }
      const double mx = g.n > 0 ? deg.maxCoeff() : 0.0;
      if (mx > 0) g.features.col(0) = deg / mx;
    }
  } else {
    for (std::size_t i = 0; i < node_count; ++i) {
      Graph& g = ds.graphs[graph_of[i]];
      const Index r = local_of[i];
      if (label_width > 0) g.features(r, node_label_col[i]) = 1.0;
      for (Index c = 0; c < attr_width; ++c) g.features(r, label_width + c) = attrs[i][c];
    }
  }
  return ds;
}

Matrix normalize_adjacency(const Graph& g) {
  Matrix a = Matrix::Identity(g.n, g.n);
  for (const auto& [u, v] : g.edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  const Vector deg = a.rowwise().sum();
  return deg.cwiseInverse().asDiagonal() * a;
}

Index select_k(std::vector<Index> sizes, double percentile) {
  if (sizes.empty()) throw std::invalid_argument("select_k: empty dataset");
  std::sort(sizes.begin(), sizes.end());
  const double n = static_cast<double>(sizes.size());
  // Nearest rank of the (1 − percentile) quantile.
  double rank = std::ceil((1.0 - percentile) * n - 1e-9);
  rank = std::clamp(rank, 1.0, n);
  return std::max<Index>(1, sizes[static_cast<std::size_t>(rank) - 1]);
}

Index select_k(const Dataset& ds, double percentile) {
  std::vector<Index> sizes;
  sizes.reserve(ds.size());
  for (const Graph& g : ds.graphs) sizes.push_back(g.n);
  return select_k(std::move(sizes), percentile);
}

std::vector<int> stratified_folds(const Dataset& ds, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(static_cast<std::size_t>(ds.graphs[i].label)).push_back(i);

  std::vector<int> fold_of(ds.size(), -1);
  Rng rng(seed);
  int next = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (static_cast<int>(members.size()) < folds)
      throw std::invalid_argument("stratified_folds: class " + std::to_string(c) + " has " +
                                  std::to_string(members.size()) + " graphs, fewer than " +
                                  std::to_string(folds) + " folds");
    rng.shuffle(members);
    // Round-robin continues across classes.
    for (std::size_t i = 0; i < members.size(); ++i) {
      fold_of[members[i]] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

}  // namespace gpool
