#ifndef GPOOL_CONFIG_HPP
#define GPOOL_CONFIG_HPP

#include "gpool/model.hpp"
#include "gpool/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace gpool {

inline constexpr const char* kVersion = "1.0.0";

/// Everything a command needs to reproduce a run.
struct RunConfig {
  std::string dataset = "MUTAG";
  std::string root = "data";
  ModelConfig model;
  TrainConfig train;
  /// Explicit k; otherwise select_k(dataset, percentile).
  std::optional<Index> k;
  double percentile = 0.6;

  /// Sets one option from its textual form. Throws std::invalid_argument on
  /// an unknown key or malformed value.
  void set(const std::string& key, const std::string& value);
};

/// Reads `key = value` lines ('#' starts a comment) into cfg.
void load_config_file(const std::filesystem::path& path, RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

/// One header line plus one line per run, then mean/std.
void write_summary_csv(std::ostream& os, const RunReport& report);

}  // namespace gpool

#endif  // GPOOL_CONFIG_HPP
