#include "gpool/cli.hpp"

#include "gpool/config.hpp"
#include "gpool/diagnostics.hpp"
#include "gpool/graph.hpp"
#include "gpool/training.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace gpool {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Options shared by every command that trains or inspects a model.
/// Precedence: defaults < config file < flags.
struct RunFlags {
  std::string config_file;
  std::string out_dir = "out";
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value config file");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    const std::vector<std::pair<std::string, std::string>> keys = {
        {"dataset", "dataset name (MUTAG, PTC, PROTEINS, ...)"},
        {"root", "directory holding TUDataset folders"},
        {"method", "sort | geometric | mixed"},
        {"metric", "euclidean | inner_product | cosine"},
        {"k", "retained nodes (default: from dataset sizes)"},
        {"percentile", "fraction of graphs that must have at least k nodes"},
        {"alpha", "mixed pooling intermediate ratio"},
        {"lambda", "weight of the KL-to-uniform penalty"},
        {"epochs", "training epochs"},
        {"lr", "learning rate"},
        {"optimizer", "adam | sgd"},
        {"batch_size", "graphs per optimizer step"},
        {"folds", "cross-validation folds"},
        {"repeats", "cross-validation repeats"},
        {"seed", "base seed"},
        {"jobs", "parallel runs (crossval)"},
        {"activation", "tanh | relu"},
        {"widths", "comma-separated conv widths"},
        {"hidden", "classifier hidden width"},
        {"include_input", "concatenate raw features (true/false)"},
        {"keep_most_similar", "keep most-similar nodes instead (true/false)"},
    };
    for (const auto& [key, help] : keys) {
      auto* opt = cmd->add_option("--" + key, values[key], help);
      options.emplace_back(key, opt);
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) load_config_file(config_file, cfg);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values.at(key));
    cfg.train.validate();
    return cfg;
  }
};

struct Loaded {
  Dataset dataset;
  Index k_suggested = 0;
};

Loaded load(RunConfig& cfg) {
  Loaded l;
  l.dataset = parse_tudataset(cfg.root, cfg.dataset);
  l.k_suggested = select_k(l.dataset, cfg.percentile);
  cfg.model.pooling.k = cfg.k.value_or(l.k_suggested);
  return l;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                    json extra = json::object()) {
  json m = {{"version", kVersion}, {"command", command}, {"config", to_json(cfg)}};
  m["resolved_k"] = cfg.model.pooling.k;
  for (auto& [key, value] : extra.items()) m[key] = value;
  write_json(dir / "manifest.json", m);
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(const std::string& root, const std::string& name, const std::string& summary, double percentile,
               std::ostream& out) {
  const Dataset ds = parse_tudataset(root, name);
  const json j = {{"name", ds.name},
                  {"graphs", ds.size()},
                  {"classes", ds.class_count},
                  {"feature_dim", ds.feature_dim},
                  {"k_suggested", select_k(ds, percentile)}};
  if (!summary.empty()) {
    const fs::path dir = fs::path(summary).has_parent_path() ? fs::path(summary).parent_path() : fs::path(".");
    fs::create_directories(dir);
    write_json(summary, j);
    write_json(dir / "manifest.json", {{"version", kVersion},
                                       {"command", "ingest"},
                                       {"root", root},
                                       {"name", name},
                                       {"percentile", percentile}});
  }
  out << j.dump() << '\n';
  return 0;
}

void write_run_outputs(const fs::path& dir, const RunReport& report) {
  write_json(dir / "report.json", to_json(report));
  std::ofstream csv(dir / "summary.csv");
  write_summary_csv(csv, report);
}

int cmd_train(RunConfig cfg, const fs::path& dir, int repeat, int fold, std::ostream& out) {
  Loaded l = load(cfg);
  const PreparedDataset prepared(l.dataset);
  RunReport report;
  report.dataset = l.dataset.name;
  report.model = cfg.model;
  report.train = cfg.train;
  report.runs.push_back(run_fold(prepared, cfg.model, cfg.train, repeat, fold, [&](Model& m) {
    report.parameter_count = count_parameters(m);
  }));
  report.summarize();
  write_run_outputs(dir, report);
  write_manifest(dir, "train", cfg, {{"repeat", repeat}, {"fold", fold}});
  out << "accuracy " << report.mean_accuracy << '\n';
  return 0;
}

int cmd_crossval(RunConfig cfg, const fs::path& dir, std::ostream& out) {
  Loaded l = load(cfg);
  const RunReport report = run_cross_validation(l.dataset, cfg.model, cfg.train);
  write_run_outputs(dir, report);
  write_manifest(dir, "crossval", cfg);
  out << report.dataset << ' ' << row_label(report) << " mean " << report.mean_accuracy << " std "
      << report.std_accuracy << " over " << report.runs.size() << " runs\n";
  return 0;
}

int cmd_ablate_metric(RunConfig cfg, const fs::path& dir, const std::string& metrics,
                      const std::string& datasets, std::ostream& out) {
  std::vector<RunReport> reports;
  const auto ds_names = datasets.empty() ? std::vector<std::string>{cfg.dataset} : split_list(datasets);
  for (const std::string& name : ds_names) {
    RunConfig per = cfg;
    per.dataset = name;
    Loaded l = load(per);
    for (const std::string& m : split_list(metrics)) {
      RunConfig run = per;
      run.model.pooling.method = PoolMethod::geometric;
      run.model.pooling.metric = parse_metric(m);
      reports.push_back(run_cross_validation(l.dataset, run.model, run.train));
      write_json(dir / ("report_" + name + "_" + to_string(run.model.pooling.metric) + ".json"),
                 to_json(reports.back()));
    }
  }
  const ComparisonTable table = comparison_table(reports);
  std::ofstream csv(dir / "summary.csv");
  table.write_csv(csv);
  std::ofstream txt(dir / "table.txt");
  table.write_text(txt);
  write_manifest(dir, "ablate-metric", cfg, {{"metrics", split_list(metrics)}, {"datasets", ds_names}});
  table.write_text(out);
  return 0;
}

int cmd_histogram(RunConfig cfg, const fs::path& dir, std::size_t bins, const std::string& range, int fold,
                  std::ostream& out) {
  const auto bounds = split_list(range);
  if (bounds.size() != 2) throw std::invalid_argument("--range expects lo,hi");
  const double lo = std::stod(bounds[0]), hi = std::stod(bounds[1]);
  Loaded l = load(cfg);
  const PreparedDataset prepared(l.dataset);
  DroppedHistogram result;
  run_fold(prepared, cfg.model, cfg.train, 0, fold, [&](Model& m) {
    result = dropped_histogram(m, prepared, cfg.model.pooling.method, bins, lo, hi);
  });
  std::ofstream csv(dir / "histogram.csv");
  result.histogram.write_csv(csv);
  write_json(dir / "histogram.json", {{"dataset", l.dataset.name},
                                      {"method", to_string(cfg.model.pooling.method)},
                                      {"dropped_units", result.dropped_units},
                                      {"central_fraction", result.central_fraction}});
  write_manifest(dir, "histogram", cfg, {{"bins", bins}, {"range", {lo, hi}}, {"fold", fold}});
  out << "dropped units " << result.dropped_units << ", |v|<0.1 fraction " << result.central_fraction << '\n';
  return 0;
}

int cmd_entropy(RunConfig cfg, const fs::path& dir, int fold, std::ostream& out) {
  Loaded l = load(cfg);
  const PreparedDataset prepared(l.dataset);
  const RunRecord rec = run_fold(prepared, cfg.model, cfg.train, 0, fold);
  std::ofstream csv(dir / "entropy.csv");
  csv << "epoch,entropy,train_loss\n" << std::setprecision(12);
  for (std::size_t e = 0; e < rec.entropy_curve.size(); ++e)
    csv << e + 1 << ',' << rec.entropy_curve[e] << ',' << rec.loss_curve[e] << '\n';
  write_manifest(dir, "entropy", cfg, {{"fold", fold}});
  out << "final entropy " << (rec.entropy_curve.empty() ? 0.0 : rec.entropy_curve.back()) << '\n';
  return 0;
}

int cmd_params(RunConfig cfg, const fs::path& dir, std::ostream& out) {
  Loaded l = load(cfg);
  Model m(cfg.model, l.dataset.feature_dim, l.dataset.class_count, cfg.train.seed);
  const json j = {{"method", to_string(cfg.model.pooling.method)},
                  {"dataset", l.dataset.name},
                  {"parameter_count", count_parameters(m)}};
  write_json(dir / "params.json", j);
  write_manifest(dir, "params", cfg);
  out << j.dump() << '\n';
  return 0;
}

int cmd_report(const std::string& inputs, const fs::path& dir, std::ostream& out) {
  std::vector<RunReport> reports;
  for (const std::string& path : split_list(inputs)) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report " + path);
    reports.push_back(report_from_json(json::parse(in)));
  }
  const ComparisonTable table = comparison_table(reports);
  std::ofstream csv(dir / "summary.csv");
  table.write_csv(csv);
  std::ofstream txt(dir / "table.txt");
  table.write_text(txt);
  write_json(dir / "manifest.json", {{"version", kVersion}, {"command", "report"}, {"reports", split_list(inputs)}});
  table.write_text(out);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph classification with geometric, sort and mixed global pooling", "gpool"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string ingest_root = "data", ingest_name, ingest_summary;
  double ingest_percentile = 0.6;
  auto* ingest = app.add_subcommand("ingest", "parse a TUDataset and summarize it");
  ingest->add_option("--root", ingest_root, "directory holding TUDataset folders")->capture_default_str();
  ingest->add_option("--name", ingest_name, "dataset name")->required();
  ingest->add_option("--summary", ingest_summary, "write the JSON summary here");
  ingest->add_option("--percentile", ingest_percentile, "k selection fraction")->capture_default_str();

  RunFlags train_f, cv_f, ablate_f, hist_f, ent_f, params_f;
  int train_fold = 0, train_repeat = 0, hist_fold = 0, ent_fold = 0;
  std::size_t bins = 50;
  std::string range = "-1,1", metrics = "euclidean,inner_product,cosine", datasets, report_inputs,
              report_out = "out";

  auto* train = app.add_subcommand("train", "train and evaluate one held-out fold");
  train_f.attach(train);
  train->add_option("--fold", train_fold, "held-out fold")->capture_default_str();
  train->add_option("--repeat", train_repeat, "repeat whose fold assignment is used")->capture_default_str();

  auto* crossval = app.add_subcommand("crossval", "repeated stratified cross-validation");
  cv_f.attach(crossval);

  auto* ablate = app.add_subcommand("ablate-metric", "cross-validate geometric pooling per similarity metric");
  ablate_f.attach(ablate);
  ablate->add_option("--metrics", metrics, "comma-separated metrics")->capture_default_str();
  ablate->add_option("--datasets", datasets, "comma-separated datasets (default: --dataset)");

  auto* histogram = app.add_subcommand("histogram", "histogram of units dropped by pooling");
  hist_f.attach(histogram);
  histogram->add_option("--bins", bins, "bin count")->capture_default_str();
  histogram->add_option("--range", range, "lo,hi")->capture_default_str();
  histogram->add_option("--fold", hist_fold, "held-out fold of the training run")->capture_default_str();

  auto* entropy = app.add_subcommand("entropy", "per-epoch entropy of the mean prediction");
  ent_f.attach(entropy);
  entropy->add_option("--fold", ent_fold, "held-out fold")->capture_default_str();

  auto* params = app.add_subcommand("params", "count trainable parameters");
  params_f.attach(params);

  auto* report = app.add_subcommand("report", "comparison table from report.json files");
  report->add_option("--reports", report_inputs, "comma-separated report.json paths")->required();
  report->add_option("--out", report_out, "output directory")->capture_default_str();

  std::vector<std::string> storage{"gpool"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  // Bad option values are usage errors.
  RunFlags* active = nullptr;
  for (auto [cmd, flags] : {std::pair{train, &train_f}, {crossval, &cv_f}, {ablate, &ablate_f}, {histogram, &hist_f},
                            {entropy, &ent_f}, {params, &params_f}})
    if (cmd->parsed()) active = flags;
  RunConfig cfg;
  if (active) {
    try {
      cfg = active->resolve();
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      err << json({{"error", e.what()}}).dump() << '\n';
      return 1;
    }
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_root, ingest_name, ingest_summary, ingest_percentile, out);
    if (report->parsed()) return cmd_report(report_inputs, prepare_out(report_out), out);
    if (train->parsed()) return cmd_train(cfg, prepare_out(train_f.out_dir), train_repeat, train_fold, out);
    if (crossval->parsed()) return cmd_crossval(cfg, prepare_out(cv_f.out_dir), out);
    if (ablate->parsed()) return cmd_ablate_metric(cfg, prepare_out(ablate_f.out_dir), metrics, datasets, out);
    if (histogram->parsed()) return cmd_histogram(cfg, prepare_out(hist_f.out_dir), bins, range, hist_fold, out);
    if (entropy->parsed()) return cmd_entropy(cfg, prepare_out(ent_f.out_dir), ent_fold, out);
    if (params->parsed()) return cmd_params(cfg, prepare_out(params_f.out_dir), out);
  } catch (const std::exception& e) {
    err << json({{"error", e.what()}}).dump() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace gpool
