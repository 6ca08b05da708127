#include "gpool/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace gpool {

using nlohmann::json;

namespace {

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json model_json(const ModelConfig& m) {
  return {{"widths", m.widths},
          {"activation", to_string(m.activation)},
          {"include_input", m.include_input},
          {"hidden", m.hidden},
          {"method", to_string(m.pooling.method)},
          {"metric", to_string(m.pooling.metric)},
          {"k", m.pooling.k},
          {"alpha", m.pooling.mixed_ratio},
          {"keep_most_similar", m.pooling.keep_most_similar}};
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},   {"lr", t.learning_rate},     {"optimizer", to_string(t.optimizer)},
          {"beta1", t.beta1},     {"beta2", t.beta2},          {"epsilon", t.epsilon},
          {"lambda", t.lambda},   {"batch_size", t.batch_size}, {"folds", t.folds},
          {"repeats", t.repeats}, {"seed", t.seed}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.widths = j.at("widths").get<std::vector<Index>>();
  m.activation = parse_activation(j.at("activation").get<std::string>());
  m.include_input = j.at("include_input").get<bool>();
  m.hidden = j.at("hidden").get<Index>();
  m.pooling.method = parse_method(j.at("method").get<std::string>());
  m.pooling.metric = parse_metric(j.at("metric").get<std::string>());
  m.pooling.k = j.at("k").get<Index>();
  m.pooling.mixed_ratio = j.at("alpha").get<double>();
  m.pooling.keep_most_similar = j.value("keep_most_similar", false);
  return m;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.learning_rate = j.at("lr").get<double>();
  t.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.epsilon = j.at("epsilon").get<double>();
  t.lambda = j.at("lambda").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.folds = j.at("folds").get<int>();
  t.repeats = j.at("repeats").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "dataset") {
    dataset = value;
  } else if (key == "root") {
    root = value;
  } else if (key == "method") {
    model.pooling.method = parse_method(value);
  } else if (key == "metric") {
    model.pooling.metric = parse_metric(value);
  } else if (key == "k") {
    const long long v = to_int(key, value);
    if (v < 1) throw std::invalid_argument("k: must be >= 1");
    k = static_cast<Index>(v);
  } else if (key == "percentile") {
    percentile = to_real(key, value);
    if (!(percentile > 0 && percentile <= 1)) throw std::invalid_argument("percentile: must be in (0, 1]");
  } else if (key == "alpha") {
    model.pooling.mixed_ratio = to_real(key, value);
    if (!(model.pooling.mixed_ratio > 1)) throw std::invalid_argument("alpha: must be > 1");
  } else if (key == "keep_most_similar") {
    model.pooling.keep_most_similar = to_bool(key, value);
  } else if (key == "activation") {
    model.activation = parse_activation(value);
  } else if (key == "include_input") {
    model.include_input = to_bool(key, value);
  } else if (key == "hidden") {
    model.hidden = static_cast<Index>(to_int(key, value));
  } else if (key == "widths") {
    std::vector<Index> w;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) w.push_back(static_cast<Index>(to_int(key, trim(part))));
    if (w.empty()) throw std::invalid_argument("widths: empty list");
    model.widths = std::move(w);
  } else if (key == "lambda") {
    train.lambda = to_real(key, value);
    if (!(train.lambda >= 0)) throw std::invalid_argument("lambda: must be >= 0");
  } else if (key == "epochs") {
    train.epochs = static_cast<int>(to_int(key, value));
  } else if (key == "lr") {
    train.learning_rate = to_real(key, value);
  } else if (key == "optimizer") {
    train.optimizer = parse_optimizer(value);
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(to_int(key, value));
  } else if (key == "folds") {
    train.folds = static_cast<int>(to_int(key, value));
  } else if (key == "repeats") {
    train.repeats = static_cast<int>(to_int(key, value));
  } else if (key == "seed") {
    train.seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "jobs") {
    train.jobs = static_cast<int>(to_int(key, value));
  } else {
    throw std::invalid_argument("unknown option '" + key + "'");
  }
}

void load_config_file(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": expected key = value");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

json to_json(const RunConfig& cfg) {
  json j = {{"dataset", cfg.dataset},
            {"root", cfg.root},
            {"percentile", cfg.percentile},
            {"model", model_json(cfg.model)},
            {"train", train_json(cfg.train)}};
  j["k_override"] = cfg.k ? json(*cfg.k) : json(nullptr);
  return j;
}

json to_json(const RunReport& r) {
  json runs = json::array();
  for (const RunRecord& rec : r.runs)
    runs.push_back({{"repeat", rec.repeat},
                    {"fold", rec.fold},
                    {"accuracy", rec.accuracy},
                    {"loss_curve", rec.loss_curve},
                    {"entropy_curve", rec.entropy_curve}});
  return {{"dataset", r.dataset},
          {"method", to_string(r.model.pooling.method)},
          {"metric", to_string(r.model.pooling.metric)},
          {"k", r.model.pooling.k},
          {"parameter_count", r.parameter_count},
          {"mean_accuracy", r.mean_accuracy},
          {"std_accuracy", r.std_accuracy},
          {"model", model_json(r.model)},
          {"train", train_json(r.train)},
          {"runs", runs}};
}

RunReport report_from_json(const json& j) {
  RunReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.model = model_from_json(j.at("model"));
  r.train = train_from_json(j.at("train"));
  r.parameter_count = j.at("parameter_count").get<std::size_t>();
  for (const json& rec : j.at("runs")) {
    RunRecord x;
    x.repeat = rec.at("repeat").get<int>();
    x.fold = rec.at("fold").get<int>();
    x.accuracy = rec.at("accuracy").get<double>();
    x.loss_curve = rec.at("loss_curve").get<std::vector<double>>();
    x.entropy_curve = rec.at("entropy_curve").get<std::vector<double>>();
    r.runs.push_back(std::move(x));
  }
  r.summarize();
  return r;
}

void write_summary_csv(std::ostream& os, const RunReport& r) {
  os << "dataset,method,metric,repeat,fold,accuracy\n" << std::setprecision(10);
  const std::string head = r.dataset + "," + to_string(r.model.pooling.method) + "," + to_string(r.model.pooling.metric);
  for (const RunRecord& rec : r.runs) os << head << ',' << rec.repeat << ',' << rec.fold << ',' << rec.accuracy << '\n';
  os << head << ",mean,," << r.mean_accuracy << '\n';
  os << head << ",std,," << r.std_accuracy << '\n';
}

}  // namespace gpool
