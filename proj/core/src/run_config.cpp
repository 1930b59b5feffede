#include "mose/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "mose/error.hpp"

namespace mose {

namespace {

template <typename E>
struct NameTable {
  E value;
  const char* name;
};

constexpr NameTable<StepMode> kStepModes[] = {
    {StepMode::single_p, "single-p"}, {StepMode::sum_over_p, "sum-over-p"}, {StepMode::concat_over_p, "concat-over-p"}};
constexpr NameTable<CombineMode> kCombine[] = {{CombineMode::weighted_sum, "weighted-sum"},
                                               {CombineMode::concat, "concat"}};
constexpr NameTable<Pooling> kPooling[] = {{Pooling::mean, "mean"}, {Pooling::sum, "sum"}, {Pooling::max, "max"}};
constexpr NameTable<Activation> kActivation[] = {
    {Activation::relu, "relu"}, {Activation::tanh, "tanh"}, {Activation::identity, "identity"}};
constexpr NameTable<FeatureScaling> kScaling[] = {{FeatureScaling::none, "none"},
                                                  {FeatureScaling::signed_log, "signed-log"}};
constexpr NameTable<TaskKind> kTasks[] = {{TaskKind::graph_level, "graph"}, {TaskKind::node_level, "node"}};

template <typename E, std::size_t N>
std::string name_of(const NameTable<E> (&table)[N], E value) {
  for (const auto& e : table)
    if (e.value == value) return e.name;
  throw InternalError("unnamed enum value");
}

template <typename E, std::size_t N>
E parse_name(const NameTable<E> (&table)[N], std::string_view s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string choices;
  for (const auto& e : table) choices += std::string(choices.empty() ? "" : ", ") + e.name;
  throw InvalidArgument(std::string("invalid ") + what + " '" + std::string(s) + "' (expected one of: " + choices + ")");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  s = trim(s);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InvalidArgument("invalid value '" + std::string(s) + "' for " + std::string(key));
  return value;
}

bool parse_bool(std::string_view key, std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("invalid boolean '" + std::string(s) + "' for " + std::string(key));
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view s) {
  std::vector<T> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(parse_number<T>(key, s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
  return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

Field text(const char* key, std::string RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(trim(v)); },
          [member](const RunConfig& c) { return c.*member; }};
}

template <typename E, std::size_t N>
Field choice(const char* key, E RunConfig::*member, const NameTable<E> (&table)[N]) {
  return {key, [key, member, &table](RunConfig& c, std::string_view v) { c.*member = parse_name(table, trim(v), key); },
          [member, &table](const RunConfig& c) { return name_of(table, c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      text("data-dir", &RunConfig::data_dir),
      text("dataset", &RunConfig::dataset),
      number("seed", &RunConfig::seed),
      text("out-dir", &RunConfig::out_dir),
      number("threads", &RunConfig::threads),
      number("walk-length", &RunConfig::walk_length),
      number("walks-per-node", &RunConfig::walks_per_node),
      number("k-walk", &RunConfig::k_walk),
      number("subgraph-cap", &RunConfig::subgraph_cap),
      number("steps", &RunConfig::steps),
      choice("step-mode", &RunConfig::step_mode, kStepModes),
      {"lambdas", [](RunConfig& c, std::string_view v) { c.lambdas = parse_list<double>("lambdas", v); },
       [](const RunConfig& c) { return format_list(c.lambdas); }},
      {"include-zero-step",
       [](RunConfig& c, std::string_view v) { c.include_zero_step = parse_bool("include-zero-step", v); },
       [](const RunConfig& c) { return std::string(c.include_zero_step ? "true" : "false"); }},
      number("experts", &RunConfig::experts),
      number("hidden-graphs", &RunConfig::hidden_graphs),
      {"expert-sizes", [](RunConfig& c, std::string_view v) { c.expert_sizes = parse_list<int>("expert-sizes", v); },
       [](const RunConfig& c) { return format_list(c.expert_sizes); }},
      number("hidden-dim", &RunConfig::hidden_dim),
      number("k-ept", &RunConfig::k_ept),
      choice("combine", &RunConfig::combine, kCombine),
      choice("pooling", &RunConfig::pooling, kPooling),
      choice("gate-activation", &RunConfig::gate_activation, kActivation),
      choice("feature-scaling", &RunConfig::feature_scaling, kScaling),
      number("beta", &RunConfig::beta),
      number("epochs", &RunConfig::epochs),
      number("lr", &RunConfig::lr),
      number("dropout", &RunConfig::dropout),
      number("batch-size", &RunConfig::batch_size),
      number("patience", &RunConfig::patience),
      number("val-fraction", &RunConfig::val_fraction),
      number("folds", &RunConfig::folds),
      number("splits", &RunConfig::splits),
      number("train-ratio", &RunConfig::train_ratio),
      number("val-ratio", &RunConfig::val_ratio),
      number("test-ratio", &RunConfig::test_ratio),
      number("count", &RunConfig::count),
      number("prune-threshold", &RunConfig::prune_threshold),
  };
  return table;
}

std::string normalize_key(std::string_view key) {
  std::string k(trim(key));
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

const Field* find_field(std::string_view key) {
  const auto k = normalize_key(key);
  for (const auto& f : fields())
    if (k == f.key) return &f;
  return nullptr;
}

}  // namespace

std::string to_string(StepMode m) { return name_of(kStepModes, m); }
std::string to_string(CombineMode m) { return name_of(kCombine, m); }
std::string to_string(Pooling p) { return name_of(kPooling, p); }
std::string to_string(Activation a) { return name_of(kActivation, a); }
std::string to_string(FeatureScaling s) { return name_of(kScaling, s); }
std::string to_string(TaskKind t) { return name_of(kTasks, t); }

StepMode parse_step_mode(std::string_view s) { return parse_name(kStepModes, s, "step mode"); }
CombineMode parse_combine_mode(std::string_view s) { return parse_name(kCombine, s, "combine mode"); }
Pooling parse_pooling(std::string_view s) { return parse_name(kPooling, s, "pooling"); }
Activation parse_activation(std::string_view s) { return parse_name(kActivation, s, "activation"); }
FeatureScaling parse_feature_scaling(std::string_view s) { return parse_name(kScaling, s, "feature scaling"); }
TaskKind parse_task_kind(std::string_view s) { return parse_name(kTasks, s, "task kind"); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.emplace_back(f.key);
    return k;
  }();
  return out;
}

bool RunConfig::is_key(std::string_view key) { return find_field(key) != nullptr; }

void RunConfig::set(std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw InvalidArgument("unknown configuration key '" + std::string(key) + "'");
  f->set(*this, value);
}

std::string RunConfig::get(std::string_view key) const {
  const Field* f = find_field(key);
  if (!f) throw InvalidArgument("unknown configuration key '" + std::string(key) + "'");
  return f->get(*this);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ConfigEntries RunConfig::entries() const {
  ConfigEntries out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

void RunConfig::validate() const {
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (folds < 2) throw InvalidArgument("folds must be >= 2");
  if (splits < 1) throw InvalidArgument("splits must be >= 1");
  if (count < 1) throw InvalidArgument("count must be >= 1");
  if (!(prune_threshold >= 0.0)) throw InvalidArgument("prune-threshold must be >= 0");
  walk_config().validate();
  kernel_config().validate();
  train_config().validate();
  if (experts < 1 || k_ept < 1 || k_ept > experts) throw InvalidArgument("k-ept must be in [1, experts]");
  if (hidden_graphs < 1 || hidden_dim < 1) throw InvalidArgument("hidden-graphs and hidden-dim must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must be in [0, 1)");
}

WalkConfig RunConfig::walk_config() const {
  WalkConfig w;
  w.walk_length = walk_length;
  w.walks_per_node = walks_per_node;
  w.pattern_budget = k_walk;
  w.subgraph_cap = subgraph_cap;
  w.seed = seed;
  return w;
}

KernelConfig RunConfig::kernel_config() const {
  KernelConfig k;
  k.max_step = steps;
  k.lambdas = lambdas;
  k.step_mode = step_mode;
  k.include_zero_step = include_zero_step;
  return k;
}

ModelConfig RunConfig::model_config(int feature_dim, int class_count, TaskKind task) const {
  ModelConfig m;
  m.feature_dim = feature_dim;
  m.class_count = class_count;
  m.experts = experts;
  m.hidden_graphs = hidden_graphs;
  m.expert_sizes = expert_sizes;
  m.hidden_dim = hidden_dim;
  m.k_ept = k_ept;
  m.kernel = kernel_config();
  m.combine = combine;
  m.pooling = pooling;
  m.gate_activation = gate_activation;
  m.scaling = feature_scaling;
  m.dropout = dropout;
  m.task = task;
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.learning_rate = lr;
  t.beta = beta;
  t.batch_size = batch_size;
  t.seed = seed;
  t.patience = patience;
  t.val_fraction = val_fraction;
  t.threads = threads;
  return t;
}

void write_manifest(const std::filesystem::path& path, const RunConfig& cfg, std::uint64_t dataset_hash,
                    const ConfigEntries& extra) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dataset_hash));
  out << "# mose run manifest\n";
  for (const auto& [k, v] : cfg.entries()) out << k << " = " << v << '\n';
  out << "dataset-hash = " << hash << '\n';
  for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mose
