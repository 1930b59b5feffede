#include "mose/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mose/error.hpp"
#include "mose/run_config.hpp"

namespace mose {

namespace {

constexpr const char* kMagic = "MOSE-CHECKPOINT";
constexpr int kVersion = 1;

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out.empty() ? "-" : out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out += (i ? "," : "") + std::string(buf);
  }
  return out.empty() ? "-" : out;
}

template <typename T>
std::vector<T> split_list(const std::string& s) {
  std::vector<T> out;
  if (s == "-") return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream one(item);
    T v{};
    if (!(one >> v)) throw FormatError("checkpoint: bad list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> model_entries(const ModelConfig& m) {
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  return {
      {"feature_dim", std::to_string(m.feature_dim)},
      {"class_count", std::to_string(m.class_count)},
      {"experts", std::to_string(m.experts)},
      {"hidden_graphs", std::to_string(m.hidden_graphs)},
      {"expert_sizes", join(m.expert_sizes)},
      {"hidden_dim", std::to_string(m.hidden_dim)},
      {"k_ept", std::to_string(m.k_ept)},
      {"max_step", std::to_string(m.kernel.max_step)},
      {"lambdas", join(m.kernel.lambdas)},
      {"step_mode", to_string(m.kernel.step_mode)},
      {"include_zero_step", m.kernel.include_zero_step ? "1" : "0"},
      {"combine", to_string(m.combine)},
      {"pooling", to_string(m.pooling)},
      {"gate_activation", to_string(m.gate_activation)},
      {"scaling", to_string(m.scaling)},
      {"dropout", num(m.dropout)},
      {"gate_init_std", num(m.gate_init_std)},
      {"task", to_string(m.task)},
  };
}

ModelConfig model_from(const std::map<std::string, std::string>& e) {
  auto get = [&](const char* k) -> const std::string& {
    const auto it = e.find(k);
    if (it == e.end()) throw FormatError(std::string("checkpoint: missing model field ") + k);
    return it->second;
  };
  ModelConfig m;
  m.feature_dim = std::stoi(get("feature_dim"));
  m.class_count = std::stoi(get("class_count"));
  m.experts = std::stoi(get("experts"));
  m.hidden_graphs = std::stoi(get("hidden_graphs"));
  m.expert_sizes = split_list<int>(get("expert_sizes"));
  m.hidden_dim = std::stoi(get("hidden_dim"));
  m.k_ept = std::stoi(get("k_ept"));
  m.kernel.max_step = std::stoi(get("max_step"));
  m.kernel.lambdas = split_list<double>(get("lambdas"));
  m.kernel.step_mode = parse_step_mode(get("step_mode"));
  m.kernel.include_zero_step = get("include_zero_step") == "1";
  m.combine = parse_combine_mode(get("combine"));
  m.pooling = parse_pooling(get("pooling"));
  m.gate_activation = parse_activation(get("gate_activation"));
  m.scaling = parse_feature_scaling(get("scaling"));
  m.dropout = std::stod(get("dropout"));
  m.gate_init_std = std::stod(get("gate_init_std"));
  m.task = parse_task_kind(get("task"));
  return m;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const MoseModel& model, const CheckpointMeta& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kMagic << ' ' << kVersion << '\n';
  out << "seed " << meta.seed << '\n';
  out << "epoch " << meta.epoch << '\n';
  out << "config " << meta.config.size() << '\n';
  for (const auto& [k, v] : meta.config) out << k << ' ' << (v.empty() ? "-" : v) << '\n';
  const auto me = model_entries(model.config());
  out << "model " << me.size() << '\n';
  for (const auto& [k, v] : me) out << k << ' ' << v << '\n';
  const auto& params = model.params();
  out << "tensors " << params.slots().size() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < params.slots().size(); ++i) {
    const auto& s = params.slots()[i];
    out << "tensor " << s.name << ' ' << s.rows << ' ' << s.cols << '\n';
    const auto v = params(static_cast<int>(i));
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", v(r, c));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& what) { return FormatError(path.string() + ": " + what); };
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != kMagic) throw fail("not a checkpoint");
  if (version != kVersion) throw fail("unsupported checkpoint version " + std::to_string(version));

  CheckpointMeta meta;
  std::size_t n = 0;
  if (!(in >> tag >> meta.seed) || tag != "seed") throw fail("expected seed");
  if (!(in >> tag >> meta.epoch) || tag != "epoch") throw fail("expected epoch");
  if (!(in >> tag >> n) || tag != "config") throw fail("expected config");
  for (std::size_t i = 0; i < n; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) throw fail("truncated config echo");
    meta.config.emplace_back(k, v == "-" ? "" : v);
  }
  if (!(in >> tag >> n) || tag != "model") throw fail("expected model");
  std::map<std::string, std::string> entries;
  for (std::size_t i = 0; i < n; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) throw fail("truncated model config");
    entries[k] = v;
  }
  ModelConfig cfg;
  try {
    cfg = model_from(entries);
  } catch (const std::invalid_argument& e) {
    throw fail(std::string("bad model config: ") + e.what());
  }
  MoseModel model(cfg, meta.seed);
  auto& params = model.params();
  if (!(in >> tag >> n) || tag != "tensors") throw fail("expected tensors");
  if (n != params.slots().size()) throw fail("tensor count does not match the model configuration");
  for (std::size_t i = 0; i < n; ++i) {
    std::string name;
    int rows = 0, cols = 0;
    if (!(in >> tag >> name >> rows >> cols) || tag != "tensor") throw fail("bad tensor header");
    const int id = params.find(name);
    if (id < 0) throw fail("unknown tensor " + name);
    const auto& s = params.slot(id);
    if (s.rows != rows || s.cols != cols) throw fail("shape mismatch for " + name);
    auto v = params(id);
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (!(in >> v.data()[j])) throw fail("truncated tensor " + name);
  }
  if (!(in >> tag) || tag != "end") throw fail("missing end marker");
  return {std::move(model), std::move(meta)};
}

}  // namespace mose
