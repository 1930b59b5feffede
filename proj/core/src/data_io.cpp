#include "mose/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mose/error.hpp"

namespace mose {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits on '\n', keeping 1-based line numbers; blank lines are skipped.
struct Line {
  std::size_t number;
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view content) {
  std::vector<Line> out;
  std::size_t start = 0, number = 1;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!line.empty()) out.push_back({number, line});
    if (end == content.size()) break;
    start = end + 1;
    ++number;
  }
  return out;
}

[[noreturn]] void format_error(const fs::path& file, std::size_t line, const std::string& what) {
  throw FormatError(file.filename().string() + ":" + std::to_string(line) + ": " + what);
}

// Parses separator-delimited numeric fields, tolerating whitespace around separators.
template <typename T>
std::vector<T> parse_fields(std::string_view text, char sep, const fs::path& file, std::size_t line) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(sep, pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view field = text.substr(pos, end - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    T value{};
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
      format_error(file, line, "cannot parse '" + std::string(field) + "'");
    out.push_back(value);
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

std::vector<long long> read_int_column(const fs::path& path) {
  auto content = read_file(path);
  std::vector<long long> out;
  for (const auto& l : split_lines(content)) {
    auto f = parse_fields<long long>(l.text, ',', path, l.number);
    if (f.size() != 1) format_error(path, l.number, "expected one integer");
    out.push_back(f[0]);
  }
  return out;
}

// Maps raw integer labels to 0..C-1 in ascending order.
std::vector<int> remap_labels(const std::vector<long long>& raw, int& class_count) {
  std::vector<long long> uniq = raw;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  class_count = static_cast<int>(uniq.size());
  std::vector<int> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), raw[i]) - uniq.begin());
  return out;
}

void fnv(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

void validate(const Dataset& ds) {
  if (ds.class_count <= 0) throw InvalidArgument(ds.name + ": class count must be positive");
  if (ds.task == TaskKind::node_level) {
    if (ds.graphs.size() != 1) throw InvalidArgument(ds.name + ": node-level dataset must hold one graph");
    const auto& labels = ds.graphs[0].node_labels();
    if (static_cast<NodeId>(labels.size()) != ds.graphs[0].node_count())
      throw InvalidArgument(ds.name + ": node labels missing");
    for (int y : labels)
      if (y < -1 || y >= ds.class_count) throw InvalidArgument(ds.name + ": node label out of range");
    return;
  }
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    auto y = ds.graphs[i].graph_label();
    if (!y || *y < 0 || *y >= ds.class_count)
      throw InvalidArgument(ds.name + ": graph " + std::to_string(i) + " has a missing or out-of-range label");
  }
}

Dataset load_tu_dataset(const fs::path& dir, const std::string& name) {
  auto file = [&](const char* suffix) { return dir / (name + suffix); };
  const fs::path a_path = file("_A.txt");
  const fs::path ind_path = file("_graph_indicator.txt");
  const fs::path gl_path = file("_graph_labels.txt");
  for (const auto& p : {a_path, ind_path, gl_path})
    if (!fs::exists(p)) throw IoError("missing required file " + p.string());

  const auto indicator = read_int_column(ind_path);
  const auto node_total = static_cast<long long>(indicator.size());
  const auto raw_graph_labels = read_int_column(gl_path);
  const auto graph_total = static_cast<long long>(raw_graph_labels.size());

  // Local index of each global node inside its graph, in file order.
  std::vector<NodeId> local(indicator.size());
  std::vector<NodeId> sizes(static_cast<std::size_t>(graph_total), 0);
  for (std::size_t v = 0; v < indicator.size(); ++v) {
    long long gid = indicator[v];
    if (gid < 1 || gid > graph_total)
      format_error(ind_path, v + 1, "graph id " + std::to_string(gid) + " outside 1.." + std::to_string(graph_total));
    local[v] = sizes[gid - 1]++;
  }

  std::vector<std::vector<std::pair<NodeId, NodeId>>> edges(static_cast<std::size_t>(graph_total));
  {
    const auto content = read_file(a_path);
    for (const auto& l : split_lines(content)) {
      auto f = parse_fields<long long>(l.text, ',', a_path, l.number);
      if (f.size() != 2) format_error(a_path, l.number, "expected 'i, j'");
      for (long long id : f)
        if (id < 1 || id > node_total) format_error(a_path, l.number, "dangling node id " + std::to_string(id));
      const auto u = static_cast<std::size_t>(f[0] - 1), v = static_cast<std::size_t>(f[1] - 1);
      if (indicator[u] != indicator[v]) format_error(a_path, l.number, "edge joins two different graphs");
      if (u == v) continue;
      edges[indicator[u] - 1].emplace_back(local[u], local[v]);
    }
  }

  // Features: one-hot node labels, then attributes.
  std::vector<int> node_label_ids;
  int node_label_classes = 0;
  if (fs::exists(file("_node_labels.txt"))) {
    auto raw = read_int_column(file("_node_labels.txt"));
    if (static_cast<long long>(raw.size()) != node_total)
      throw FormatError(name + "_node_labels.txt: expected " + std::to_string(node_total) + " lines");
    node_label_ids = remap_labels(raw, node_label_classes);
  }
  std::vector<std::vector<double>> attrs;
  int attr_dim = 0;
  if (fs::exists(file("_node_attributes.txt"))) {
    const auto path = file("_node_attributes.txt");
    const auto content = read_file(path);
    for (const auto& l : split_lines(content)) {
      attrs.push_back(parse_fields<double>(l.text, ',', path, l.number));
      if (attrs.size() == 1) attr_dim = static_cast<int>(attrs[0].size());
      if (static_cast<int>(attrs.back().size()) != attr_dim)
        format_error(path, l.number, "attribute count differs from first line");
    }
    if (static_cast<long long>(attrs.size()) != node_total)
      throw FormatError(path.filename().string() + ": expected " + std::to_string(node_total) + " lines");
  }

  Dataset ds;
  ds.name = name;
  ds.task = TaskKind::graph_level;
  const auto graph_labels = remap_labels(raw_graph_labels, ds.class_count);
  const int feat_dim = node_label_classes + attr_dim;

  std::vector<Matrix> feats(static_cast<std::size_t>(graph_total));
  for (long long g = 0; g < graph_total; ++g) feats[g] = Matrix::Zero(sizes[g], feat_dim);
  for (std::size_t v = 0; v < indicator.size(); ++v) {
    auto& x = feats[indicator[v] - 1];
    if (!node_label_ids.empty()) x(local[v], node_label_ids[v]) = 1.0;
    for (int k = 0; k < attr_dim; ++k) x(local[v], node_label_classes + k) = attrs[v][k];
  }

  ds.graphs.reserve(static_cast<std::size_t>(graph_total));
  for (long long g = 0; g < graph_total; ++g)
    ds.graphs.push_back(Graph::from_edges(sizes[g], edges[g], std::move(feats[g]), graph_labels[g]));

  if (feat_dim == 0) {
    int cap = 0;
    for (const auto& g : ds.graphs) cap = std::max(cap, g.max_degree());
    for (auto& g : ds.graphs) g = g.with_features(degree_features(g, cap));
  }
  validate(ds);
  return ds;
}

void write_tu_dataset(const Dataset& ds, const fs::path& dir) {
  if (ds.task != TaskKind::graph_level) throw InvalidArgument("write_tu_dataset: graph-level datasets only");
  fs::create_directories(dir);
  auto open = [&](const char* suffix) {
    auto path = dir / (ds.name + suffix);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
  };
  auto a = open("_A.txt");
  auto ind = open("_graph_indicator.txt");
  auto gl = open("_graph_labels.txt");
  auto attr = open("_node_attributes.txt");
  long long base = 0;
  char buf[64];
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const auto& graph = ds.graphs[g];
    for (NodeId u = 0; u < graph.node_count(); ++u) {
      for (NodeId v : graph.neighbors(u)) a << base + u + 1 << ", " << base + v + 1 << '\n';
      ind << g + 1 << '\n';
      for (int k = 0; k < graph.feature_dim(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", graph.features()(u, k));
        attr << (k ? ", " : "") << buf;
      }
      attr << '\n';
    }
    gl << graph.graph_label().value_or(0) << '\n';
    base += graph.node_count();
  }
}

Dataset load_node_dataset(const fs::path& dir, const std::string& name) {
  const fs::path feat_path = dir / "out1_node_feature_label.txt";
  const fs::path edge_path = dir / "out1_graph_edges.txt";
  for (const auto& p : {feat_path, edge_path})
    if (!fs::exists(p)) throw IoError("missing required file " + p.string());

  const auto feat_content = read_file(feat_path);
  auto lines = split_lines(feat_content);
  if (lines.empty()) throw FormatError(feat_path.filename().string() + ": empty file");
  std::map<long long, std::pair<std::vector<double>, long long>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {  // line 0 is the header
    const auto& l = lines[i];
    auto t1 = l.text.find('\t');
    auto t2 = l.text.rfind('\t');
    if (t1 == std::string_view::npos || t1 == t2) format_error(feat_path, l.number, "expected three tab-separated fields");
    auto id = parse_fields<long long>(l.text.substr(0, t1), ',', feat_path, l.number);
    auto feats = parse_fields<double>(l.text.substr(t1 + 1, t2 - t1 - 1), ',', feat_path, l.number);
    auto label = parse_fields<long long>(l.text.substr(t2 + 1), ',', feat_path, l.number);
    rows[id[0]] = {std::move(feats), label[0]};
  }
  const auto n = static_cast<NodeId>(rows.size());
  if (rows.begin()->first != 0 || rows.rbegin()->first != n - 1)
    throw FormatError(feat_path.filename().string() + ": node ids must be 0..n-1");
  const auto dim = static_cast<int>(rows.begin()->second.first.size());
  Matrix x(n, dim);
  std::vector<long long> raw_labels;
  for (auto& [id, row] : rows) {
    if (static_cast<int>(row.first.size()) != dim)
      throw FormatError(feat_path.filename().string() + ": ragged feature rows");
    for (int k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(id), k) = row.first[k];
    raw_labels.push_back(row.second);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  const auto edge_content = read_file(edge_path);
  auto elines = split_lines(edge_content);
  for (std::size_t i = 1; i < elines.size(); ++i) {
    auto f = parse_fields<long long>(elines[i].text, '\t', edge_path, elines[i].number);
    if (f.size() != 2) format_error(edge_path, elines[i].number, "expected two node ids");
    for (long long id : f)
      if (id < 0 || id >= n) format_error(edge_path, elines[i].number, "dangling node id " + std::to_string(id));
    if (f[0] != f[1]) edges.emplace_back(static_cast<NodeId>(f[0]), static_cast<NodeId>(f[1]));
  }

  Dataset ds;
  ds.name = name;
  ds.task = TaskKind::node_level;
  auto labels = remap_labels(raw_labels, ds.class_count);
  ds.graphs.push_back(Graph::from_edges(n, edges, std::move(x), std::nullopt, std::move(labels)));
  validate(ds);
  return ds;
}

std::uint64_t dataset_hash(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv(h, ds.name.data(), ds.name.size());
  for (const auto& g : ds.graphs) {
    auto off = g.offsets();
    auto nb = g.neighbor_list();
    fnv(h, off.data(), off.size_bytes());
    fnv(h, nb.data(), nb.size_bytes());
    fnv(h, g.features().data(), sizeof(double) * static_cast<std::size_t>(g.features().size()));
    int y = g.graph_label().value_or(-1);
    fnv(h, &y, sizeof y);
    fnv(h, g.node_labels().data(), g.node_labels().size() * sizeof(int));
  }
  return h;
}

}  // namespace mose
