#include <fstream>
#include <sstream>

#include "mose/error.hpp"
#include "mose/walks.hpp"

namespace mose {

void SubgraphCache::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << magic << ' ' << version << '\n';
  out << "dataset " << dataset << '\n';
  out << "seed " << config.seed << '\n';
  out << "walk_length " << config.walk_length << '\n';
  out << "walks_per_node " << config.walks_per_node << '\n';
  out << "k_walk " << config.pattern_budget << '\n';
  out << "cap " << config.subgraph_cap << '\n';
  out << "graphs " << members.size() << '\n';
  for (std::size_t g = 0; g < members.size(); ++g) {
    out << "graph " << g << ' ' << members[g].size() << '\n';
    for (const auto& ids : members[g]) {
      for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed for " + path.string());
}

SubgraphCache SubgraphCache::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& what) -> void { throw FormatError(path.string() + ": " + what); };

  std::string tag;
  int ver = 0;
  in >> tag >> ver;
  if (tag != magic) fail("not a subgraph cache");
  if (ver != version) fail("unsupported cache version " + std::to_string(ver));

  SubgraphCache cache;
  auto expect = [&](const char* key, auto& value) {
    std::string k;
    in >> k >> value;
    if (!in || k != key) fail(std::string("expected '") + key + "'");
  };
  expect("dataset", cache.dataset);
  expect("seed", cache.config.seed);
  expect("walk_length", cache.config.walk_length);
  expect("walks_per_node", cache.config.walks_per_node);
  expect("k_walk", cache.config.pattern_budget);
  expect("cap", cache.config.subgraph_cap);
  std::size_t graphs = 0;
  expect("graphs", graphs);
  cache.members.resize(graphs);
  std::string line;
  for (std::size_t g = 0; g < graphs; ++g) {
    std::size_t index = 0, nodes = 0;
    std::string k;
    in >> k >> index >> nodes;
    if (!in || k != "graph" || index != g) fail("bad graph header " + std::to_string(g));
    std::getline(in, line);
    cache.members[g].resize(nodes);
    for (std::size_t v = 0; v < nodes; ++v) {
      if (!std::getline(in, line)) fail("truncated record");
      std::istringstream ss(line);
      NodeId id;
      while (ss >> id) cache.members[g][v].push_back(id);
      if (cache.members[g][v].empty() || cache.members[g][v].front() != static_cast<NodeId>(v))
        fail("record for node " + std::to_string(v) + " of graph " + std::to_string(g) + " must start with the node");
    }
  }
  in >> tag;
  if (tag != "end") fail("missing end marker");
  return cache;
}

std::vector<NodeSubgraph> SubgraphCache::subgraphs(const Graph& g, std::size_t index) const {
  const auto& recs = members.at(index);
  if (static_cast<NodeId>(recs.size()) != g.node_count())
    throw InvalidArgument("subgraph cache: node count mismatch for graph " + std::to_string(index));
  std::vector<NodeSubgraph> out;
  out.reserve(recs.size());
  for (const auto& ids : recs) out.push_back(induced_subgraph(g, ids));
  return out;
}

}  // namespace mose
