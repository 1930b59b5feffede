#include "mose/kernel.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mose/error.hpp"

namespace mose {

double KernelConfig::lambda(int p) const {
  if (lambdas.empty()) return 1.0;
  if (p < 0 || p >= static_cast<int>(lambdas.size())) return 0.0;
  return lambdas[p];
}

std::vector<int> KernelConfig::steps() const {
  if (step_mode == StepMode::single_p) return {max_step};
  std::vector<int> out;
  for (int p = include_zero_step ? 0 : 1; p <= max_step; ++p) out.push_back(p);
  return out;
}

int KernelConfig::width() const {
  return step_mode == StepMode::concat_over_p ? static_cast<int>(steps().size()) : 1;
}

void KernelConfig::validate() const {
  if (max_step < 1) throw InvalidArgument("kernel max step must be >= 1");
  if (!lambdas.empty() && static_cast<int>(lambdas.size()) != max_step + 1)
    throw InvalidArgument("kernel lambdas must have max_step + 1 entries");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw InvalidArgument("kernel lambdas must be non-negative");
}

KernelConfig KernelConfig::geometric(int max_step, double gamma, StepMode mode) {
  KernelConfig cfg;
  cfg.max_step = max_step;
  cfg.step_mode = mode;
  double w = 1.0;
  for (int p = 0; p <= max_step; ++p, w *= gamma) cfg.lambdas.push_back(w);
  return cfg;
}

Matrix hidden_adjacency(const ConstMatrixRef& weights) {
  const auto s = weights.rows();
  if (weights.cols() != s) throw InvalidArgument("hidden graph weights must be square");
  Matrix b(s, s);
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) b(i, j) = i == j ? 0.0 : std::max(0.0, 0.5 * (weights(i, j) + weights(j, i)));
  return b;
}

void hidden_adjacency_backward(const ConstMatrixRef& weights, const ConstMatrixRef& d_adjacency, MatrixRef d_weights) {
  const auto s = weights.rows();
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) {
      if (i == j || weights(i, j) + weights(j, i) <= 0.0) continue;
      d_weights(i, j) += 0.5 * (d_adjacency(i, j) + d_adjacency(j, i));
    }
}

Matrix HiddenGraph::adjacency() const { return hidden_adjacency(weights); }

double rwk_discrete(const Graph& g, const Graph& h, const KernelConfig& cfg) {
  const Matrix ax = direct_product(g, h).adjacency_matrix();
  const auto size = ax.rows();
  Matrix power = Matrix::Identity(size, size);
  double total = 0.0;
  for (int p = 0; p <= cfg.max_step; ++p) {
    if (p > 0) power = power * ax;
    if (cfg.step_mode == StepMode::single_p && p != cfg.max_step) continue;
    total += cfg.lambda(p) * power.sum();
  }
  return total;
}

std::uint64_t rwk_oracle(const Graph& g, const Graph& h, int p, std::uint64_t budget) {
  if (p < 0) throw InvalidArgument("rwk_oracle: negative step");
  std::uint64_t count = 0;
  // Every leaf of this recursion is one simultaneous walk (w in g, w' in h).
  auto walk = [&](auto&& self, NodeId u, NodeId a, int depth) -> void {
    if (depth == p) {
      if (++count > budget) throw ResourceError("rwk_oracle: more than " + std::to_string(budget) + " walk pairs");
      return;
    }
    for (NodeId v : g.neighbors(u))
      for (NodeId b : h.neighbors(a)) self(self, v, b, depth + 1);
  };
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (NodeId a = 0; a < h.node_count(); ++a) walk(walk, u, a, 0);
  return count;
}

double rwk_diff(const Graph& g, const Graph& h, int p) {
  if (g.feature_dim() != h.feature_dim())
    throw InvalidArgument("rwk_diff: feature dimensions differ (" + std::to_string(g.feature_dim()) + " vs " +
                          std::to_string(h.feature_dim()) + ")");
  return rwk_diff(g.adjacency_matrix(), g.features(), h.adjacency_matrix(), h.features(), p);
}

double rwk_diff(const ConstMatrixRef& a, const ConstMatrixRef& x, const ConstMatrixRef& b, const ConstMatrixRef& z,
                int p) {
  if (p < 0) throw InvalidArgument("rwk_diff: negative step");
  if (x.cols() != z.cols() || a.rows() != x.rows() || b.rows() != z.rows() || a.rows() != a.cols() ||
      b.rows() != b.cols())
    throw InvalidArgument("rwk_diff: inconsistent dimensions");
  const Matrix s = z * x.transpose();  // n' x n
  Matrix pg = Matrix::Identity(a.rows(), a.rows());
  Matrix ph = Matrix::Identity(b.rows(), b.rows());
  for (int i = 0; i < p; ++i) {
    pg = (pg * a).eval();
    ph = (ph * b).eval();
  }
  const auto n = a.rows();
  const auto m = b.rows();
  // Entry ((i, a), (j, b)) of A^p kron A'^p is pg(i, j) * ph(a, b).
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < m; ++k) {
      const double sik = s(k, i);
      if (sik == 0.0) continue;
      double inner = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double gij = pg(i, j);
        if (gij == 0.0) continue;
        for (Eigen::Index l = 0; l < m; ++l) inner += gij * ph(k, l) * s(l, j);
      }
      total += sik * inner;
    }
  return total;
}

std::uint64_t total_walks(const Graph& g, int p) {
  std::vector<std::uint64_t> cur(static_cast<std::size_t>(g.node_count()), 1), next(cur.size());
  for (int step = 0; step < p; ++step) {
    std::fill(next.begin(), next.end(), 0);
    for (NodeId u = 0; u < g.node_count(); ++u)
      for (NodeId w : g.neighbors(u)) next[w] += cur[u];
    std::swap(cur, next);
  }
  std::uint64_t total = 0;
  for (auto c : cur) total += c;
  return total;
}

KernelOperand::KernelOperand(const Graph& g)
    : n_(g.node_count()),
      f_(g.feature_dim()),
      offsets_(g.offsets().begin(), g.offsets().end()),
      neighbors_(g.neighbor_list().begin(), g.neighbor_list().end()) {
  feat_offsets_.reserve(static_cast<std::size_t>(n_) + 1);
  feat_offsets_.push_back(0);
  for (int j = 0; j < n_; ++j) {
    for (int k = 0; k < f_; ++k) {
      const double x = g.features()(j, k);
      if (x != 0.0) {
        feat_cols_.push_back(k);
        feat_values_.push_back(x);
      }
    }
    feat_offsets_.push_back(static_cast<std::int32_t>(feat_cols_.size()));
  }
}

void KernelOperand::similarity(const ConstMatrixRef& z, Matrix& out) const {
  if (z.cols() != f_)
    throw InvalidArgument("kernel: hidden feature dim " + std::to_string(z.cols()) + " != subgraph feature dim " +
                          std::to_string(f_));
  out.setZero(z.rows(), n_);
  for (int j = 0; j < n_; ++j)
    for (auto e = feat_offsets_[j]; e < feat_offsets_[j + 1]; ++e) out.col(j) += feat_values_[e] * z.col(feat_cols_[e]);
}

void KernelOperand::similarity_backward(const ConstMatrixRef& ds, MatrixRef dz) const {
  for (int j = 0; j < n_; ++j)
    for (auto e = feat_offsets_[j]; e < feat_offsets_[j + 1]; ++e) dz.col(feat_cols_[e]) += feat_values_[e] * ds.col(j);
}

void KernelOperand::times_adjacency(const Matrix& t, Matrix& out) const {
  const auto rows = t.rows();
  out.setZero(rows, n_);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double* src = t.data() + r * n_;
    double* dst = out.data() + r * n_;
    for (int j = 0; j < n_; ++j) {
      double acc = 0.0;
      for (auto e = offsets_[j]; e < offsets_[j + 1]; ++e) acc += src[neighbors_[e]];
      dst[j] = acc;
    }
  }
}

void hidden_kernel_forward(const KernelOperand& op, const ConstMatrixRef& weights, const ConstMatrixRef& features,
                           int max_step, KernelTape& tape) {
  if (features.rows() != weights.rows()) throw InvalidArgument("hidden graph: W and Z row counts differ");
  op.similarity(features, tape.similarity);
  tape.adjacency = hidden_adjacency(weights);
  tape.walk.resize(static_cast<std::size_t>(max_step) + 1);
  tape.right.resize(static_cast<std::size_t>(max_step));
  tape.values.assign(static_cast<std::size_t>(max_step) + 1, 0.0);
  const Matrix& s = tape.similarity;
  tape.walk[0] = s;
  tape.values[0] = s.squaredNorm();
  for (int p = 1; p <= max_step; ++p) {
    op.times_adjacency(tape.walk[p - 1], tape.right[p - 1]);
    tape.walk[p].noalias() = tape.adjacency.lazyProduct(tape.right[p - 1]);
    tape.values[p] = s.cwiseProduct(tape.walk[p]).sum();
  }
}

void hidden_kernel_backward(const KernelOperand& op, const KernelTape& tape, std::span<const double> upstream,
                            const ConstMatrixRef& weights, MatrixRef d_weights, MatrixRef d_features) {
  const int max_step = static_cast<int>(tape.right.size());
  if (static_cast<int>(upstream.size()) != max_step + 1) throw InvalidArgument("kernel backward: upstream size");
  const Matrix& s = tape.similarity;
  const Matrix& b = tape.adjacency;
  Matrix d_walk = Matrix::Zero(s.rows(), s.cols());
  Matrix d_sim = (2.0 * upstream[0]) * s;
  Matrix d_adj = Matrix::Zero(b.rows(), b.cols());
  Matrix d_right;
  for (int p = max_step; p >= 1; --p) {
    if (upstream[p] != 0.0) {
      d_walk += upstream[p] * s;
      d_sim += upstream[p] * tape.walk[p];
    }
    // walk[p] = B right[p-1], right[p-1] = walk[p-1] A, with B and A symmetric.
    // Operands are a few rows tall, where Eigen's blocked GEMM is mostly overhead.
    d_adj.noalias() += d_walk.lazyProduct(tape.right[p - 1].transpose());
    d_right.noalias() = b.lazyProduct(d_walk);
    op.times_adjacency(d_right, d_walk);
  }
  d_sim += d_walk;
  op.similarity_backward(d_sim, d_features);
  hidden_adjacency_backward(weights, d_adj, d_weights);
}

double rwk_hidden(const NodeSubgraph& sub, const HiddenGraph& hidden, int p) {
  if (p < 0) throw InvalidArgument("rwk_hidden: negative step");
  KernelOperand op(sub.graph);
  KernelTape tape;
  hidden_kernel_forward(op, hidden.weights, hidden.features, p, tape);
  return tape.values[p];
}

KernelGrad rwk_hidden_grad(const NodeSubgraph& sub, const HiddenGraph& hidden, int p) {
  if (p < 0) throw InvalidArgument("rwk_hidden_grad: negative step");
  KernelOperand op(sub.graph);
  KernelTape tape;
  hidden_kernel_forward(op, hidden.weights, hidden.features, p, tape);
  std::vector<double> upstream(static_cast<std::size_t>(p) + 1, 0.0);
  upstream[p] = 1.0;
  KernelGrad grad;
  grad.value = tape.values[p];
  grad.d_weights = Matrix::Zero(hidden.weights.rows(), hidden.weights.cols());
  grad.d_features = Matrix::Zero(hidden.features.rows(), hidden.features.cols());
  hidden_kernel_backward(op, tape, upstream, hidden.weights, grad.d_weights, grad.d_features);
  return grad;
}

Vector kernel_features(const KernelOperand& op, std::span<const HiddenGraph> expert, const KernelConfig& cfg) {
  const auto steps = cfg.steps();
  const int width = cfg.width();
  Vector out = Vector::Zero(static_cast<Eigen::Index>(expert.size()) * width);
  KernelTape tape;
  for (std::size_t i = 0; i < expert.size(); ++i) {
    hidden_kernel_forward(op, expert[i].weights, expert[i].features, cfg.max_step, tape);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const double v = cfg.lambda(steps[k]) * tape.values[steps[k]];
      const auto slot = static_cast<Eigen::Index>(i) * width + (width == 1 ? 0 : static_cast<Eigen::Index>(k));
      out[slot] += v;
    }
  }
  return out;
}

Vector expert_embed(const NodeSubgraph& sub, std::span<const HiddenGraph> expert, const KernelConfig& cfg,
                    const std::function<Vector(const Vector&)>& transform) {
  if (!expert.empty()) {
    const int s = expert.front().size();
    for (const auto& hg : expert)
      if (hg.size() != s || hg.feature_dim() != sub.graph.feature_dim())
        throw InvalidArgument("expert_embed: hidden graphs must share size and feature dim");
  }
  return transform(kernel_features(KernelOperand(sub.graph), expert, cfg));
}

void write_hidden_graph(std::ostream& out, const HiddenGraph& hg) {
  char buf[64];
  out << "MOSE-HIDDEN-GRAPH 1\n" << hg.size() << ' ' << hg.feature_dim() << '\n';
  for (const Matrix* m : {&hg.weights, &hg.features})
    for (Eigen::Index i = 0; i < m->rows(); ++i) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", (*m)(i, j));
        out << (j ? " " : "") << buf;
      }
      out << '\n';
    }
}

HiddenGraph read_hidden_graph(std::istream& in) {
  std::string tag;
  int version = 0, s = 0, f = 0;
  in >> tag >> version >> s >> f;
  if (tag != "MOSE-HIDDEN-GRAPH" || version != 1) throw FormatError("not a version-1 hidden graph record");
  if (!in || s < 1 || f < 0) throw FormatError("bad hidden graph dimensions");
  HiddenGraph hg{Matrix(s, s), Matrix(s, f)};
  for (Matrix* m : {&hg.weights, &hg.features})
    for (Eigen::Index i = 0; i < m->size(); ++i)
      if (!(in >> m->data()[i])) throw FormatError("truncated hidden graph record");
  return hg;
}

std::string hidden_graph_dot(const HiddenGraph& hg, double prune_threshold, const std::string& name) {
  const Matrix b = hg.adjacency();
  const double top = b.size() ? b.maxCoeff() : 0.0;
  std::ostringstream out;
  char buf[128];
  out << "graph " << name << " {\n  node [shape=circle];\n";
  for (int i = 0; i < hg.size(); ++i) out << "  " << i << ";\n";
  for (int i = 0; i < hg.size(); ++i)
    for (int j = i + 1; j < hg.size(); ++j) {
      const double w = b(i, j);
      if (w <= 0.0 || w < prune_threshold) continue;
      std::snprintf(buf, sizeof buf, "  %d -- %d [weight=%.4f, penwidth=%.3f, label=\"%.2f\"];\n", i, j, w,
                    0.5 + 4.5 * w / top, w);
      out << buf;
    }
  out << "}\n";
  return out.str();
}

}  // namespace mose
