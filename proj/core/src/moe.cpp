#include "mose/moe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mose/error.hpp"
#include "mose/rng.hpp"

namespace mose {

double softplus(double x) noexcept { return x > 30.0 ? x : std::log1p(std::exp(x)); }

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double scale_value(FeatureScaling s, double x) noexcept {
  if (s == FeatureScaling::none) return x;
  return std::copysign(std::log1p(std::abs(x)), x);
}

double scale_grad(FeatureScaling s, double x) noexcept {
  if (s == FeatureScaling::none) return 1.0;
  return 1.0 / (1.0 + std::abs(x));
}

}  // namespace

Vector gate_aggregate(const NodeSubgraph& sub, Activation act) {
  const Matrix& x = sub.graph.features();
  const auto n = x.rows();
  if (n == 0 || sub.center < 0 || sub.center >= n) throw InvalidArgument("gate_aggregate: missing center row");
  const Vector xv = x.row(sub.center).transpose();
  Vector scores = x * xv;
  const double top = scores.maxCoeff();
  Vector alpha = (scores.array() - top).exp().matrix();
  alpha /= alpha.sum();
  Vector eta = xv + x.transpose() * alpha;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = activate(act, eta[i]);
  return eta;
}

Vector gate_scores(const Vector& eta, const ConstMatrixRef& w_clean, const ConstMatrixRef& w_noise,
                   const Vector* noise) {
  if (eta.size() != w_clean.rows() || w_clean.rows() != w_noise.rows() || w_clean.cols() != w_noise.cols())
    throw InvalidArgument("gate_scores: dimension mismatch");
  Vector psi = w_clean.transpose() * eta;
  if (noise) {
    if (noise->size() != psi.size()) throw InvalidArgument("gate_scores: noise length must equal K");
    const Vector pre = w_noise.transpose() * eta;
    for (Eigen::Index k = 0; k < psi.size(); ++k) psi[k] += (*noise)[k] * softplus(pre[k]);
  }
  return psi;
}

Route route(const Vector& psi, int k) {
  const int experts = static_cast<int>(psi.size());
  if (k < 1 || k > experts) throw InvalidArgument("route: k_ept must be in [1, K]");
  std::vector<int> order(static_cast<std::size_t>(experts));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return psi[a] > psi[b]; });
  Route r;
  r.indices.assign(order.begin(), order.begin() + k);
  std::sort(r.indices.begin(), r.indices.end());
  double top = psi[r.indices.front()];
  for (int i : r.indices) top = std::max(top, psi[i]);
  double total = 0.0;
  for (int i : r.indices) {
    r.weights.push_back(std::exp(psi[i] - top));
    total += r.weights.back();
  }
  for (double& w : r.weights) w /= total;
  return r;
}

Vector combine_weighted(std::span<const Vector> embeddings, const Route& r) {
  if (embeddings.size() != r.indices.size() || embeddings.empty())
    throw InternalError("combine: missing expert embedding");
  Vector h = Vector::Zero(embeddings.front().size());
  for (std::size_t m = 0; m < embeddings.size(); ++m) h += r.weights[m] * embeddings[m];
  return h;
}

Vector concat_blocks(std::span<const Vector> embeddings, const Route& r, int experts) {
  if (embeddings.size() != r.indices.size() || embeddings.empty())
    throw InternalError("combine: missing expert embedding");
  const auto d = embeddings.front().size();
  Vector c = Vector::Zero(experts * d);
  for (std::size_t m = 0; m < embeddings.size(); ++m)
    c.segment(r.indices[m] * d, d) = r.weights[m] * embeddings[m];
  return c;
}

Vector readout(std::span<const Vector> embeddings, Pooling pooling) {
  if (embeddings.empty()) throw InvalidArgument("readout: empty node set");
  Vector out = embeddings.front();
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    if (pooling == Pooling::max)
      out = out.cwiseMax(embeddings[i]);
    else
      out += embeddings[i];
  }
  if (pooling == Pooling::mean) out /= static_cast<double>(embeddings.size());
  return out;
}

std::vector<Vector> readout_backward(std::span<const Vector> embeddings, Pooling pooling, const Vector& dout) {
  if (embeddings.empty()) throw InvalidArgument("readout: empty node set");
  std::vector<Vector> grads(embeddings.size(), Vector::Zero(dout.size()));
  if (pooling == Pooling::max) {
    for (Eigen::Index j = 0; j < dout.size(); ++j) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < embeddings.size(); ++i)
        if (embeddings[i][j] > embeddings[arg][j]) arg = i;
      grads[arg][j] = dout[j];
    }
    return grads;
  }
  const double scale = pooling == Pooling::mean ? 1.0 / static_cast<double>(embeddings.size()) : 1.0;
  for (auto& g : grads) g = scale * dout;
  return grads;
}

std::vector<int> ModelConfig::sizes() const {
  if (!expert_sizes.empty()) return expert_sizes;
  std::vector<int> out;
  for (int k = 1; k <= experts; ++k) out.push_back(k + 1);
  return out;
}

void ModelConfig::validate() const {
  if (feature_dim < 1) throw InvalidArgument("model: feature_dim must be >= 1");
  if (class_count < 2) throw InvalidArgument("model: class_count must be >= 2");
  if (experts < 1) throw InvalidArgument("model: experts must be >= 1");
  if (hidden_graphs < 1) throw InvalidArgument("model: hidden_graphs must be >= 1");
  if (hidden_dim < 1) throw InvalidArgument("model: hidden_dim must be >= 1");
  if (k_ept < 1 || k_ept > experts) throw InvalidArgument("model: k_ept must be in [1, experts]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("model: dropout must be in [0, 1)");
  const auto s = sizes();
  if (static_cast<int>(s.size()) != experts) throw InvalidArgument("model: need one hidden graph size per expert");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 1) throw InvalidArgument("model: hidden graph sizes must be >= 1");
    if (i && s[i] <= s[i - 1]) throw InvalidArgument("model: hidden graph sizes must be strictly increasing");
  }
  kernel.validate();
}

PreparedNode prepare_node(const NodeSubgraph& sub, Activation act) {
  return {KernelOperand(sub.graph), gate_aggregate(sub, act)};
}

MoseModel::MoseModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  build();
  initialize(init_seed);
}

MoseModel::MoseModel(const MoseModel& other)
    : cfg_(other.cfg_),
      params_(other.params_),
      w_clean_(other.w_clean_),
      w_noise_(other.w_noise_),
      hg_w_(other.hg_w_),
      hg_z_(other.hg_z_),
      transforms_(other.transforms_),
      combine_ff_(other.combine_ff_),
      head_(other.head_) {}

MoseModel& MoseModel::operator=(const MoseModel& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    params_ = other.params_;
    w_clean_ = other.w_clean_;
    w_noise_ = other.w_noise_;
    hg_w_ = other.hg_w_;
    hg_z_ = other.hg_z_;
    transforms_ = other.transforms_;
    combine_ff_ = other.combine_ff_;
    head_ = other.head_;
    evaluations_ = 0;
  }
  return *this;
}

void MoseModel::build() {
  const int f = cfg_.feature_dim, K = cfg_.experts, d = cfg_.hidden_dim;
  w_clean_ = params_.add("gate.w_clean", f, K);
  w_noise_ = params_.add("gate.w_noise", f, K);
  const auto sizes = cfg_.sizes();
  const int in = cfg_.hidden_graphs * cfg_.kernel.width();
  hg_w_.assign(K, {});
  hg_z_.assign(K, {});
  for (int k = 0; k < K; ++k) {
    const std::string prefix = "expert" + std::to_string(k);
    for (int i = 0; i < cfg_.hidden_graphs; ++i) {
      const std::string hg = prefix + ".hg" + std::to_string(i);
      hg_w_[k].push_back(params_.add(hg + ".w", sizes[k], sizes[k]));
      hg_z_[k].push_back(params_.add(hg + ".z", sizes[k], f));
    }
    transforms_.emplace_back(params_, prefix + ".ff", in, d, d);
  }
  if (cfg_.combine == CombineMode::concat) combine_ff_ = FeedForward(params_, "combine.ff", K * d, d, d);
  head_ = FeedForward(params_, "head", d, d, cfg_.class_count);
}

void MoseModel::initialize(std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x1417});
  std::normal_distribution<double> gate(0.0, cfg_.gate_init_std);
  for (int slot : {w_clean_, w_noise_}) {
    auto w = params_(slot);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = gate(rng);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> feat(0.0, std::sqrt(1.0 / cfg_.feature_dim));
  for (int k = 0; k < cfg_.experts; ++k) {
    for (int i = 0; i < cfg_.hidden_graphs; ++i) {
      auto w = params_(hg_w_[k][i]);
      for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = unit(rng);
      auto z = params_(hg_z_[k][i]);
      for (Eigen::Index j = 0; j < z.size(); ++j) z.data()[j] = feat(rng);
    }
    transforms_[k].initialize(params_, rng);
  }
  if (cfg_.combine == CombineMode::concat) combine_ff_.initialize(params_, rng);
  head_.initialize(params_, rng);
}

HiddenGraph MoseModel::hidden_graph(int expert, int index) const {
  return {params_(hidden_weight_slot(expert, index)), params_(hidden_feature_slot(expert, index))};
}

Vector MoseModel::embed_node(const PreparedNode& node, const ForwardContext& ctx, std::uint64_t node_id,
                             NodeTape* tape) const {
  NodeTape local;
  NodeTape& t = tape ? *tape : local;
  const int K = cfg_.experts;
  if (node.eta.size() != cfg_.feature_dim || node.operand.feature_dim() != cfg_.feature_dim)
    throw InvalidArgument("forward: node features do not match the model feature dimension");

  Rng rng = make_rng(ctx.seed, {ctx.epoch, ctx.item, node_id});
  Rng* drop = ctx.train ? &rng : nullptr;
  t.noise.resize(0);
  t.noise_pre.resize(0);
  if (ctx.train) {
    std::normal_distribution<double> normal(0.0, 1.0);
    t.noise.resize(K);
    for (int k = 0; k < K; ++k) t.noise[k] = normal(rng);
    t.noise_pre = params_(w_noise_).transpose() * node.eta;
  }
  t.psi = gate_scores(node.eta, params_(w_clean_), params_(w_noise_), ctx.train ? &t.noise : nullptr);
  t.route = route(t.psi, cfg_.k_ept);

  const auto steps = cfg_.kernel.steps();
  const int width = cfg_.kernel.width();
  t.experts.resize(t.route.indices.size());
  std::vector<Vector> outs;
  for (std::size_t m = 0; m < t.route.indices.size(); ++m) {
    ExpertTape& e = t.experts[m];
    const int k = t.route.indices[m];
    e.expert = k;
    e.kernels.resize(static_cast<std::size_t>(cfg_.hidden_graphs));
    e.raw = Vector::Zero(cfg_.hidden_graphs * width);
    for (int i = 0; i < cfg_.hidden_graphs; ++i) {
      auto& kt = e.kernels[static_cast<std::size_t>(i)];
      hidden_kernel_forward(node.operand, params_(hg_w_[k][i]), params_(hg_z_[k][i]), cfg_.kernel.max_step, kt);
      for (std::size_t j = 0; j < steps.size(); ++j)
        e.raw[i * width + (width == 1 ? 0 : static_cast<int>(j))] += cfg_.kernel.lambda(steps[j]) * kt.values[steps[j]];
    }
    e.features = e.raw.unaryExpr([&](double x) { return scale_value(cfg_.scaling, x); });
    e.out = transforms_[k].forward(params_, e.features, cfg_.dropout, drop, &e.ff);
    outs.push_back(e.out);
  }
  evaluations_.fetch_add(t.route.indices.size(), std::memory_order_relaxed);

  if (cfg_.combine == CombineMode::weighted_sum) {
    t.h = combine_weighted(outs, t.route);
  } else {
    t.concat = concat_blocks(outs, t.route, K);
    t.h = combine_ff_.forward(params_, t.concat, cfg_.dropout, drop, &t.combine_ff);
  }
  return t.h;
}

void MoseModel::embed_node_backward(const PreparedNode& node, const NodeTape& t, const Vector& dh,
                                    std::span<const double> d_route_weights, bool train,
                                    std::span<double> grads) const {
  const std::size_t k_sel = t.route.indices.size();
  const int d = cfg_.hidden_dim;
  if (!d_route_weights.empty() && d_route_weights.size() != k_sel)
    throw InvalidArgument("backward: route weight gradient length mismatch");
  std::vector<double> dzeta(k_sel, 0.0);
  for (std::size_t m = 0; m < d_route_weights.size(); ++m) dzeta[m] = d_route_weights[m];

  std::vector<Vector> d_out(k_sel);
  if (cfg_.combine == CombineMode::weighted_sum) {
    for (std::size_t m = 0; m < k_sel; ++m) {
      d_out[m] = t.route.weights[m] * dh;
      dzeta[m] += t.experts[m].out.dot(dh);
    }
  } else {
    const Vector dc = combine_ff_.backward(params_, t.combine_ff, dh, grads);
    for (std::size_t m = 0; m < k_sel; ++m) {
      const Vector block = dc.segment(t.route.indices[m] * d, d);
      d_out[m] = t.route.weights[m] * block;
      dzeta[m] += t.experts[m].out.dot(block);
    }
  }

  const auto steps = cfg_.kernel.steps();
  const int width = cfg_.kernel.width();
  std::vector<double> upstream(static_cast<std::size_t>(cfg_.kernel.max_step) + 1);
  for (std::size_t m = 0; m < k_sel; ++m) {
    const ExpertTape& e = t.experts[m];
    const int k = e.expert;
    Vector dfeat = transforms_[k].backward(params_, e.ff, d_out[m], grads);
    for (Eigen::Index j = 0; j < dfeat.size(); ++j) dfeat[j] *= scale_grad(cfg_.scaling, e.raw[j]);
    for (int i = 0; i < cfg_.hidden_graphs; ++i) {
      std::fill(upstream.begin(), upstream.end(), 0.0);
      for (std::size_t j = 0; j < steps.size(); ++j)
        upstream[steps[j]] += cfg_.kernel.lambda(steps[j]) * dfeat[i * width + (width == 1 ? 0 : static_cast<int>(j))];
      auto dw = params_.view(grads, hg_w_[k][i]);
      auto dz = params_.view(grads, hg_z_[k][i]);
      hidden_kernel_backward(node.operand, e.kernels[static_cast<std::size_t>(i)], upstream, params_(hg_w_[k][i]), dw,
                             dz);
    }
  }

  // Softmax over the retained logits; unselected logits get no gradient.
  double inner = 0.0;
  for (std::size_t m = 0; m < k_sel; ++m) inner += t.route.weights[m] * dzeta[m];
  Vector dpsi = Vector::Zero(cfg_.experts);
  for (std::size_t m = 0; m < k_sel; ++m) dpsi[t.route.indices[m]] = t.route.weights[m] * (dzeta[m] - inner);
  params_.view(grads, w_clean_).noalias() += node.eta * dpsi.transpose();
  if (train && t.noise.size() == cfg_.experts) {
    Vector dpre(cfg_.experts);
    for (int k = 0; k < cfg_.experts; ++k) dpre[k] = dpsi[k] * t.noise[k] * sigmoid(t.noise_pre[k]);
    params_.view(grads, w_noise_).noalias() += node.eta * dpre.transpose();
  }
}

Vector MoseModel::head_forward(const Vector& h, const ForwardContext& ctx, std::uint64_t stream, HeadTape* tape) const {
  HeadTape local;
  HeadTape& t = tape ? *tape : local;
  if (ctx.train) {
    Rng rng = make_rng(ctx.seed, {ctx.epoch, ctx.item, stream, 0x4eadULL});
    t.logits = head_.forward(params_, h, cfg_.dropout, &rng, &t.ff);
  } else {
    t.logits = head_.forward(params_, h, cfg_.dropout, nullptr, &t.ff);
  }
  return t.logits;
}

Vector MoseModel::head_backward(const HeadTape& tape, const Vector& dlogits, std::span<double> grads) const {
  return head_.backward(params_, tape.ff, dlogits, grads);
}

void MoseModel::append_signature(const NodeTape& tape, std::vector<std::uint8_t>& sig) const {
  for (int i : tape.route.indices) sig.push_back(static_cast<std::uint8_t>(i));
  for (const auto& e : tape.experts) FeedForward::append_signature(e.ff, sig);
  if (cfg_.combine == CombineMode::concat) FeedForward::append_signature(tape.combine_ff, sig);
}

void MoseModel::append_signature(const HeadTape& tape, std::vector<std::uint8_t>& sig) {
  FeedForward::append_signature(tape.ff, sig);
}

void MoseModel::append_parameter_signature(std::vector<std::uint8_t>& sig) const {
  for (const auto& row : hg_w_)
    for (int slot : row) {
      const auto w = params_(slot);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = i + 1; j < w.cols(); ++j) sig.push_back(w(i, j) + w(j, i) > 0.0 ? 1 : 0);
    }
}

NodeForward forward(const MoseModel& model, const PreparedNode& node, const ForwardContext& ctx) {
  NodeTape tape;
  const Vector h = model.embed_node(node, ctx, 0, &tape);
  return {model.head_forward(h, ctx, 0, nullptr), tape.route};
}

Vector graph_embedding(const MoseModel& model, std::span<const PreparedNode> nodes) {
  std::vector<Vector> hs;
  hs.reserve(nodes.size());
  for (std::size_t v = 0; v < nodes.size(); ++v) hs.push_back(model.embed_node(nodes[v], {}, v, nullptr));
  return readout(hs, model.config().pooling);
}

}  // namespace mose
