#include "mose/nn.hpp"

#include <cmath>

#include "mose/error.hpp"

namespace mose {

int ParamStore::add(std::string name, int rows, int cols) {
  if (rows < 0 || cols < 0) throw InvalidArgument("ParamStore: negative shape for " + name);
  if (find(name) >= 0) throw InvalidArgument("ParamStore: duplicate tensor " + name);
  Slot s{std::move(name), rows, cols, values_.size()};
  values_.resize(values_.size() + s.size(), 0.0);
  slots_.push_back(std::move(s));
  return static_cast<int>(slots_.size()) - 1;
}

int ParamStore::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < slots_.size(); ++i)
    if (slots_[i].name == name) return static_cast<int>(i);
  return -1;
}

Eigen::Map<Matrix> ParamStore::view(std::span<double> buffer, int id) const {
  const auto& s = slot(id);
  if (buffer.size() != values_.size()) throw InvalidArgument("ParamStore: buffer layout mismatch");
  return {buffer.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Matrix> ParamStore::view(std::span<const double> buffer, int id) const {
  const auto& s = slot(id);
  if (buffer.size() != values_.size()) throw InvalidArgument("ParamStore: buffer layout mismatch");
  return {buffer.data() + s.offset, s.rows, s.cols};
}

double activate(Activation act, double x) noexcept {
  switch (act) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::identity:
      break;
  }
  return x;
}

double activate_grad(Activation act, double x) noexcept {
  switch (act) {
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::identity:
      break;
  }
  return 1.0;
}

FeedForward::FeedForward(ParamStore& store, const std::string& prefix, int in, int hidden, int out)
    : w1_(store.add(prefix + ".w1", hidden, in)),
      b1_(store.add(prefix + ".b1", hidden, 1)),
      w2_(store.add(prefix + ".w2", out, hidden)),
      b2_(store.add(prefix + ".b2", out, 1)),
      in_(in),
      hidden_(hidden),
      out_(out) {}

void FeedForward::initialize(ParamStore& store, Rng& rng) const {
  auto fill = [&](int id, int fan_in) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
    auto w = store(id);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  };
  fill(w1_, in_);
  fill(w2_, hidden_);
  store(b1_).setZero();
  store(b2_).setZero();
}

Vector FeedForward::forward(const ParamStore& store, const Vector& x, double dropout, Rng* rng, Cache* cache) const {
  if (x.size() != in_) throw InvalidArgument("FeedForward: input width mismatch");
  Vector pre = store(w1_) * x + store(b1_).col(0);
  Vector hidden = pre.cwiseMax(0.0);
  Vector mask = Vector::Ones(hidden_);
  if (rng && dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - dropout);
    for (int i = 0; i < hidden_; ++i) mask[i] = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
    hidden.array() *= mask.array();
  }
  Vector y = store(w2_) * hidden + store(b2_).col(0);
  if (cache) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->mask = std::move(mask);
  }
  return y;
}

Vector FeedForward::backward(const ParamStore& store, const Cache& cache, const Vector& dy,
                             std::span<double> grads) const {
  store.view(grads, w2_).noalias() += dy * cache.hidden.transpose();
  store.view(grads, b2_).col(0) += dy;
  Vector dh = store(w2_).transpose() * dy;
  for (int i = 0; i < hidden_; ++i) dh[i] *= cache.pre[i] > 0.0 ? cache.mask[i] : 0.0;
  store.view(grads, w1_).noalias() += dh * cache.input.transpose();
  store.view(grads, b1_).col(0) += dh;
  return store(w1_).transpose() * dh;
}

void FeedForward::append_signature(const Cache& cache, std::vector<std::uint8_t>& sig) {
  for (Eigen::Index i = 0; i < cache.pre.size(); ++i) sig.push_back(cache.pre[i] > 0.0 ? 1 : 0);
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw InvalidArgument("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * grads[i];
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * grads[i] * grads[i];
    params[i] -= opts_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + opts_.eps);
  }
}

}  // namespace mose
