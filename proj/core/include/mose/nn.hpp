#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mose/graph.hpp"
#include "mose/rng.hpp"

namespace mose {

/// Flat storage for every trainable tensor of a model.
///
/// Tensors are registered once and addressed by slot id; gradient buffers use
/// the same layout (one double per parameter), which keeps optimizers,
/// checkpoints and finite-difference checks oblivious to model structure.
class ParamStore {
 public:
  struct Slot {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
    std::size_t size() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  };

  int add(std::string name, int rows, int cols);
  int find(std::string_view name) const noexcept;

  const std::vector<Slot>& slots() const noexcept { return slots_; }
  const Slot& slot(int id) const { return slots_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  Eigen::Map<Matrix> operator()(int id) { return view(std::span<double>(values_), id); }
  Eigen::Map<const Matrix> operator()(int id) const { return view(std::span<const double>(values_), id); }

  /// Views slot `id` inside any buffer that shares this layout.
  Eigen::Map<Matrix> view(std::span<double> buffer, int id) const;
  Eigen::Map<const Matrix> view(std::span<const double> buffer, int id) const;

  std::vector<double> zeros() const { return std::vector<double>(values_.size(), 0.0); }

 private:
  std::vector<Slot> slots_;
  std::vector<double> values_;
};

enum class Activation { relu, tanh, identity };

double activate(Activation act, double x) noexcept;
double activate_grad(Activation act, double x) noexcept;

/// Linear -> ReLU -> dropout -> Linear.
class FeedForward {
 public:
  struct Cache {
    Vector input;
    Vector pre;      ///< first-layer pre-activation
    Vector hidden;   ///< after ReLU and dropout
    Vector mask;     ///< dropout scale per hidden unit (0 or 1/(1-rate))
  };

  FeedForward() = default;
  FeedForward(ParamStore& store, const std::string& prefix, int in, int hidden, int out);

  int in_dim() const noexcept { return in_; }
  int out_dim() const noexcept { return out_; }

  /// He-normal weights, zero biases.
  void initialize(ParamStore& store, Rng& rng) const;

  /// `rng` == nullptr disables dropout.
  Vector forward(const ParamStore& store, const Vector& x, double dropout, Rng* rng, Cache* cache) const;

  /// Accumulates parameter gradients into `grads` and returns d(input).
  Vector backward(const ParamStore& store, const Cache& cache, const Vector& dy, std::span<double> grads) const;

  /// Bit pattern of the ReLU branch taken per hidden unit, for kink detection.
  static void append_signature(const Cache& cache, std::vector<std::uint8_t>& sig);

 private:
  int w1_ = -1, b1_ = -1, w2_ = -1, b2_ = -1;
  int in_ = 0, hidden_ = 0, out_ = 0;
};

/// Adam with bias correction.
class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(std::size_t size, Options opts) : opts_(opts), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads);
  std::int64_t steps() const noexcept { return t_; }
  const Options& options() const noexcept { return opts_; }

 private:
  Options opts_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace mose
