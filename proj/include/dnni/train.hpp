#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dnni/expr.hpp"
#include "dnni/net.hpp"

namespace dnni {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// One input of the network: the integration variable (always first) or a
/// parameter, with its sampling interval.
struct Axis {
  std::string name;
  Interval domain;
};

enum class Sampling { uniform_grid, uniform_random };

struct TrainConfig {
  std::vector<Axis> axes;                 // axes[0] is the integration variable
  std::vector<std::size_t> points_per_axis;  // one entry per axis
  Sampling sampling = Sampling::uniform_grid;
  std::vector<int> hidden = {10, 10};
  Activation activation = Activation::tanh;
  long epochs = 10000;
  double lr0 = 1e-2;
  double lr_decay_factor = 0.5;
  int lr_stages = 5;
  std::uint64_t seed = 42;
  /// Train on inputs mapped to [-1, 1] and unit-RMS targets, then fold the
  /// affine maps back into the first and last layers.
  bool normalize = true;
  unsigned threads = 0;  // 0: hardware concurrency
  /// Called every `progress_interval` epochs with (epoch, loss, lr).
  std::function<void(long, double, double)> progress;
  long progress_interval = 1000;

  std::vector<int> layer_sizes() const;
  std::vector<std::string> variables() const;
  std::size_t total_points() const;
  /// Throws ConfigError on an invalid configuration.
  void validate() const;
};

/// Sampled points, one row of `width` values per point, plus the integrand
/// value at each point.
struct TrainingSet {
  std::size_t width = 0;
  std::vector<double> inputs;  // size() * width, point-major
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  std::span<const double> point(std::size_t i) const { return {inputs.data() + i * width, width}; }
};

struct AdamState {
  Gradient m;
  Gradient v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(const Network& net);
};

struct TrainReport {
  std::vector<double> loss_history;
  double final_loss = 0.0;  // loss of the returned network
  long best_epoch = 0;
  double seconds = 0.0;
  long epochs_run = 0;
};

struct TrainResult {
  Network net;
  TrainReport report;
};

/// Evenly spaced grid (endpoints included, flattened with the last axis
/// varying fastest) or seeded i.i.d. uniform points. Points where the
/// integrand is undefined are nudged inward by 1e-9 of the axis width once
/// and dropped if they still fail.
TrainingSet build_training_set(const Expr& f, const TrainConfig& cfg);

/// Mean squared mismatch between ∂N/∂x (axis 0) and the targets.
double loss(const Network& net, const TrainingSet& ts);

struct LossGradient {
  double loss;
  Gradient grad;
};

/// Loss and its exact parameter gradient. Points are processed in fixed
/// chunks whose partial sums are reduced pairwise in a fixed order, so the
/// result is bit-identical for any thread count.
LossGradient loss_gradient(const Network& net, const TrainingSet& ts, unsigned threads = 1);

/// Bias-corrected Adam update. Throws DivergenceError on non-finite entries.
void adam_step(Network& net, AdamState& state, const Gradient& grad, double lr);

/// lr0 · factor^floor(epoch / ceil(epochs / stages)).
double schedule_lr(const TrainConfig& cfg, long epoch);

/// Full-batch Adam on the derivative-matching loss. Returns the network with
/// the lowest recorded loss.
TrainResult train(const Expr& f, const TrainConfig& cfg);
TrainResult train(const Expr& f, const TrainConfig& cfg, const TrainingSet& ts);

}  // namespace dnni
