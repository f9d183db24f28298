#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dnni {

enum class Activation { tanh, sigmoid };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected feed-forward network with one linear output:
///
///   N(x) = W_L σ(W_{L-1} σ(... σ(W_1 x + b_1) ...) + b_{L-1}) + b_L
///
/// Weights are stored out×in per layer. Every mutation bumps `version()`,
/// which invalidates tapes recorded against the previous parameters.
class Network {
 public:
  Network(std::vector<int> layer_sizes, Activation activation, std::vector<Eigen::MatrixXd> weights,
          std::vector<Eigen::VectorXd> biases);

  /// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
  /// The generator is std::mt19937_64 seeded with `seed`; each weight takes
  /// the top 53 bits of one draw, u = (draw >> 11) * 2^-53, and maps it to
  /// (2u - 1) * limit. Weights are filled layer by layer, row-major.
  static Network init(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_width() const { return static_cast<std::size_t>(sizes_.front()); }
  std::size_t parameter_count() const;

  const Eigen::MatrixXd& weights(std::size_t layer) const { return weights_[layer]; }
  const Eigen::VectorXd& biases(std::size_t layer) const { return biases_[layer]; }

  Eigen::MatrixXd& mutable_weights(std::size_t layer) {
    touch();
    return weights_[layer];
  }
  Eigen::VectorXd& mutable_biases(std::size_t layer) {
    touch();
    return biases_[layer];
  }

  std::uint64_t version() const { return version_; }

  /// Bit-exact equality of shapes, activation and parameters.
  bool identical(const Network& other) const;

 private:
  void touch();

  std::vector<int> sizes_;
  Activation activation_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  std::uint64_t version_;
};

/// Intermediates of one evaluation, consumed by the reverse passes.
struct Tape {
  std::uint64_t version = 0;
  std::vector<int> layer_sizes;
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;   // z_l, hidden layers only
  std::vector<Eigen::VectorXd> post;  // σ(z_l), hidden layers only
  std::vector<Eigen::VectorXd> dpre;  // ∂z_l/∂x_axis, present after input_partial
  std::size_t axis = 0;
  bool has_partial = false;
};

struct Evaluation {
  double value;
  Tape tape;
};

struct PartialEvaluation {
  double value;
  double partial;
  Tape tape;
};

/// Parameter-shaped buffer of derivatives.
class Gradient {
 public:
  Gradient() = default;
  static Gradient zeros_like(const Network& net);

  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  bool same_shape(const Gradient& other) const;
  bool matches(const Network& net) const;
  bool all_finite() const;
  double max_abs() const;
  /// this += scale * g
  void axpy(double scale, const Gradient& g);
  void set_zero();
};

/// acc + scale * g.
Gradient gradient_axpy(Gradient acc, double scale, const Gradient& g);

Evaluation forward(const Network& net, std::span<const double> inputs);

/// Value plus the exact partial derivative with respect to inputs[axis].
PartialEvaluation input_partial(const Network& net, std::span<const double> inputs, std::size_t axis);

/// ∂(upstream · N)/∂θ.
Gradient backward_value(const Network& net, const Tape& tape, double upstream);

/// ∂(upstream · ∂N/∂x_axis)/∂θ. Requires a tape from input_partial.
Gradient backward_partial(const Network& net, const Tape& tape, double upstream);

/// Batched input-partial evaluation. `inputs` holds one point per column.
Eigen::RowVectorXd batch_partials(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                  std::size_t axis);

/// Batched value evaluation. `inputs` holds one point per column.
Eigen::RowVectorXd batch_values(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// Sum of squared residuals r_i = ∂N/∂x_axis(p_i) - t_i over the batch, and
/// `grad += weight * Σ 2 r_i ∂(∂N/∂x_axis)(p_i)/∂θ`.
double batch_partial_residual_gradient(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                       std::span<const double> targets, std::size_t axis, double weight,
                                       Gradient& grad);

}  // namespace dnni
