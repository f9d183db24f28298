#include "dnni/net.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "dnni/errors.hpp"

namespace dnni {

namespace {

std::atomic<std::uint64_t> g_version{1};

std::uint64_t next_version() { return g_version.fetch_add(1, std::memory_order_relaxed); }

// σ, σ' and σ'' expressed through the activation value s = σ(z).
struct Derivs {
  Eigen::ArrayXXd d1;
  Eigen::ArrayXXd d2;
};

Eigen::ArrayXXd activate(Activation act, const Eigen::ArrayXXd& z) {
  if (act == Activation::tanh) return z.tanh();
  return 1.0 / (1.0 + (-z).exp());
}

Derivs derivatives(Activation act, const Eigen::ArrayXXd& s) {
  Derivs d;
  if (act == Activation::tanh) {
    d.d1 = 1.0 - s.square();
    d.d2 = -2.0 * s * d.d1;
  } else {
    d.d1 = s * (1.0 - s);
    d.d2 = d.d1 * (1.0 - 2.0 * s);
  }
  return d;
}

void check_inputs(const Network& net, std::span<const double> inputs) {
  if (inputs.size() != net.input_width())
    throw ShapeError("expected " + std::to_string(net.input_width()) + " inputs, got " +
                     std::to_string(inputs.size()));
}

void check_tape(const Network& net, const Tape& tape) {
  if (tape.version != net.version() || tape.layer_sizes != net.layer_sizes())
    throw ShapeError("stale tape: network changed since the tape was recorded");
}

// Hidden-layer pass shared by forward and input_partial.
Tape record(const Network& net, std::span<const double> inputs, bool with_partial, std::size_t axis) {
  Tape tape;
  tape.version = net.version();
  tape.layer_sizes = net.layer_sizes();
  tape.input = Eigen::Map<const Eigen::VectorXd>(inputs.data(), static_cast<Eigen::Index>(inputs.size()));
  tape.axis = axis;
  tape.has_partial = with_partial;
  const std::size_t hidden = net.num_layers() - 1;
  Eigen::VectorXd a = tape.input;
  Eigen::VectorXd d;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::VectorXd z = net.weights(l) * a + net.biases(l);
    Eigen::VectorXd s = activate(net.activation(), z.array()).matrix();
    if (with_partial) {
      Eigen::VectorXd dz = l == 0 ? Eigen::VectorXd(net.weights(0).col(static_cast<Eigen::Index>(axis)))
                                  : Eigen::VectorXd(net.weights(l) * d);
      d = (derivatives(net.activation(), s.array()).d1 * dz.array()).matrix();
      tape.dpre.push_back(std::move(dz));
    }
    tape.pre.push_back(std::move(z));
    tape.post.push_back(s);
    a = std::move(s);
  }
  return tape;
}

double output_value(const Network& net, const Tape& tape) {
  const std::size_t out = net.num_layers() - 1;
  const Eigen::VectorXd& a = tape.post.empty() ? tape.input : tape.post.back();
  return net.weights(out).row(0).dot(a) + net.biases(out)(0);
}

Eigen::VectorXd hidden_partial(const Network& net, const Tape& tape, std::size_t h) {
  Eigen::ArrayXd d1 = derivatives(net.activation(), tape.post[h].array()).d1.col(0);
  return (d1 * tape.dpre[h].array()).matrix();
}

}  // namespace

std::string_view activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "sigmoid"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh or sigmoid)");
}

Network::Network(std::vector<int> layer_sizes, Activation activation, std::vector<Eigen::MatrixXd> weights,
                 std::vector<Eigen::VectorXd> biases)
    : sizes_(std::move(layer_sizes)),
      activation_(activation),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      version_(next_version()) {
  if (sizes_.size() < 2) throw ShapeError("a network needs at least an input and an output layer");
  for (int s : sizes_)
    if (s <= 0) throw ShapeError("layer widths must be positive");
  if (sizes_.back() != 1) throw ShapeError("output layer must have width 1");
  if (weights_.size() != sizes_.size() - 1 || biases_.size() != sizes_.size() - 1)
    throw ShapeError("layer count does not match layer_sizes");
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l].rows() != sizes_[l + 1] || weights_[l].cols() != sizes_[l])
      throw ShapeError("weight matrix " + std::to_string(l) + " has wrong shape");
    if (biases_[l].size() != sizes_[l + 1])
      throw ShapeError("bias vector " + std::to_string(l) + " has wrong length");
    if (!weights_[l].allFinite() || !biases_[l].allFinite())
      throw ShapeError("non-finite parameter in layer " + std::to_string(l));
  }
}

Network Network::init(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ShapeError("a network needs at least an input and an output layer");
  for (int s : layer_sizes)
    if (s <= 0) throw ShapeError("layer widths must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd m(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        m(r, c) = (2.0 * u - 1.0) * limit;
      }
    w.push_back(std::move(m));
    b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return Network(std::move(layer_sizes), activation, std::move(w), std::move(b));
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

bool Network::identical(const Network& other) const {
  if (sizes_ != other.sizes_ || activation_ != other.activation_) return false;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (std::memcmp(weights_[l].data(), other.weights_[l].data(),
                    sizeof(double) * static_cast<std::size_t>(weights_[l].size())) != 0)
      return false;
    if (std::memcmp(biases_[l].data(), other.biases_[l].data(),
                    sizeof(double) * static_cast<std::size_t>(biases_[l].size())) != 0)
      return false;
  }
  return true;
}

void Network::touch() { version_ = next_version(); }

Gradient Gradient::zeros_like(const Network& net) {
  Gradient g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights(l).rows(), net.weights(l).cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases(l).size()));
  }
  return g;
}

bool Gradient::same_shape(const Gradient& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols())
      return false;
    if (biases[l].size() != other.biases[l].size()) return false;
  }
  return true;
}

bool Gradient::matches(const Network& net) const {
  if (weights.size() != net.num_layers() || biases.size() != net.num_layers()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != net.weights(l).rows() || weights[l].cols() != net.weights(l).cols()) return false;
    if (biases[l].size() != net.biases(l).size()) return false;
  }
  return true;
}

bool Gradient::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

double Gradient::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].size() > 0) m = std::max(m, weights[l].cwiseAbs().maxCoeff());
    if (biases[l].size() > 0) m = std::max(m, biases[l].cwiseAbs().maxCoeff());
  }
  return m;
}

void Gradient::axpy(double scale, const Gradient& g) {
  if (!same_shape(g)) throw ShapeError("gradient shape mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * g.weights[l];
    biases[l] += scale * g.biases[l];
  }
}

void Gradient::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

Gradient gradient_axpy(Gradient acc, double scale, const Gradient& g) {
  acc.axpy(scale, g);
  return acc;
}

Evaluation forward(const Network& net, std::span<const double> inputs) {
  check_inputs(net, inputs);
  Tape tape = record(net, inputs, false, 0);
  const double value = output_value(net, tape);
  return {value, std::move(tape)};
}

PartialEvaluation input_partial(const Network& net, std::span<const double> inputs, std::size_t axis) {
  check_inputs(net, inputs);
  if (axis >= net.input_width()) throw ShapeError("partial axis out of range");
  Tape tape = record(net, inputs, true, axis);
  const double value = output_value(net, tape);
  const std::size_t out = net.num_layers() - 1;
  double partial = 0.0;
  if (out == 0) {
    partial = net.weights(0)(0, static_cast<Eigen::Index>(axis));
  } else {
    partial = net.weights(out).row(0).dot(hidden_partial(net, tape, out - 1));
  }
  return {value, partial, std::move(tape)};
}

Gradient backward_value(const Network& net, const Tape& tape, double upstream) {
  check_tape(net, tape);
  Gradient g = Gradient::zeros_like(net);
  const std::size_t out = net.num_layers() - 1;
  const Eigen::VectorXd& last = out == 0 ? tape.input : tape.post[out - 1];
  g.weights[out].row(0) = upstream * last.transpose();
  g.biases[out](0) = upstream;
  Eigen::VectorXd abar = upstream * net.weights(out).row(0).transpose();
  for (std::size_t h = out; h-- > 0;) {
    Eigen::ArrayXd d1 = derivatives(net.activation(), tape.post[h].array()).d1.col(0);
    Eigen::VectorXd zbar = (d1 * abar.array()).matrix();
    const Eigen::VectorXd& prev = h == 0 ? tape.input : tape.post[h - 1];
    g.weights[h] = zbar * prev.transpose();
    g.biases[h] = zbar;
    if (h > 0) abar = net.weights(h).transpose() * zbar;
  }
  return g;
}

Gradient backward_partial(const Network& net, const Tape& tape, double upstream) {
  check_tape(net, tape);
  if (!tape.has_partial) throw ShapeError("tape has no input-partial chain; record it with input_partial");
  Gradient g = Gradient::zeros_like(net);
  const std::size_t out = net.num_layers() - 1;
  const auto axis = static_cast<Eigen::Index>(tape.axis);
  if (out == 0) {
    g.weights[0](0, axis) = upstream;
    return g;
  }
  g.weights[out].row(0) = upstream * hidden_partial(net, tape, out - 1).transpose();
  Eigen::VectorXd dbar = upstream * net.weights(out).row(0).transpose();
  Eigen::VectorXd abar = Eigen::VectorXd::Zero(dbar.size());
  for (std::size_t h = out; h-- > 0;) {
    Derivs dv = derivatives(net.activation(), tape.post[h].array());
    Eigen::ArrayXd d1 = dv.d1.col(0);
    Eigen::ArrayXd d2 = dv.d2.col(0);
    Eigen::VectorXd sbar = (d1 * dbar.array()).matrix();
    Eigen::VectorXd zbar = (d2 * tape.dpre[h].array() * dbar.array() + d1 * abar.array()).matrix();
    const Eigen::VectorXd& prev_a = h == 0 ? tape.input : tape.post[h - 1];
    g.weights[h] = zbar * prev_a.transpose();
    if (h == 0) {
      g.weights[0].col(axis) += sbar;
    } else {
      g.weights[h] += sbar * hidden_partial(net, tape, h - 1).transpose();
    }
    g.biases[h] = zbar;
    if (h > 0) {
      dbar = net.weights(h).transpose() * sbar;
      abar = net.weights(h).transpose() * zbar;
    }
  }
  return g;
}

namespace {

// Per-thread scratch reused across chunks; Eigen keeps the storage when the
// shape does not change.
struct BatchState {
  std::vector<Eigen::MatrixXd> post;  // σ(z_h)
  std::vector<Eigen::ArrayXXd> d1;
  std::vector<Eigen::ArrayXXd> d2;
  std::vector<Eigen::MatrixXd> dpre;   // ∂z_h/∂x_axis
  std::vector<Eigen::MatrixXd> dpost;  // ∂σ(z_h)/∂x_axis
  Eigen::RowVectorXd partial;
  Eigen::MatrixXd dbar, abar, sbar, zbar;
};

void batch_forward(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& x, std::size_t axis,
                   bool keep_second, BatchState& st) {
  if (static_cast<std::size_t>(x.rows()) != net.input_width()) throw ShapeError("batch input width mismatch");
  if (axis >= net.input_width()) throw ShapeError("partial axis out of range");
  const std::size_t out = net.num_layers() - 1;
  const Eigen::Index n = x.cols();
  st.post.resize(out);
  st.d1.resize(out);
  st.d2.resize(out);
  st.dpre.resize(out);
  st.dpost.resize(out);
  for (std::size_t h = 0; h < out; ++h) {
    Eigen::MatrixXd& s = st.post[h];
    if (h == 0) {
      s.noalias() = net.weights(0) * x;
    } else {
      s.noalias() = net.weights(h) * st.post[h - 1];
    }
    s.colwise() += net.biases(h);
    if (net.activation() == Activation::tanh) {
      s.array() = s.array().tanh();
      st.d1[h] = 1.0 - s.array().square();
      if (keep_second) st.d2[h] = -2.0 * s.array() * st.d1[h];
    } else {
      s.array() = 1.0 / (1.0 + (-s.array()).exp());
      st.d1[h] = s.array() * (1.0 - s.array());
      if (keep_second) st.d2[h] = st.d1[h] * (1.0 - 2.0 * s.array());
    }
    if (h == 0) {
      st.dpre[0] = net.weights(0).col(static_cast<Eigen::Index>(axis)).replicate(1, n);
    } else {
      st.dpre[h].noalias() = net.weights(h) * st.dpost[h - 1];
    }
    st.dpost[h] = (st.d1[h] * st.dpre[h].array()).matrix();
  }
  if (out == 0) {
    st.partial = Eigen::RowVectorXd::Constant(n, net.weights(0)(0, static_cast<Eigen::Index>(axis)));
  } else {
    st.partial.noalias() = net.weights(out) * st.dpost.back();
  }
}

BatchState& scratch() {
  thread_local BatchState st;
  return st;
}

}  // namespace

Eigen::RowVectorXd batch_partials(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                  std::size_t axis) {
  BatchState& st = scratch();
  batch_forward(net, inputs, axis, false, st);
  return st.partial;
}

Eigen::RowVectorXd batch_values(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != net.input_width())
    throw ShapeError("batch input width mismatch");
  Eigen::MatrixXd a = inputs;
  const std::size_t out = net.num_layers() - 1;
  for (std::size_t h = 0; h < out; ++h) {
    Eigen::MatrixXd z = net.weights(h) * a;
    z.colwise() += net.biases(h);
    a = activate(net.activation(), z.array()).matrix();
  }
  Eigen::RowVectorXd v = net.weights(out) * a;
  v.array() += net.biases(out)(0);
  return v;
}

double batch_partial_residual_gradient(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                       std::span<const double> targets, std::size_t axis, double weight,
                                       Gradient& grad) {
  if (static_cast<std::size_t>(inputs.cols()) != targets.size())
    throw ShapeError("batch inputs and targets differ in length");
  if (!grad.matches(net)) throw ShapeError("gradient shape does not match network");
  BatchState& st = scratch();
  batch_forward(net, inputs, axis, true, st);
  Eigen::Map<const Eigen::RowVectorXd> t(targets.data(), static_cast<Eigen::Index>(targets.size()));
  st.partial -= t;  // now the residual
  const double sumsq = st.partial.squaredNorm();
  st.partial *= 2.0 * weight;
  const Eigen::RowVectorXd& u = st.partial;

  const std::size_t out = net.num_layers() - 1;
  const auto ax = static_cast<Eigen::Index>(axis);
  if (out == 0) {
    grad.weights[0](0, ax) += u.sum();
    return sumsq;
  }
  grad.weights[out].noalias() += u * st.dpost.back().transpose();
  st.dbar.noalias() = net.weights(out).transpose() * u;
  for (std::size_t h = out; h-- > 0;) {
    st.sbar = (st.d1[h] * st.dbar.array()).matrix();
    st.zbar = (st.d2[h] * st.dpre[h].array() * st.dbar.array()).matrix();
    if (h + 1 < out) st.zbar.array() += st.d1[h] * st.abar.array();
    if (h == 0) {
      grad.weights[0].noalias() += st.zbar * inputs.transpose();
      grad.weights[0].col(ax) += st.sbar.rowwise().sum();
    } else {
      grad.weights[h].noalias() += st.zbar * st.post[h - 1].transpose();
      grad.weights[h].noalias() += st.sbar * st.dpost[h - 1].transpose();
    }
    grad.biases[h] += st.zbar.rowwise().sum();
    if (h > 0) {
      st.dbar.noalias() = net.weights(h).transpose() * st.sbar;
      st.abar.noalias() = net.weights(h).transpose() * st.zbar;
    }
  }
  return sumsq;
}

}  // namespace dnni
