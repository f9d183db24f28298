#include "dnni/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"

namespace dnni {

namespace {

constexpr std::size_t kChunk = 256;
constexpr std::size_t kMaxPoints = 10'000'000;

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Affine maps used while training: inputs to [-1, 1], targets to unit RMS.
struct Scaling {
  std::vector<double> center;
  std::vector<double> half_width;
  double output = 1.0;  // N = output · M(ξ)
};

Scaling identity_scaling(std::size_t width) {
  return {std::vector<double>(width, 0.0), std::vector<double>(width, 1.0), 1.0};
}

Scaling make_scaling(const TrainConfig& cfg, const TrainingSet& ts) {
  Scaling s;
  for (const Axis& a : cfg.axes) {
    s.center.push_back(0.5 * (a.domain.lo + a.domain.hi));
    s.half_width.push_back(0.5 * a.domain.width());
  }
  double sumsq = 0.0;
  for (double t : ts.targets) sumsq += t * t;
  const double rms = std::sqrt(sumsq / static_cast<double>(ts.size()));
  s.output = s.half_width[0] * (rms > 0.0 ? rms : 1.0);
  return s;
}

TrainingSet apply_scaling(const TrainingSet& ts, const Scaling& s) {
  TrainingSet out = ts;
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j < ts.width; ++j)
      out.inputs[i * ts.width + j] = (ts.inputs[i * ts.width + j] - s.center[j]) / s.half_width[j];
  const double k = s.half_width[0] / s.output;
  for (double& t : out.targets) t *= k;
  return out;
}

// Rewrites a network trained on scaled data as one on raw inputs.
Network fold_scaling(const Network& scaled, const Scaling& s) {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  for (std::size_t l = 0; l < scaled.num_layers(); ++l) {
    w.push_back(scaled.weights(l));
    b.push_back(scaled.biases(l));
  }
  const auto width = static_cast<Eigen::Index>(s.center.size());
  Eigen::VectorXd inv = Eigen::Map<const Eigen::VectorXd>(s.half_width.data(), width).cwiseInverse();
  Eigen::VectorXd shift = Eigen::Map<const Eigen::VectorXd>(s.center.data(), width).cwiseProduct(inv);
  b[0] -= w[0] * shift;
  w[0] = w[0] * inv.asDiagonal();
  w.back() *= s.output;
  b.back() *= s.output;
  return Network(scaled.layer_sizes(), scaled.activation(), std::move(w), std::move(b));
}

void check_width(const Network& net, const TrainingSet& ts) {
  if (ts.size() == 0) throw ShapeError("empty training set");
  if (ts.width != net.input_width())
    throw ShapeError("training points have width " + std::to_string(ts.width) + " but the network takes " +
                     std::to_string(net.input_width()));
}

Eigen::Map<const Eigen::MatrixXd> chunk_inputs(const TrainingSet& ts, std::size_t begin, std::size_t count) {
  return {ts.inputs.data() + begin * ts.width, static_cast<Eigen::Index>(ts.width),
          static_cast<Eigen::Index>(count)};
}

}  // namespace

std::vector<int> TrainConfig::layer_sizes() const {
  std::vector<int> sizes{static_cast<int>(axes.size())};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

std::vector<std::string> TrainConfig::variables() const {
  std::vector<std::string> names;
  for (const Axis& a : axes) names.push_back(a.name);
  return names;
}

std::size_t TrainConfig::total_points() const {
  std::size_t n = 1;
  for (std::size_t p : points_per_axis) {
    if (p != 0 && n > kMaxPoints / p) return kMaxPoints + 1;
    n *= p;
  }
  return n;
}

void TrainConfig::validate() const {
  if (axes.empty()) throw ConfigError("no axes configured");
  if (points_per_axis.size() != axes.size())
    throw ConfigError("points_per_axis needs one entry per axis");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const Axis& a = axes[i];
    if (!(a.domain.lo < a.domain.hi) || !std::isfinite(a.domain.lo) || !std::isfinite(a.domain.hi))
      throw ConfigError("axis '" + a.name + "' needs lo < hi, got [" + format_double(a.domain.lo) + ", " +
                        format_double(a.domain.hi) + "]");
    if (points_per_axis[i] == 0) throw ConfigError("axis '" + a.name + "' has zero points");
    for (std::size_t j = 0; j < i; ++j)
      if (axes[j].name == a.name) throw ConfigError("duplicate axis '" + a.name + "'");
  }
  if (total_points() > kMaxPoints) throw ConfigError("more than 1e7 training points");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("hidden layer widths must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("lr_decay_factor must be positive");
  if (lr_stages < 1) throw ConfigError("lr_stages must be at least 1");
}

AdamState AdamState::fresh(const Network& net) {
  AdamState s;
  s.m = Gradient::zeros_like(net);
  s.v = Gradient::zeros_like(net);
  return s;
}

TrainingSet build_training_set(const Expr& f, const TrainConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> names = cfg.variables();
  for (const std::string& v : f.free_vars())
    if (std::find(names.begin(), names.end(), v) == names.end())
      throw ConfigError("integrand uses '" + v + "' which has no --domain");
  const CompiledExpr fn(f, names);
  const std::size_t width = cfg.axes.size();
  const std::size_t total = cfg.total_points();

  TrainingSet ts;
  ts.width = width;
  ts.inputs.reserve(total * width);
  ts.targets.reserve(total);

  auto add_point = [&](std::vector<double>& p) {
    try {
      ts.targets.push_back(fn(p));
      ts.inputs.insert(ts.inputs.end(), p.begin(), p.end());
      return;
    } catch (const DomainError&) {
    }
    bool moved = false;
    for (std::size_t j = 0; j < width; ++j) {
      const Interval& d = cfg.axes[j].domain;
      const double delta = 1e-9 * d.width();
      if (p[j] <= d.lo) {
        p[j] = d.lo + delta;
        moved = true;
      } else if (p[j] >= d.hi) {
        p[j] = d.hi - delta;
        moved = true;
      }
    }
    if (!moved) {
      const Interval& d = cfg.axes[0].domain;
      const double delta = 1e-9 * d.width();
      p[0] = p[0] + delta <= d.hi ? p[0] + delta : p[0] - delta;
    }
    try {
      ts.targets.push_back(fn(p));
      ts.inputs.insert(ts.inputs.end(), p.begin(), p.end());
    } catch (const DomainError&) {
    }
  };

  std::vector<double> p(width);
  if (cfg.sampling == Sampling::uniform_grid) {
    std::vector<std::vector<double>> ticks(width);
    for (std::size_t j = 0; j < width; ++j) {
      const Interval& d = cfg.axes[j].domain;
      const std::size_t n = cfg.points_per_axis[j];
      for (std::size_t i = 0; i < n; ++i) {
        if (n == 1) {
          ticks[j].push_back(d.lo);
        } else if (i + 1 == n) {
          ticks[j].push_back(d.hi);
        } else {
          ticks[j].push_back(d.lo + d.width() * static_cast<double>(i) / static_cast<double>(n - 1));
        }
      }
    }
    std::vector<std::size_t> idx(width, 0);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t j = 0; j < width; ++j) p[j] = ticks[j][idx[j]];
      add_point(p);
      for (std::size_t j = width; j-- > 0;) {
        if (++idx[j] < cfg.points_per_axis[j]) break;
        idx[j] = 0;
      }
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t j = 0; j < width; ++j) {
        const Interval& d = cfg.axes[j].domain;
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        p[j] = d.lo + u * d.width();
      }
      add_point(p);
    }
  }
  if (ts.size() == 0) throw DomainError("integrand is undefined at every training point");
  return ts;
}

double loss(const Network& net, const TrainingSet& ts) {
  check_width(net, ts);
  double total = 0.0;
  for (std::size_t begin = 0; begin < ts.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, ts.size() - begin);
    Eigen::RowVectorXd p = batch_partials(net, chunk_inputs(ts, begin, count), 0);
    for (std::size_t i = 0; i < count; ++i) {
      const double r = p(static_cast<Eigen::Index>(i)) - ts.targets[begin + i];
      total += r * r;
    }
  }
  return total / static_cast<double>(ts.size());
}

LossGradient loss_gradient(const Network& net, const TrainingSet& ts, unsigned threads) {
  check_width(net, ts);
  const std::size_t chunks = (ts.size() + kChunk - 1) / kChunk;
  const double weight = 1.0 / static_cast<double>(ts.size());
  std::vector<Gradient> grads(chunks, Gradient::zeros_like(net));
  std::vector<double> sums(chunks, 0.0);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t c = first; c < chunks; c += stride) {
      const std::size_t begin = c * kChunk;
      const std::size_t count = std::min(kChunk, ts.size() - begin);
      sums[c] = batch_partial_residual_gradient(net, chunk_inputs(ts, begin, count),
                                                {ts.targets.data() + begin, count}, 0, weight, grads[c]);
    }
  };
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), chunks);
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  for (std::size_t stride = 1; stride < chunks; stride *= 2)
    for (std::size_t i = 0; i + stride < chunks; i += 2 * stride) {
      grads[i].axpy(1.0, grads[i + stride]);
      sums[i] += sums[i + stride];
    }
  return {sums[0] * weight, std::move(grads[0])};
}

void adam_step(Network& net, AdamState& state, const Gradient& grad, double lr) {
  if (!grad.matches(net) || !state.m.matches(net) || !state.v.matches(net))
    throw ShapeError("optimizer state does not match the network");
  if (!grad.all_finite()) throw DivergenceError("non-finite gradient entry", state.t);
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.mutable_weights(l), state.m.weights[l], state.v.weights[l], grad.weights[l]);
    update(net.mutable_biases(l), state.m.biases[l], state.v.biases[l], grad.biases[l]);
  }
}

double schedule_lr(const TrainConfig& cfg, long epoch) {
  const long stage = (cfg.epochs + cfg.lr_stages - 1) / cfg.lr_stages;
  return cfg.lr0 * std::pow(cfg.lr_decay_factor, static_cast<double>(epoch / std::max(1L, stage)));
}

TrainResult train(const Expr& f, const TrainConfig& cfg) { return train(f, cfg, build_training_set(f, cfg)); }

TrainResult train(const Expr& /*f*/, const TrainConfig& cfg, const TrainingSet& ts) {
  cfg.validate();
  if (ts.width != cfg.axes.size()) throw ShapeError("training set width does not match the configured axes");
  if (ts.size() == 0) throw ShapeError("empty training set");
  const auto start = std::chrono::steady_clock::now();

  const Scaling scaling = cfg.normalize ? make_scaling(cfg, ts) : identity_scaling(ts.width);
  const TrainingSet scaled = cfg.normalize ? apply_scaling(ts, scaling) : ts;
  // loss in raw units = loss in scaled units · (output / half_width_x)^2
  const double loss_factor = std::pow(scaling.output / scaling.half_width[0], 2);

  Network net = Network::init(cfg.layer_sizes(), cfg.activation, cfg.seed);
  AdamState state = AdamState::fresh(net);
  Network best = net;
  double best_loss = std::numeric_limits<double>::infinity();
  TrainReport report;
  report.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_lr(cfg, epoch);
    LossGradient lg = loss_gradient(net, scaled, cfg.threads);
    const double l = lg.loss * loss_factor;
    if (!std::isfinite(l)) throw DivergenceError("loss became non-finite", epoch);
    report.loss_history.push_back(l);
    if (l < best_loss) {
      best_loss = l;
      best = net;
      report.best_epoch = epoch;
    }
    if (cfg.progress && (epoch % std::max(1L, cfg.progress_interval) == 0 || epoch + 1 == cfg.epochs))
      cfg.progress(epoch, l, lr);
    try {
      adam_step(net, state, lg.grad, lr);
    } catch (const DivergenceError&) {
      throw DivergenceError("non-finite gradient entry", epoch);
    }
  }

  Network out = cfg.normalize ? fold_scaling(best, scaling) : best;
  report.epochs_run = cfg.epochs;
  report.final_loss = loss(out, ts);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(out), std::move(report)};
}

}  // namespace dnni
