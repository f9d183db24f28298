#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dnni/expr.hpp"
#include "dnni/net.hpp"
#include "dnni/train.hpp"

namespace dnni {

/// A result together with whether any input fell outside the training
/// domain. Values outside it are network extrapolation and not trustworthy.
struct Evaluated {
  double value = 0.0;
  bool out_of_domain = false;
};

struct TrainingSummary {
  std::uint64_t seed = 0;
  long epochs = 0;
  double final_loss = 0.0;
};

class ClosedForm;

/// Trained network N(x, p...) with ∂N/∂x ≈ f, anchored so that
/// value(x0, p) == 0. Immutable; safe to evaluate concurrently.
class Antiderivative {
 public:
  Antiderivative(Network net, std::vector<std::string> variables, double anchor, std::vector<Interval> domain,
                 std::string integrand, std::optional<double> zeta = std::nullopt, TrainingSummary summary = {});

  /// Trains on `f` with `cfg` and anchors at `anchor`.
  static Antiderivative fit(const Expr& f, const TrainConfig& cfg, double anchor,
                            std::optional<double> zeta = std::nullopt, TrainReport* report = nullptr);

  /// N(x, p) - N(x0, p).
  Evaluated value(double x, const Bindings& params = {}) const;

  /// N(upper, p) - N(lower, p).
  Evaluated definite(double lower, double upper, const Bindings& params = {}) const;

  /// F(p) = N(upper, p) - N(lower, p) as a standalone callable.
  ClosedForm closed_form(double lower, double upper) const;

  /// The raw network output at a full input vector (x first).
  double network_value(std::span<const double> inputs) const;

  const Network& network() const { return net_; }
  const std::vector<std::string>& variables() const { return variables_; }
  std::vector<std::string> parameters() const { return {variables_.begin() + 1, variables_.end()}; }
  double anchor() const { return anchor_; }
  const std::vector<Interval>& domain() const { return domain_; }
  const std::string& integrand() const { return integrand_; }
  std::optional<double> zeta() const { return zeta_; }
  const TrainingSummary& summary() const { return summary_; }

  std::string to_json() const;
  static Antiderivative from_json(const std::string& text);
  void save(const std::string& path) const;
  static Antiderivative load(const std::string& path);

 private:
  std::vector<double> inputs_for(double x, const Bindings& params, bool& out_of_domain) const;

  Network net_;
  std::vector<std::string> variables_;
  double anchor_;
  std::vector<Interval> domain_;
  std::string integrand_;
  std::optional<double> zeta_;
  TrainingSummary summary_;
};

/// Definite integral over fixed limits as a function of the parameters.
class ClosedForm {
 public:
  ClosedForm(std::shared_ptr<const Antiderivative> ad, double lower, double upper)
      : ad_(std::move(ad)), lower_(lower), upper_(upper) {}

  Evaluated operator()(const Bindings& params) const { return ad_->definite(lower_, upper_, params); }
  /// Parameters in the model's order (variables after x).
  Evaluated operator()(std::span<const double> params) const;

  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  std::shared_ptr<const Antiderivative> ad_;
  double lower_;
  double upper_;
};

}  // namespace dnni
