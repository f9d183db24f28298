#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dnni/galerkin.hpp"
#include "dnni/integral.hpp"
#include "dnni/train.hpp"

namespace dnni {

enum class TruthKind { analytic, quadrature, ode };

std::string_view truth_kind_name(TruthKind k);

/// A definite-integral value reported in the literature for one parameter
/// setting, with the relative error reported alongside it when there is one.
struct PublishedValue {
  std::vector<double> params;  // in the order of CaseSpec::row_params
  double value = 0.0;
  std::optional<double> reported_rel_error;
  std::string source;  // where the value was reported
};

struct CaseSpec {
  int id = 0;
  std::string variant;  // empty for the main setup of a case
  std::string title;
  std::string integrand;  // empty for Galerkin cases
  TrainConfig config;     // default training setup
  double anchor = 0.0;
  double lower = 0.0;  // limits of the reported definite integrals
  double upper = 1.0;
  /// Upper limit depending on the parameters (Fermi-Dirac cutoff η + ζ).
  std::function<double(std::span<const double>)> upper_of;
  std::optional<double> zeta;
  TruthKind truth_kind = TruthKind::analytic;
  /// ∫_anchor^x f for single-variable cases, u(x) for Galerkin cases.
  std::function<double(double)> truth;
  std::vector<std::string> row_params;
  std::vector<PublishedValue> published;
  /// Train one single-variable model per published row with the row's
  /// parameters substituted into the integrand.
  bool model_per_row = false;
  std::optional<GalerkinProblem> galerkin;

  bool parametric() const { return model_per_row || config.axes.size() > 1; }
  double upper_limit(std::span<const double> params) const { return upper_of ? upper_of(params) : upper; }
};

/// Cases 1-15 in their main setup.
const std::vector<CaseSpec>& registry();

/// Throws ConfigError for an unknown id or variant.
const CaseSpec& find_case(int id, std::string_view variant = {});

/// Variant names available for a case, the main setup ("") first.
std::vector<std::string> case_variants(int id);

/// ∫_0^x t·sin(t^-10) dt and ∫_0^x sin(1/t)/(1+t) dt. Near zero the tail is
/// the asymptotic series of ∫_X^∞ g(s)·sin(s) ds after substituting the
/// oscillation phase; beyond the switch point adaptive quadrature adds the rest.
double oscillatory_primitive_x_sin(double x);
double oscillatory_primitive_sin_over(double x);

/// Definite integral of the case integrand with the given parameters by
/// adaptive quadrature (tol 1e-12).
double quadrature_oracle(const CaseSpec& spec, std::span<const double> params, double lower, double upper);

/// sqrt(Σ(pred - truth)²); no normalisation.
double l2_error(std::span<const double> pred, std::span<const double> truth);

struct ErrorReport {
  double l2 = 0.0;
  double max_abs = 0.0;
  /// Pointwise |error| / max(|truth|, 1e-3·‖truth‖∞).
  double max_rel = 0.0;
  std::size_t points = 0;
  std::string csv_path;
};

ErrorReport error_report(std::span<const double> pred, std::span<const double> truth);

struct RowResult {
  std::vector<double> params;
  double prediction = 0.0;
  double oracle = 0.0;
  double published = 0.0;
  std::optional<double> reported_rel_error;
  double rel_error_vs_oracle = 0.0;
  bool out_of_domain = false;
};

struct RunOptions {
  std::string variant;
  std::optional<std::size_t> points;  // x axis
  std::optional<std::vector<std::size_t>> points_per_axis;
  std::optional<std::vector<int>> hidden;
  std::optional<long> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<Activation> activation;
  std::optional<Sampling> sampling;
  std::optional<double> lr0;
  unsigned threads = 0;
  std::size_t grid_points = 1000;
  std::optional<int> nodes;  // Galerkin node count
  std::string csv_path;      // written when not empty
  std::string cache_dir;     // trained models are reused from here when set
  std::function<void(const std::string&)> log;
  std::function<void(long, double, double)> progress;
  long progress_interval = 1000;
};

struct CaseResult {
  int id = 0;
  std::string variant;
  std::uint64_t seed = 0;
  ErrorReport error;  // Galerkin: the dnni strategy
  std::optional<ErrorReport> quadrature_error;  // Galerkin only
  std::vector<RowResult> rows;
  std::vector<Antiderivative> models;
  std::vector<TrainReport> training;
  std::string csv;
  double seconds = 0.0;
};

/// The training setup run_case would use.
TrainConfig effective_config(const CaseSpec& spec, const RunOptions& options);

/// Trains (or loads from the cache) the case's model(s), evaluates them on a
/// uniform grid over the x domain or at the published parameter rows, and
/// compares with the truth oracle. Galerkin cases solve with both load
/// strategies.
CaseResult run_case(int id, const RunOptions& options = {});

enum class StudyAxis { points, epochs };

struct ConvergenceRow {
  double value = 0.0;
  double l2 = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  /// Last l2 below the first; unset for fewer than two rows.
  std::optional<bool> decreased;
};

/// One run per value with everything else fixed. Needs a case with an
/// analytic truth.
ConvergenceStudy convergence_study(int id, StudyAxis axis, const std::vector<double>& values,
                                   const RunOptions& base = {});

}  // namespace dnni
