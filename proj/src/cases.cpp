#include "dnni/cases.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"
#include "dnni/quadrature.hpp"

namespace dnni {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOracleTol = 1e-12;

// ∫_X^∞ g(s) e^{is} ds = -e^{iX} Σ_k c_k / i^{k+1} with c_k = (-1)^k g^(k)(X).
// The series is asymptotic; stop once the terms stop shrinking.
template <typename Coeff>
double oscillatory_tail(double X, Coeff coeff) {
  std::complex<double> sum = 0.0;
  std::complex<double> ipow(0.0, 1.0);  // i^{k+1}
  double last = INFINITY;
  for (int k = 0; k < 60; ++k) {
    const double c = coeff(k);
    if (!(std::fabs(c) < last)) break;
    sum += c / ipow;
    last = std::fabs(c);
    if (last < 1e-30 * std::abs(sum)) break;
    ipow *= std::complex<double>(0.0, 1.0);
  }
  return (-std::exp(std::complex<double>(0.0, X)) * sum).imag();
}

// t·sin(t^-10): s = t^-10 turns ∫_0^x into (1/10)∫_X^∞ s^{-6/5} sin s ds.
double x_sin_series(double x) {
  const double X = std::pow(x, -10.0);
  const double a = 1.2;
  double rising = 1.0;  // (a)_k
  int seen = -1;
  return 0.1 * oscillatory_tail(X, [&](int k) {
           for (; seen < k; ++seen)
             if (seen >= 0) rising *= a + seen;
           return rising * std::pow(X, -a - k);
         });
}

// sin(1/t)/(1+t): s = 1/t gives ∫_X^∞ sin s / (s(s+1)) ds.
double sin_over_series(double x) {
  const double X = 1.0 / x;
  double fact = 1.0;
  int seen = 0;
  return oscillatory_tail(X, [&](int k) {
    for (; seen < k; ++seen) fact *= seen + 1;
    if (k == 0) return 1.0 / (X * (X + 1.0));
    return fact * (std::pow(X, -k - 1.0) - std::pow(X + 1.0, -k - 1.0));
  });
}

constexpr double kXSinSwitch = 0.5;
constexpr double kSinOverSwitch = 0.02;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

TrainConfig single_axis(double lo, double hi, std::size_t points, std::vector<int> hidden, long epochs) {
  TrainConfig cfg;
  cfg.axes = {{"x", {lo, hi}}};
  cfg.points_per_axis = {points};
  cfg.hidden = std::move(hidden);
  cfg.epochs = epochs;
  return cfg;
}

std::function<double(double)> anchored(std::function<double(double)> F, double anchor) {
  const double base = F(anchor);
  return [F = std::move(F), base](double x) { return F(x) - base; };
}

std::function<double(double)> quadrature_primitive(const std::string& src, double anchor) {
  const std::vector<std::string> vars{"x"};
  auto f = std::make_shared<CompiledExpr>(Expr::parse(src), vars);
  return [f, anchor](double x) {
    if (x == anchor) return 0.0;
    const double sign = x > anchor ? 1.0 : -1.0;
    const QuadResult r = adaptive([&](double t) { return (*f)(t); }, std::min(x, anchor), std::max(x, anchor), 1e-13);
    return sign * r.value;
  };
}

std::vector<CaseSpec> build_registry() {
  std::vector<CaseSpec> out;
  auto add = [&](CaseSpec s) { out.push_back(std::move(s)); };

  {
    CaseSpec s;
    s.id = 1;
    s.title = "x^6";
    s.integrand = "x^6";
    s.config = single_axis(-2.0, 2.0, 100, {10, 10}, 10000);
    s.anchor = -2.0;
    s.truth = [](double x) { return (std::pow(x, 7) + 128.0) / 7.0; };
    add(s);
  }
  {
    CaseSpec s;
    s.id = 2;
    s.title = "sqrt(1+x^2)";
    s.integrand = "sqrt(1+x^2)";
    s.config = single_axis(-2.0, 2.0, 100, {10, 10}, 10000);
    s.anchor = -2.0;
    s.truth = anchored([](double x) { return 0.5 * (std::asinh(x) + x * std::sqrt(1.0 + x * x)); }, s.anchor);
    add(s);
  }
  {
    CaseSpec s;
    s.id = 3;
    s.title = "cos(x)";
    s.integrand = "cos(x)";
    s.config = single_axis(0.0, 2.0 * kPi, 100, {10, 10}, 10000);
    s.anchor = 0.0;
    s.truth = [](double x) { return std::sin(x); };
    add(s);
  }
  {
    CaseSpec s;
    s.id = 4;
    s.title = "arcsine of a quartic";
    s.integrand = "(16*x^3-42*x^2+2*x)/sqrt(-16*x^8+112*x^7-204*x^6+28*x^5-x^4+1)";
    s.config = single_axis(-0.3, 0.4, 1000, {20, 20, 20, 20}, 20000);
    s.anchor = -0.3;
    s.truth = anchored([](double x) { return std::asin(4 * std::pow(x, 4) - 14 * std::pow(x, 3) + x * x); }, s.anchor);
    add(s);
  }
  {
    CaseSpec s;
    s.id = 5;
    s.title = "nested sqrt/log integrand";
    s.integrand = "(x^2+2*x+1+(3*x+1)*sqrt(x+log(x)))/(x*sqrt(x+log(x))*(x+sqrt(x+log(x))))";
    s.config = single_axis(0.75, 2.0, 1000, {20, 20, 20, 20}, 20000);
    s.anchor = 0.75;
    s.truth = anchored(
        [](double x) {
          const double r = std::sqrt(x + std::log(x));
          return 2.0 * (r + std::log(x + r));
        },
        s.anchor);
    add(s);
  }
  {
    CaseSpec s;
    s.id = 6;
    s.title = "x^(-x) on [0, 1]";
    s.integrand = "x^(-x)";
    s.config = single_axis(0.0, 1.0, 200, {10, 10, 10, 10}, 20000);
    s.anchor = 0.0;
    s.lower = 0.0;
    s.upper = 1.0;
    s.truth_kind = TruthKind::quadrature;
    s.truth = quadrature_primitive(s.integrand, s.anchor);
    s.published = {{{}, 1.291285997, std::nullopt, "sum of n^-n"}};
    add(s);

    CaseSpec t = s;
    t.variant = "tail";
    t.title = "x^(-x) on [0, zeta]";
    t.config = single_axis(0.0, 30.0, 1000, {10, 10, 10, 10}, 20000);
    t.upper = 30.0;
    t.zeta = 30.0;
    t.published = {{{}, 1.99545596, std::nullopt, "integral to infinity"}};
    add(t);
  }
  {
    CaseSpec s;
    s.id = 7;
    s.title = "ellipse perimeter, one model per (a, b)";
    s.integrand = "4*sqrt(a^2-(a^2-b^2)*sin(x)^2)";
    s.config = single_axis(0.0, kPi / 2.0, 100, {10, 10}, 10000);
    s.anchor = 0.0;
    s.lower = 0.0;
    s.upper = kPi / 2.0;
    s.truth_kind = TruthKind::quadrature;
    s.model_per_row = true;
    s.row_params = {"a", "b"};
    s.published = {{{8, 7}, 47.17621557, std::nullopt, "single-variable ellipse row 1"},
                   {{2, 1}, 9.68845137, std::nullopt, "single-variable ellipse row 2"},
                   {{10, 5}, 48.44226631, std::nullopt, "single-variable ellipse row 3"},
                   {{5, 1}, 21.01007226, std::nullopt, "single-variable ellipse row 4"}};
    add(s);
  }
  {
    CaseSpec s;
    s.id = 8;
    s.title = "x*sin(1/x^10)";
    s.integrand = "x*sin(1/x^10)";
    s.config = single_axis(0.0, 1.0, 5000, {10, 10, 10}, 10000);
    s.anchor = 0.0;
    s.lower = 0.0;
    s.upper = 1.0;
    s.truth_kind = TruthKind::quadrature;
    s.truth = oscillatory_primitive_x_sin;
    s.published = {{{}, 0.060665, 0.0001469, "oscillatory table"}};
    add(s);
  }
  {
    CaseSpec s;
    s.id = 9;
    s.title = "sin(1/x)/(x+1)";
    s.integrand = "sin(1/x)/(x+1)";
    s.config = single_axis(0.0, 1.0, 5000, {10, 10, 10}, 10000);
    s.anchor = 0.0;
    s.lower = 0.0;
    s.upper = 1.0;
    s.truth_kind = TruthKind::quadrature;
    s.truth = oscillatory_primitive_sin_over;
    s.published = {{{}, 0.28749061, 0.00064409, "oscillatory table"}};
    add(s);
  }
  {
    CaseSpec s;
    s.id = 10;
    s.title = "ellipse perimeter P(a, b), one model";
    s.integrand = "4*sqrt(a^2-(a^2-b^2)*sin(x)^2)";
    s.config.axes = {{"x", {0.0, kPi / 2.0}}, {"a", {4.0, 11.0}}, {"b", {1.0, 8.0}}};
    s.config.points_per_axis = {16, 8, 8};
    s.config.hidden = {20, 20, 20};
    s.config.epochs = 10000;
    s.anchor = 0.0;
    s.lower = 0.0;
    s.upper = kPi / 2.0;
    s.truth_kind = TruthKind::quadrature;
    s.row_params = {"a", "b"};
    s.published = {{{5, 1}, 21.03439167, 0.001159, "parametric ellipse row 1"},
                   {{6, 1.8}, 26.29762002, 0.000858, "parametric ellipse row 2"},
                   {{7, 2.6}, 31.75970172, 0.000171, "parametric ellipse row 3"},
                   {{8, 3.4}, 37.28223005, 0.000139, "parametric ellipse row 4"},
                   {{9, 4.2}, 42.84975621, 0.000043, "parametric ellipse row 5"},
                   {{10, 5}, 48.40454929, 0.0000078, "parametric ellipse row 6"}};
    add(s);
  }
  {
    CaseSpec s;
    s.id = 11;
    s.title = "Fermi-Dirac F_q(eta)";
    s.integrand = "x^q/(exp(x-eta)+1)";
    s.config.axes = {{"x", {0.0, 32.0}}, {"eta", {-2.0, 2.0}}, {"q", {0.0, 2.0}}};
    s.config.points_per_axis = {64, 9, 9};
    s.config.hidden = {20, 20, 20};
    s.config.epochs = 10000;
    s.anchor = 0.0;
    s.lower = 0.0;
    s.zeta = 30.0;
    s.upper = 30.0;
    s.upper_of = [](std::span<const double> p) { return p[1] + 30.0; };
    s.truth_kind = TruthKind::quadrature;
    s.row_params = {"q", "eta"};
    s.published = {{{0, -2}, 0.12468052, 0.017706, "Fermi-Dirac row 1"},
                   {{0.5, -1}, 0.28986771, 0.002179, "Fermi-Dirac row 2"},
                   {{1, 0}, 0.8233424, 0.001064, "Fermi-Dirac row 3"},
                   {{1.5, 1}, 2.66133345, 0.000130, "Fermi-Dirac row 4"},
                   {{2, 2}, 9.51024877, 0.000254, "Fermi-Dirac row 5"}};
    add(s);

    CaseSpec r = s;
    r.variant = "relativistic";
    r.title = "relativistic Fermi-Dirac F_q(eta, beta)";
    r.integrand = "x^q*sqrt(1+beta*x/2)/(exp(x-eta)+1)";
    r.config.axes = {{"x", {0.0, 32.0}}, {"beta", {0.0, 2.0}}, {"eta", {-2.0, 2.0}}, {"q", {0.0, 3.0}}};
    r.config.points_per_axis = {40, 5, 5, 7};
    r.row_params = {"q", "eta", "beta"};
    r.published = {{{1, -1, 0.5}, 0.41499549, 0.0000397, "relativistic row 1"},
                   {{1.5, 0, 1}, 1.74834439, 0.005471, "relativistic row 2"},
                   {{2, 1, 1.5}, 7.94319678, 0.001817, "relativistic row 3"},
                   {{2.5, 2, 2}, 38.88427763, 0.004774, "relativistic row 4"}};
    add(r);
  }
  {
    CaseSpec s;
    s.id = 12;
    s.title = "standard normal CDF";
    s.integrand = "exp(-x^2/2)/sqrt(2*3.141592653589793)";
    s.config = single_axis(-8.0, 8.0, 200, {10, 10}, 10000);
    s.anchor = -8.0;
    s.truth = anchored(normal_cdf, s.anchor);
    add(s);
  }
  {
    CaseSpec s;
    s.id = 13;
    s.title = "bimodal CDF";
    s.integrand = "x^4*exp(-x^2/2)/(3*sqrt(2*3.141592653589793))";
    s.config = single_axis(-8.0, 8.0, 200, {10, 10}, 10000);
    s.anchor = -8.0;
    s.truth = anchored([](double x) { return normal_cdf(x) - x * (x * x + 3.0) * phi(x) / 3.0; }, s.anchor);
    add(s);
  }
  for (int id : {14, 15}) {
    CaseSpec s;
    s.id = id;
    s.title = id == 14 ? "Galerkin: u' = cos(2x)" : "Galerkin: u' + u = cos(2x)";
    GalerkinProblem p;
    p.alpha = 0.0;
    p.beta = 1.0;
    p.gamma = id == 14 ? 0.0 : 1.0;
    p.source = Expr::parse("cos(2*x)");
    p.x0 = 0.0;
    p.xn = 1.0;
    p.u0 = 0.0;
    p.c = 0.0;
    p.n = 1001;
    s.galerkin = p;
    s.config = single_axis(0.0, 1.0, 200, {20, 20}, 150000);
    s.anchor = 0.0;
    s.truth_kind = TruthKind::ode;
    if (id == 14) {
      s.truth = [](double x) { return std::sin(2.0 * x) / 2.0; };
    } else {
      s.truth = [](double x) { return (std::cos(2.0 * x) + 2.0 * std::sin(2.0 * x) - std::exp(-x)) / 5.0; };
    }
    add(s);
  }
  return out;
}

std::string join_sizes(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "x" : "") + std::to_string(v[i]);
  return s;
}

std::string cache_name(const CaseSpec& spec, const TrainConfig& cfg, const std::string& suffix) {
  std::string name = "case" + std::to_string(spec.id);
  if (!spec.variant.empty()) name += "-" + spec.variant;
  if (!suffix.empty()) name += "-" + suffix;
  std::vector<int> pts;
  for (std::size_t n : cfg.points_per_axis) pts.push_back(static_cast<int>(n));
  name += "-s" + std::to_string(cfg.seed) + "-e" + std::to_string(cfg.epochs) + "-h" + join_sizes(cfg.hidden) +
          "-p" + join_sizes(pts) + "-" + std::string(activation_name(cfg.activation)) +
          (cfg.sampling == Sampling::uniform_grid ? "-grid" : "-random") + "-lr" + format_double(cfg.lr0);
  return name + ".json";
}

struct Fitted {
  Antiderivative model;
  TrainReport report;
};

Fitted fit_or_load(const CaseSpec& spec, const Expr& f, const TrainConfig& cfg, const std::string& suffix,
                   const RunOptions& options) {
  std::string path;
  if (!options.cache_dir.empty()) {
    path = (std::filesystem::path(options.cache_dir) / cache_name(spec, cfg, suffix)).string();
    if (std::filesystem::exists(path)) {
      if (options.log) options.log("loading cached model " + path);
      Antiderivative ad = Antiderivative::load(path);
      TrainReport rep;
      rep.final_loss = ad.summary().final_loss;
      rep.epochs_run = ad.summary().epochs;
      return {std::move(ad), rep};
    }
  }
  if (options.log)
    options.log("training case " + std::to_string(spec.id) + (suffix.empty() ? "" : " " + suffix) + ": " +
                f.to_string() + ", " + std::to_string(cfg.total_points()) + " points, layers " +
                join_sizes(cfg.layer_sizes()) + ", " + std::to_string(cfg.epochs) + " epochs, seed " +
                std::to_string(cfg.seed));
  TrainReport rep;
  Antiderivative ad = Antiderivative::fit(f, cfg, spec.anchor, spec.zeta, &rep);
  if (!path.empty()) {
    std::filesystem::create_directories(options.cache_dir);
    ad.save(path);
  }
  return {std::move(ad), std::move(rep)};
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = n == 1 ? lo : (i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  return xs;
}

// Quadrature truths are accumulated panel by panel along the grid. Where a
// panel is too oscillatory to converge cheaply the oracle is called directly.
std::vector<double> truth_on_grid(const CaseSpec& spec, const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  if (spec.truth_kind != TruthKind::quadrature) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = spec.truth(xs[i]);
    return out;
  }
  const std::vector<std::string> vars{"x"};
  const CompiledExpr f(Expr::parse(spec.integrand), vars);
  const Integrand g = [&f](double x) { return f(x); };
  AdaptiveOptions budget;
  budget.max_evaluations = 20000;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      try {
        const QuadResult r = adaptive(g, xs[i - 1], xs[i], 1e-14, budget);
        if (r.converged) {
          out[i] = out[i - 1] + r.value;
          continue;
        }
      } catch (const DomainError&) {
      }
    }
    out[i] = spec.truth(xs[i]);
  }
  return out;
}

void write_csv(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

RowResult make_row(const PublishedValue& pv, double prediction, double oracle, bool ood) {
  RowResult r;
  r.params = pv.params;
  r.prediction = prediction;
  r.oracle = oracle;
  r.published = pv.value;
  r.reported_rel_error = pv.reported_rel_error;
  r.rel_error_vs_oracle = std::fabs(prediction - oracle) / std::fabs(oracle);
  r.out_of_domain = ood;
  return r;
}

Bindings row_bindings(const CaseSpec& spec, const std::vector<double>& params) {
  Bindings b;
  for (std::size_t i = 0; i < spec.row_params.size(); ++i) b[spec.row_params[i]] = params[i];
  return b;
}

std::string parametric_csv(const CaseSpec& spec, const std::vector<RowResult>& rows) {
  std::string csv;
  for (const std::string& p : spec.row_params) csv += p + ",";
  csv += "prediction,oracle,published_value,rel_error_vs_oracle\n";
  for (const RowResult& r : rows) {
    for (double p : r.params) csv += format_double(p) + ",";
    csv += format_double(r.prediction) + "," + format_double(r.oracle) + "," + format_double(r.published) + "," +
           format_double(r.rel_error_vs_oracle) + "\n";
  }
  return csv;
}

ErrorReport rows_error(const std::vector<RowResult>& rows) {
  std::vector<double> pred, truth;
  for (const RowResult& r : rows) {
    pred.push_back(r.prediction);
    truth.push_back(r.oracle);
  }
  return error_report(pred, truth);
}

void run_galerkin(const CaseSpec& spec, const TrainConfig& cfg, const RunOptions& options, CaseResult& res) {
  GalerkinProblem p = *spec.galerkin;
  if (options.nodes) p.n = *options.nodes;
  const Expr f = p.source;
  const Expr xf = Expr::parse("x*(" + f.to_string() + ")");
  Fitted n1 = fit_or_load(spec, f, cfg, "n1", options);
  Fitted n2 = fit_or_load(spec, xf, cfg, "n2", options);
  const NetworkPrimitive prim1(n1.model);
  const NetworkPrimitive prim2(n2.model);
  const GalerkinSolution quad = solve(p, LoadStrategy::quadrature);
  const GalerkinSolution dnni = solve(p, LoadStrategy::dnni, &prim1, &prim2);

  std::vector<double> truth(quad.nodes.size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = spec.truth(quad.nodes[i]);
  res.error = error_report(dnni.values, truth);
  res.quadrature_error = error_report(quad.values, truth);
  res.csv = "x,quadrature,dnni,truth,abs_error_quadrature,abs_error_dnni\n";
  for (std::size_t i = 0; i < truth.size(); ++i)
    res.csv += format_double(quad.nodes[i]) + "," + format_double(quad.values[i]) + "," +
               format_double(dnni.values[i]) + "," + format_double(truth[i]) + "," +
               format_double(std::fabs(quad.values[i] - truth[i])) + "," +
               format_double(std::fabs(dnni.values[i] - truth[i])) + "\n";
  res.models = {n1.model, n2.model};
  res.training = {n1.report, n2.report};
}

}  // namespace

std::string_view truth_kind_name(TruthKind k) {
  switch (k) {
    case TruthKind::analytic: return "analytic";
    case TruthKind::quadrature: return "quadrature";
    case TruthKind::ode: return "ode";
  }
  return "?";
}

const std::vector<CaseSpec>& registry() {
  static const std::vector<CaseSpec> specs = build_registry();
  static const std::vector<CaseSpec> main = [] {
    std::vector<CaseSpec> v;
    for (const CaseSpec& s : specs)
      if (s.variant.empty()) v.push_back(s);
    return v;
  }();
  return main;
}

namespace {
const std::vector<CaseSpec>& all_specs() {
  static const std::vector<CaseSpec> specs = build_registry();
  return specs;
}
}  // namespace

const CaseSpec& find_case(int id, std::string_view variant) {
  for (const CaseSpec& s : all_specs())
    if (s.id == id && s.variant == variant) return s;
  if (id < 1 || id > 15) throw ConfigError("unknown case " + std::to_string(id) + " (expected 1..15)");
  std::string known;
  for (const std::string& v : case_variants(id)) known += " '" + v + "'";
  throw ConfigError("case " + std::to_string(id) + " has no variant '" + std::string(variant) + "' (known:" + known +
                    ")");
}

std::vector<std::string> case_variants(int id) {
  std::vector<std::string> out;
  for (const CaseSpec& s : all_specs())
    if (s.id == id) out.push_back(s.variant);
  return out;
}

double oscillatory_primitive_x_sin(double x) {
  if (x < 0.0) throw DomainError("x*sin(1/x^10) primitive is only tabulated for x >= 0");
  if (x == 0.0) return 0.0;
  if (x <= kXSinSwitch) return x_sin_series(x);
  const QuadResult r = adaptive([](double t) { return t * std::sin(std::pow(t, -10.0)); }, kXSinSwitch, x, 1e-14);
  return x_sin_series(kXSinSwitch) + r.value;
}

double oscillatory_primitive_sin_over(double x) {
  if (x < 0.0) throw DomainError("sin(1/x)/(1+x) primitive is only tabulated for x >= 0");
  if (x == 0.0) return 0.0;
  if (x <= kSinOverSwitch) return sin_over_series(x);
  const QuadResult r = adaptive([](double t) { return std::sin(1.0 / t) / (1.0 + t); }, kSinOverSwitch, x, 1e-14);
  return sin_over_series(kSinOverSwitch) + r.value;
}

double quadrature_oracle(const CaseSpec& spec, std::span<const double> params, double lower, double upper) {
  if (spec.integrand.empty()) throw ConfigError("case " + std::to_string(spec.id) + " has no integrand");
  std::vector<std::string> vars{"x"};
  vars.insert(vars.end(), spec.row_params.begin(), spec.row_params.end());
  const CompiledExpr f(Expr::parse(spec.integrand), vars);
  std::vector<double> in(vars.size());
  std::copy(params.begin(), params.end(), in.begin() + 1);
  const QuadResult r = adaptive(
      [&](double x) {
        in[0] = x;
        return f(in);
      },
      lower, upper, kOracleTol);
  return r.value;
}

double l2_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ShapeError("l2_error: length mismatch");
  if (pred.empty()) throw ShapeError("l2_error: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return std::sqrt(s);
}

ErrorReport error_report(std::span<const double> pred, std::span<const double> truth) {
  ErrorReport r;
  r.l2 = l2_error(pred, truth);
  r.points = pred.size();
  double scale = 0.0;
  for (double t : truth) scale = std::max(scale, std::fabs(t));
  const double floor = std::max(1e-3 * scale, 1e-300);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::fabs(pred[i] - truth[i]);
    r.max_abs = std::max(r.max_abs, e);
    r.max_rel = std::max(r.max_rel, e / std::max(std::fabs(truth[i]), floor));
  }
  return r;
}

TrainConfig effective_config(const CaseSpec& spec, const RunOptions& o) {
  TrainConfig cfg = spec.config;
  if (o.points_per_axis) cfg.points_per_axis = *o.points_per_axis;
  if (o.points) cfg.points_per_axis[0] = *o.points;
  if (o.hidden) cfg.hidden = *o.hidden;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.seed) cfg.seed = *o.seed;
  if (o.activation) cfg.activation = *o.activation;
  if (o.sampling) cfg.sampling = *o.sampling;
  if (o.lr0) cfg.lr0 = *o.lr0;
  cfg.threads = o.threads;
  cfg.progress = o.progress;
  cfg.progress_interval = o.progress_interval;
  cfg.validate();
  return cfg;
}

CaseResult run_case(int id, const RunOptions& options) {
  const CaseSpec& spec = find_case(id, options.variant);
  const TrainConfig cfg = effective_config(spec, options);
  const auto start = std::chrono::steady_clock::now();
  CaseResult res;
  res.id = id;
  res.variant = spec.variant;
  res.seed = cfg.seed;

  if (spec.galerkin) {
    run_galerkin(spec, cfg, options, res);
  } else if (spec.model_per_row) {
    const Expr f = Expr::parse(spec.integrand);
    for (std::size_t k = 0; k < spec.published.size(); ++k) {
      const PublishedValue& pv = spec.published[k];
      Fitted fit = fit_or_load(spec, f.substitute(row_bindings(spec, pv.params)), cfg, "row" + std::to_string(k + 1),
                               options);
      const Evaluated ev = fit.model.definite(spec.lower, spec.upper_limit(pv.params));
      const double oracle = quadrature_oracle(spec, pv.params, spec.lower, spec.upper_limit(pv.params));
      res.rows.push_back(make_row(pv, ev.value, oracle, ev.out_of_domain));
      res.models.push_back(std::move(fit.model));
      res.training.push_back(std::move(fit.report));
    }
    res.error = rows_error(res.rows);
    res.csv = parametric_csv(spec, res.rows);
  } else if (spec.parametric()) {
    Fitted fit = fit_or_load(spec, Expr::parse(spec.integrand), cfg, "", options);
    for (const PublishedValue& pv : spec.published) {
      const double hi = spec.upper_limit(pv.params);
      const Evaluated ev = fit.model.definite(spec.lower, hi, row_bindings(spec, pv.params));
      res.rows.push_back(make_row(pv, ev.value, quadrature_oracle(spec, pv.params, spec.lower, hi), ev.out_of_domain));
    }
    res.error = rows_error(res.rows);
    res.csv = parametric_csv(spec, res.rows);
    res.models.push_back(std::move(fit.model));
    res.training.push_back(std::move(fit.report));
  } else {
    Fitted fit = fit_or_load(spec, Expr::parse(spec.integrand), cfg, "", options);
    const Interval d = cfg.axes[0].domain;
    const std::vector<double> xs = uniform_grid(d.lo, d.hi, options.grid_points);
    const std::vector<double> truth = truth_on_grid(spec, xs);
    std::vector<double> pred(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) pred[i] = fit.model.value(xs[i]).value;
    res.error = error_report(pred, truth);
    res.csv = "x,prediction,truth,abs_error\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      res.csv += format_double(xs[i]) + "," + format_double(pred[i]) + "," + format_double(truth[i]) + "," +
                 format_double(std::fabs(pred[i] - truth[i])) + "\n";
    for (const PublishedValue& pv : spec.published) {
      const Evaluated ev = fit.model.definite(spec.lower, spec.upper);
      const double oracle = spec.truth(spec.upper) - spec.truth(spec.lower);
      res.rows.push_back(make_row(pv, ev.value, oracle, ev.out_of_domain));
    }
    res.models.push_back(std::move(fit.model));
    res.training.push_back(std::move(fit.report));
  }

  if (!options.csv_path.empty()) {
    write_csv(options.csv_path, res.csv);
    res.error.csv_path = options.csv_path;
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

ConvergenceStudy convergence_study(int id, StudyAxis axis, const std::vector<double>& values, const RunOptions& base) {
  const CaseSpec& spec = find_case(id, base.variant);
  if (spec.truth_kind != TruthKind::analytic || spec.parametric() || spec.galerkin)
    throw ConfigError("convergence study needs a single-variable case with an analytic truth; case " +
                      std::to_string(id) + " has none");
  if (values.empty()) throw ConfigError("convergence study needs at least one value");
  ConvergenceStudy study;
  for (double v : values) {
    if (!(v >= 1.0)) throw ConfigError("study values must be >= 1, got " + format_double(v));
    RunOptions o = base;
    o.csv_path.clear();
    if (axis == StudyAxis::points) {
      o.points = static_cast<std::size_t>(v);
    } else {
      o.epochs = static_cast<long>(v);
    }
    study.rows.push_back({v, run_case(id, o).error.l2});
  }
  if (study.rows.size() > 1) study.decreased = study.rows.back().l2 < study.rows.front().l2;
  return study;
}

}  // namespace dnni
