#include "dnni/galerkin.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"
#include "dnni/quadrature.hpp"

namespace dnni {

namespace {

constexpr double kElementTol = 1e-10;

bool diagonally_dominant(const TridiagonalSystem& sys) {
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const double off = (i > 0 ? std::fabs(sys.sub[i]) : 0.0) + (i + 1 < sys.size() ? std::fabs(sys.super[i]) : 0.0);
    if (std::fabs(sys.main[i]) < off) return false;
  }
  return true;
}

double element_integral(const Integrand& g, double a, double b) {
  QuadResult r = adaptive(g, a, b, kElementTol);
  if (!r.converged)
    throw QuadratureError("element integral over [" + format_double(a) + ", " + format_double(b) +
                          "] did not converge (estimate " + format_double(r.error_estimate) + ")");
  return r.value;
}

}  // namespace

void GalerkinProblem::validate() const {
  if (n < 3) throw ConfigError("Galerkin problem needs n >= 3 nodes, got " + std::to_string(n));
  if (!(x0 < xn)) throw ConfigError("Galerkin problem needs x0 < xn");
}

double TridiagonalSystem::residual(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double ax = main[i] * x[i];
    if (i > 0) ax += sub[i] * x[i - 1];
    if (i + 1 < size()) ax += super[i] * x[i + 1];
    worst = std::max(worst, std::fabs(ax - rhs[i]));
  }
  return worst;
}

TridiagonalSystem assemble_matrix(const GalerkinProblem& p) {
  p.validate();
  const double h = p.h();
  const double a = p.alpha;
  const double b = p.beta;
  const double g = p.gamma;
  const auto m = static_cast<std::size_t>(p.n - 1);
  const double lower = a / h - b / 2.0 + g * h / 6.0;  // A(j, j-1)
  const double upper = a / h + b / 2.0 + g * h / 6.0;  // A(j, j+1)

  TridiagonalSystem sys;
  sys.sub.assign(m, lower);
  sys.super.assign(m, upper);
  sys.main.assign(m, -2.0 * a / h + 2.0 * g * h / 3.0);
  sys.rhs.assign(m, 0.0);
  sys.sub[0] = 0.0;
  sys.super[m - 1] = 0.0;
  // The last node has a single element.
  sys.main[m - 1] = -a / h + b / 2.0 + g * h / 3.0;
  sys.rhs[0] -= lower * p.u0;
  sys.rhs[m - 1] -= a * p.c;
  return sys;
}

std::vector<double> load_quadrature(const GalerkinProblem& p) {
  TridiagonalSystem sys = assemble_matrix(p);
  const std::vector<std::string> vars{"x"};
  const CompiledExpr f(p.source, vars);
  const double h = p.h();
  std::vector<double> rhs = sys.rhs;
  for (int j = 1; j < p.n; ++j) {
    const double xl = p.node(j - 1);
    const double xj = p.node(j);
    double v = element_integral([&](double x) { return (x - xl) * f(x); }, xl, xj) / h;
    if (j + 1 < p.n) {
      const double xr = p.node(j + 1);
      v += element_integral([&](double x) { return (xr - x) * f(x); }, xj, xr) / h;
    }
    rhs[static_cast<std::size_t>(j - 1)] += v;
  }
  return rhs;
}

NetworkPrimitive::NetworkPrimitive(Antiderivative ad) : ad_(std::move(ad)) {
  if (ad_.variables().size() != 1) throw ConfigError("a Galerkin primitive must be a single-variable model");
}

double NetworkPrimitive::operator()(double x) const { return ad_.network_value(std::span<const double>(&x, 1)); }

QuadraturePrimitive::QuadraturePrimitive(std::function<double(double)> g, double anchor, Interval domain, double tol)
    : g_(std::move(g)), anchor_(anchor), domain_(domain), tol_(tol) {}

double QuadraturePrimitive::operator()(double x) const {
  if (x == anchor_) return 0.0;
  if (x < anchor_) return -adaptive(g_, x, anchor_, tol_).value;
  return adaptive(g_, anchor_, x, tol_).value;
}

std::vector<double> load_dnni(const GalerkinProblem& p, const Primitive& n1, const Primitive& n2) {
  TridiagonalSystem sys = assemble_matrix(p);
  const double slack = 1e-12 * (p.xn - p.x0);
  for (const Primitive* prim : {&n1, &n2}) {
    const Interval d = prim->domain();
    if (d.lo > p.x0 + slack || d.hi < p.xn - slack)
      throw ConfigError("antiderivative domain [" + format_double(d.lo) + ", " + format_double(d.hi) +
                        "] does not cover [" + format_double(p.x0) + ", " + format_double(p.xn) + "]");
  }
  const auto n = static_cast<std::size_t>(p.n);
  std::vector<double> x(n), v1(n), v2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = p.node(static_cast<int>(i));
    v1[i] = n1(x[i]);
    v2[i] = n2(x[i]);
  }
  const double h = p.h();
  std::vector<double> rhs = sys.rhs;
  for (std::size_t j = 1; j < n; ++j) {
    double v = (v2[j] - v2[j - 1]) - x[j - 1] * (v1[j] - v1[j - 1]);
    if (j + 1 < n) v += x[j + 1] * (v1[j + 1] - v1[j]) - (v2[j + 1] - v2[j]);
    rhs[j - 1] += v / h;
  }
  return rhs;
}

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
  const std::size_t m = sys.size();
  if (sys.sub.size() != m || sys.super.size() != m || sys.rhs.size() != m || m == 0)
    throw ShapeError("tridiagonal system has inconsistent lengths");
  std::vector<double> c(m), d(m);
  double pivot = sys.main[0];
  if (pivot == 0.0) throw ZeroPivotError("zero pivot in Thomas elimination", 0);
  c[0] = sys.super[0] / pivot;
  d[0] = sys.rhs[0] / pivot;
  for (std::size_t i = 1; i < m; ++i) {
    pivot = sys.main[i] - sys.sub[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw ZeroPivotError("zero pivot in Thomas elimination", i);
    c[i] = i + 1 < m ? sys.super[i] / pivot : 0.0;
    d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / pivot;
  }
  for (std::size_t i = m - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

std::vector<double> solve_tridiagonal_pivoted(const TridiagonalSystem& sys) {
  const std::size_t m = sys.size();
  if (sys.sub.size() != m || sys.super.size() != m || sys.rhs.size() != m || m == 0)
    throw ShapeError("tridiagonal system has inconsistent lengths");
  // dl[i] = A(i+1, i); after elimination it holds the second superdiagonal.
  std::vector<double> dl(m > 1 ? m - 1 : 0), d = sys.main, du = sys.super, b = sys.rhs;
  for (std::size_t i = 0; i + 1 < m; ++i) dl[i] = sys.sub[i + 1];
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (std::fabs(d[i]) >= std::fabs(dl[i])) {
      if (d[i] == 0.0) throw ZeroPivotError("singular tridiagonal system", i);
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
      dl[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < m) {
        dl[i] = du[i + 1];
        du[i + 1] = -fact * dl[i];
      } else {
        dl[i] = 0.0;
      }
      du[i] = temp;
      const double tb = b[i];
      b[i] = b[i + 1];
      b[i + 1] = tb - fact * b[i + 1];
    }
  }
  if (d[m - 1] == 0.0) throw ZeroPivotError("singular tridiagonal system", m - 1);
  b[m - 1] /= d[m - 1];
  if (m > 1) b[m - 2] = (b[m - 2] - du[m - 2] * b[m - 1]) / d[m - 2];
  for (std::size_t i = m - 2; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - dl[i] * b[i + 2]) / d[i];
  return b;
}

double GalerkinSolution::operator()(double x) const {
  if (x <= nodes.front()) return values.front();
  if (x >= nodes.back()) return values.back();
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  const auto i = static_cast<std::size_t>(it - nodes.begin()) - 1;
  const double t = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
  return values[i] + t * (values[i + 1] - values[i]);
}

GalerkinSolution solve_with_rhs(const GalerkinProblem& p, std::vector<double> rhs) {
  TridiagonalSystem sys = assemble_matrix(p);
  if (rhs.size() != sys.size()) throw ShapeError("rhs length does not match the system");
  sys.rhs = std::move(rhs);
  std::vector<double> coeffs;
  if (diagonally_dominant(sys)) {
    coeffs = solve_tridiagonal(sys);
  } else {
    coeffs = solve_tridiagonal_pivoted(sys);
  }
  GalerkinSolution sol;
  sol.nodes.reserve(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) sol.nodes.push_back(p.node(i));
  sol.values.push_back(p.u0);
  sol.values.insert(sol.values.end(), coeffs.begin(), coeffs.end());
  return sol;
}

GalerkinSolution solve(const GalerkinProblem& p, LoadStrategy strategy, const Primitive* n1, const Primitive* n2) {
  if (strategy == LoadStrategy::quadrature) return solve_with_rhs(p, load_quadrature(p));
  if (!n1 || !n2) throw ConfigError("the dnni strategy needs antiderivatives of f and x·f");
  return solve_with_rhs(p, load_dnni(p, *n1, *n2));
}

Breakeven breakeven(const BreakevenInputs& b) {
  if (b.T < 0.0 || b.t < 0.0 || b.epsilon < 0.0 || b.m < 0) throw ConfigError("break-even inputs must be >= 0");
  const double denom = b.t - b.m * b.epsilon;
  if (!(denom > 0.0))
    throw ConfigError("no finite break-even: per-integral quadrature time t must exceed m·epsilon");
  const double n_real = 1.0 + b.m * b.T / (2.0 * denom);
  return {n_real, static_cast<long>(std::floor(n_real)) + 1};
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw ConfigError("median of an empty sample");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

long element_integral_count(int n) { return 2L * n - 3; }

RhsTiming time_rhs(const GalerkinProblem& p, LoadStrategy strategy, int repetitions, const Primitive* n1,
                   const Primitive* n2, double training_seconds) {
  if (repetitions < 3) throw ConfigError("timing needs at least 3 repetitions");
  if (strategy == LoadStrategy::dnni && (!n1 || !n2))
    throw ConfigError("the dnni strategy needs antiderivatives of f and x·f");
  RhsTiming out;
  volatile double sink = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> rhs = strategy == LoadStrategy::quadrature ? load_quadrature(p) : load_dnni(p, *n1, *n2);
    out.samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    sink = sink + rhs.front();
  }
  out.median = median(out.samples);
  out.integrals = element_integral_count(p.n);
  out.per_integral = out.median / static_cast<double>(out.integrals);
  out.training_seconds = strategy == LoadStrategy::dnni ? training_seconds : 0.0;
  out.hardware_threads = std::thread::hardware_concurrency();
  return out;
}

}  // namespace dnni
