#pragma once

#include <functional>
#include <vector>

#include "dnni/expr.hpp"
#include "dnni/integral.hpp"
#include "dnni/train.hpp"

namespace dnni {

/// α u'' + β u' + γ u = f(x) on [x0, xn] with u(x0) = u0 and u'(xn) = c,
/// discretised with n equispaced nodes and linear hat functions.
struct GalerkinProblem {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
  Expr source = Expr::constant(0.0);
  double x0 = 0.0;
  double xn = 1.0;
  double u0 = 0.0;
  double c = 0.0;
  int n = 101;

  double h() const { return (xn - x0) / (n - 1); }
  double node(int i) const { return i == n - 1 ? xn : x0 + i * h(); }
  void validate() const;
};

/// Unknowns are the nodal values at nodes 1..n-1; node 0 is eliminated.
/// `sub[0]` and `super.back()` are unused and zero.
struct TridiagonalSystem {
  std::vector<double> sub;
  std::vector<double> main;
  std::vector<double> super;
  std::vector<double> rhs;

  std::size_t size() const { return main.size(); }
  /// ‖A·x - rhs‖∞.
  double residual(const std::vector<double>& x) const;
};

/// Stiffness/advection/mass stencil with the boundary terms in `rhs`:
/// -A(1,0)·u0 in the first entry and -α·c in the last.
TridiagonalSystem assemble_matrix(const GalerkinProblem& p);

/// Boundary terms plus ∫ψ_j f for every unknown, each element integral by
/// adaptive quadrature (tol 1e-10). Throws QuadratureError on failure.
std::vector<double> load_quadrature(const GalerkinProblem& p);

/// A scalar antiderivative usable as N1 (of f) or N2 (of x·f).
class Primitive {
 public:
  virtual ~Primitive() = default;
  virtual double operator()(double x) const = 0;
  virtual Interval domain() const = 0;
};

/// Wraps a single-variable trained model.
class NetworkPrimitive final : public Primitive {
 public:
  explicit NetworkPrimitive(Antiderivative ad);
  double operator()(double x) const override;
  Interval domain() const override { return ad_.domain()[0]; }
  const Antiderivative& model() const { return ad_; }

 private:
  Antiderivative ad_;
};

/// ∫_anchor^x g by adaptive quadrature; the reference stand-in for a
/// trained model.
class QuadraturePrimitive final : public Primitive {
 public:
  QuadraturePrimitive(std::function<double(double)> g, double anchor, Interval domain, double tol = 1e-13);
  double operator()(double x) const override;
  Interval domain() const override { return domain_; }

 private:
  std::function<double(double)> g_;
  double anchor_;
  Interval domain_;
  double tol_;
};

/// Any closed-form antiderivative.
class FunctionPrimitive final : public Primitive {
 public:
  FunctionPrimitive(std::function<double(double)> fn, Interval domain) : fn_(std::move(fn)), domain_(domain) {}
  double operator()(double x) const override { return fn_(x); }
  Interval domain() const override { return domain_; }

 private:
  std::function<double(double)> fn_;
  Interval domain_;
};

/// Same load as load_quadrature, with every element integral obtained by
/// substituting limits into N1 ≈ ∫f and N2 ≈ ∫x·f:
///   ∫_{x_i}^{x_{i+1}} (x_{i+1} - x) f = x_{i+1}·ΔN1 - ΔN2
///   ∫_{x_{i-1}}^{x_i} (x - x_{i-1}) f = ΔN2 - x_{i-1}·ΔN1
std::vector<double> load_dnni(const GalerkinProblem& p, const Primitive& n1, const Primitive& n2);

/// Thomas algorithm. Throws ZeroPivotError on an exactly zero pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

/// Gaussian elimination with partial pivoting (one extra fill-in diagonal).
std::vector<double> solve_tridiagonal_pivoted(const TridiagonalSystem& sys);

enum class LoadStrategy { quadrature, dnni };

/// Piecewise-linear solution through the nodal values.
struct GalerkinSolution {
  std::vector<double> nodes;
  std::vector<double> values;
  double operator()(double x) const;
};

GalerkinSolution solve(const GalerkinProblem& p, LoadStrategy strategy, const Primitive* n1 = nullptr,
                       const Primitive* n2 = nullptr);

/// Solves with a ready-made right-hand side.
GalerkinSolution solve_with_rhs(const GalerkinProblem& p, std::vector<double> rhs);

struct BreakevenInputs {
  double T = 0.0;        // seconds to train one antiderivative
  double t = 0.0;        // seconds per quadrature integral
  double epsilon = 0.0;  // seconds per limit substitution
  int m = 1;             // number of distinct antiderivatives
};

struct Breakeven {
  double n_real;
  long n_int;  // smallest integer strictly above n_real
};

/// n > 1 + m·T / (2·(t - m·ε)). Throws ConfigError when t <= m·ε.
Breakeven breakeven(const BreakevenInputs& b);

struct RhsTiming {
  std::vector<double> samples;  // seconds per repetition
  double median = 0.0;
  long integrals = 0;           // element integrals per assembly
  double per_integral = 0.0;    // median / integrals
  double training_seconds = 0.0;  // DNNI only: cost of producing N1 and N2
  unsigned hardware_threads = 0;
};

double median(std::vector<double> samples);

/// Median wall-clock of assembling the load vector. For the dnni strategy
/// `training_seconds` is carried through so substitution and training time
/// are reported separately.
RhsTiming time_rhs(const GalerkinProblem& p, LoadStrategy strategy, int repetitions, const Primitive* n1 = nullptr,
                   const Primitive* n2 = nullptr, double training_seconds = 0.0);

/// Number of element integrals assembled for a problem with n nodes.
long element_integral_count(int n);

}  // namespace dnni
