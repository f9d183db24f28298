#pragma once

#include <functional>
#include <string_view>

namespace dnni {

using Integrand = std::function<double(double)>;

enum class QuadMethod { simpson13, simpson38, adaptive_simpson };

std::string_view method_name(QuadMethod m);

struct QuadResult {
  double value = 0.0;
  long evaluations = 0;
  QuadMethod method = QuadMethod::simpson13;
  double elapsed = 0.0;  // seconds
  /// false when the adaptive method stopped on its depth or evaluation
  /// budget before meeting the tolerance; `value` is then the best estimate.
  bool converged = true;
  double error_estimate = 0.0;
};

/// Composite Simpson 1/3 rule over n (even, >= 2) subintervals. An endpoint
/// where the integrand raises DomainError is evaluated 1e-12·(b-a) inside.
QuadResult simpson13(const Integrand& f, double a, double b, long n);

/// Composite Simpson 3/8 rule over n (multiple of 3) subintervals.
QuadResult simpson38(const Integrand& f, double a, double b, long n);

struct AdaptiveOptions {
  int min_depth = 3;  // every start panel is bisected this often before any is accepted
  int max_depth = 60;
  long max_evaluations = 10'000'000;
};

/// Globally adaptive Simpson quadrature with Richardson error estimates.
///
/// Every panel carries the estimate |S_halves - S_whole| / 15. The panel
/// with the largest estimate is bisected until the estimates sum to at most
/// `tol`, so each panel is accepted once |S_halves - S_whole| <= 15·tol_local
/// for its share tol_local of the budget. Panels at `max_depth` are never
/// split; hitting either budget clears `converged`.
QuadResult adaptive(const Integrand& f, double a, double b, double tol, AdaptiveOptions options = {});

}  // namespace dnni
