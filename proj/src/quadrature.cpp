#include "dnni/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"

namespace dnni {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Endpoint evaluation with the inward nudge for removable singularities.
double endpoint(const Integrand& f, double x, double inward) {
  try {
    const double v = f(x);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return f(x + inward);
}

void check_limits(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("integration limits must be finite");
}

struct Panel {
  double a, b;
  double fa, fm, fb;
  double fl, fr;  // quarter points
  double refined;  // Richardson-extrapolated value
  double error;
  int depth;
};

struct ByError {
  bool operator()(const Panel& l, const Panel& r) const { return l.error < r.error; }
};

}  // namespace

std::string_view method_name(QuadMethod m) {
  switch (m) {
    case QuadMethod::simpson13: return "simpson13";
    case QuadMethod::simpson38: return "simpson38";
    case QuadMethod::adaptive_simpson: return "adaptive_simpson";
  }
  return "?";
}

QuadResult simpson13(const Integrand& f, double a, double b, long n) {
  check_limits(a, b);
  if (n < 2 || n % 2 != 0) throw ConfigError("simpson13 needs an even subinterval count >= 2, got " + std::to_string(n));
  const auto start = Clock::now();
  const double h = (b - a) / static_cast<double>(n);
  const double nudge = 1e-12 * (b - a);
  double odd = 0.0;
  double even = 0.0;
  for (long i = 1; i < n; ++i) {
    const double v = f(a + static_cast<double>(i) * h);
    (i % 2 ? odd : even) += v;
  }
  const double ends = endpoint(f, a, nudge) + endpoint(f, b, -nudge);
  QuadResult r;
  r.value = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
  r.evaluations = n + 1;
  r.method = QuadMethod::simpson13;
  r.elapsed = seconds_since(start);
  return r;
}

QuadResult simpson38(const Integrand& f, double a, double b, long n) {
  check_limits(a, b);
  if (n < 3 || n % 3 != 0)
    throw ConfigError("simpson38 needs a subinterval count divisible by 3, got " + std::to_string(n));
  const auto start = Clock::now();
  const double h = (b - a) / static_cast<double>(n);
  const double nudge = 1e-12 * (b - a);
  double inner = 0.0;   // weight 3
  double joints = 0.0;  // weight 2
  for (long i = 1; i < n; ++i) {
    const double v = f(a + static_cast<double>(i) * h);
    (i % 3 ? inner : joints) += v;
  }
  const double ends = endpoint(f, a, nudge) + endpoint(f, b, -nudge);
  QuadResult r;
  r.value = 3.0 * h / 8.0 * (ends + 3.0 * inner + 2.0 * joints);
  r.evaluations = n + 1;
  r.method = QuadMethod::simpson38;
  r.elapsed = seconds_since(start);
  return r;
}

QuadResult adaptive(const Integrand& f, double a, double b, double tol, AdaptiveOptions options) {
  check_limits(a, b);
  if (!(tol > 0.0)) throw ConfigError("adaptive quadrature needs tol > 0, got " + format_double(tol));
  const auto start = Clock::now();
  long evals = 0;
  auto eval = [&](double x) {
    ++evals;
    return f(x);
  };
  auto make_panel = [&](double pa, double pb, double fa, double fm, double fb, int depth) {
    const double m = 0.5 * (pa + pb);
    const double flm = eval(0.5 * (pa + m));
    const double frm = eval(0.5 * (m + pb));
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    const double halves = (m - pa) / 6.0 * (fa + 4.0 * flm + fm) + (pb - m) / 6.0 * (fm + 4.0 * frm + fb);
    return Panel{pa, pb, fa, fm, fb, flm, frm, halves + (halves - whole) / 15.0, std::fabs(halves - whole) / 15.0, depth};
  };

  QuadResult r;
  r.method = QuadMethod::adaptive_simpson;
  if (a == b) {
    r.evaluations = 1;
    r.elapsed = seconds_since(start);
    return r;
  }
  const double nudge = 1e-12 * (b - a);
  const double fa = endpoint(f, a, nudge);
  const double fb = endpoint(f, b, -nudge);
  evals += 2;

  std::vector<Panel> start_panels{make_panel(a, b, fa, eval(0.5 * (a + b)), fb, 0)};
  for (int d = 0; d < std::min(options.min_depth, options.max_depth); ++d) {
    std::vector<Panel> next;
    for (const Panel& p : start_panels) {
      const double m = 0.5 * (p.a + p.b);
      next.push_back(make_panel(p.a, m, p.fa, p.fl, p.fm, p.depth + 1));
      next.push_back(make_panel(m, p.b, p.fm, p.fr, p.fb, p.depth + 1));
    }
    start_panels = std::move(next);
  }
  std::priority_queue<Panel, std::vector<Panel>, ByError> open;
  double pending = 0.0;
  for (const Panel& p : start_panels) {
    open.push(p);
    pending += p.error;
  }
  double settled_value = 0.0;  // panels retired at max depth
  double settled_error = 0.0;
  bool converged = true;

  while (!open.empty() && pending + settled_error > tol) {
    if (evals >= options.max_evaluations) {
      converged = false;
      break;
    }
    Panel p = open.top();
    open.pop();
    pending -= p.error;
    if (p.depth >= options.max_depth) {
      settled_value += p.refined;
      settled_error += p.error;
      converged = false;
      continue;
    }
    const double m = 0.5 * (p.a + p.b);
    Panel left = make_panel(p.a, m, p.fa, p.fl, p.fm, p.depth + 1);
    Panel right = make_panel(m, p.b, p.fm, p.fr, p.fb, p.depth + 1);
    pending += left.error + right.error;
    open.push(left);
    open.push(right);
  }

  // Sum the remaining panels in left-to-right order for reproducibility.
  std::vector<Panel> rest;
  rest.reserve(open.size());
  double total_error = settled_error;
  while (!open.empty()) {
    total_error += open.top().error;
    rest.push_back(open.top());
    open.pop();
  }
  std::sort(rest.begin(), rest.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  double value = settled_value;
  for (const Panel& p : rest) value += p.refined;

  r.value = value;
  r.evaluations = evals;
  r.converged = converged && total_error <= tol;
  r.error_estimate = total_error;
  r.elapsed = seconds_since(start);
  return r;
}

}  // namespace dnni
