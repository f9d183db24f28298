#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dnni {

/// Variable name -> value.
using Bindings = std::map<std::string, double, std::less<>>;

enum class Func { neg, sin, cos, tan, sinh, cosh, tanh, exp, log, sqrt, erf, abs };

struct ExprNode;

/// Immutable parsed integrand over `x` and named parameters.
///
/// Grammar (ASCII):
///   expr   := term (("+"|"-") term)*
///   term   := factor (("*"|"/") factor)*
///   factor := "-"? power
///   power  := atom ("^" power)?
///   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
///
/// The exponent is a `power`, so a negative exponent needs parentheses:
/// `x^(-x)` parses, `x^-x` does not.
///
/// Evaluation never returns NaN or infinity; any step leaving the real
/// domain raises DomainError. Copies share the tree, and evaluation is safe
/// from any number of threads.
class Expr {
 public:
  static Expr parse(std::string_view source);

  static Expr constant(double value);
  static Expr variable(std::string name);

  double eval(const Bindings& bindings) const;

  /// `x` first if present, then the remaining names in lexicographic order.
  std::vector<std::string> free_vars() const;

  /// Fully parenthesised source text; reparses to an identical tree.
  std::string to_string() const;

  /// Constructor-style dump such as `Mul(Var x, Sin(Const 1))`.
  std::string tree() const;

  /// Replaces the named variables by constants.
  Expr substitute(const Bindings& values) const;

  bool structurally_equal(const Expr& other) const;

  const ExprNode& root() const { return *root_; }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}
  friend class CompiledExpr;
  friend class Parser;

  std::shared_ptr<const ExprNode> root_;
};

/// An Expr whose variable references are resolved to positions in a fixed
/// variable list, for evaluation in tight loops.
class CompiledExpr {
 public:
  CompiledExpr(const Expr& expr, std::span<const std::string> variables);

  double operator()(std::span<const double> values) const;
  double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  std::size_t arity() const { return arity_; }

 private:
  std::shared_ptr<const ExprNode> root_;
  std::size_t arity_;
};

struct ExprNode {
  enum class Kind { constant, variable, unary, binary };

  Kind kind = Kind::constant;
  double value = 0.0;
  std::string name;
  int slot = -1;  // set by CompiledExpr
  Func func = Func::neg;
  char op = 0;  // one of + - * / ^
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

std::string_view func_name(Func f);

}  // namespace dnni
