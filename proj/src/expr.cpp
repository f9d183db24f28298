#include "dnni/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>

#include "dnni/errors.hpp"
#include "dnni/format.hpp"

namespace dnni {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

constexpr std::array<std::pair<std::string_view, Func>, 12> kFuncs{{
    {"neg", Func::neg},
    {"sin", Func::sin},
    {"cos", Func::cos},
    {"tan", Func::tan},
    {"sinh", Func::sinh},
    {"cosh", Func::cosh},
    {"tanh", Func::tanh},
    {"exp", Func::exp},
    {"log", Func::log},
    {"sqrt", Func::sqrt},
    {"erf", Func::erf},
    {"abs", Func::abs},
}};

NodePtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::constant;
  n->value = v;
  return n;
}

NodePtr make_var(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::variable;
  n->name = std::move(name);
  return n;
}

NodePtr make_unary(Func f, NodePtr arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::unary;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double checked(double v, std::string_view what) {
  if (!std::isfinite(v)) throw DomainError("non-finite result in " + std::string(what));
  return v;
}

double apply_func(Func f, double a) {
  switch (f) {
    case Func::neg: return -a;
    case Func::sin: return checked(std::sin(a), "sin");
    case Func::cos: return checked(std::cos(a), "cos");
    case Func::tan: return checked(std::tan(a), "tan");
    case Func::sinh: return checked(std::sinh(a), "sinh");
    case Func::cosh: return checked(std::cosh(a), "cosh");
    case Func::tanh: return std::tanh(a);
    case Func::exp: return checked(std::exp(a), "exp");
    case Func::log:
      if (!(a > 0.0)) throw DomainError("log of non-positive value");
      return std::log(a);
    case Func::sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(a);
    case Func::erf: return std::erf(a);
    case Func::abs: return std::fabs(a);
  }
  return a;
}

double apply_binary(char op, double a, double b) {
  switch (op) {
    case '+': return checked(a + b, "+");
    case '-': return checked(a - b, "-");
    case '*': return checked(a * b, "*");
    case '/':
      if (b == 0.0) throw DomainError("division by zero");
      return checked(a / b, "/");
    case '^':
      if (a < 0.0 && std::trunc(b) != b) throw DomainError("negative base with non-integer exponent");
      if (a == 0.0 && b < 0.0) throw DomainError("division by zero in power");
      return checked(std::pow(a, b), "^");
  }
  throw DomainError("unknown operator");
}

template <typename Lookup>
double eval_node(const ExprNode& n, const Lookup& lookup) {
  switch (n.kind) {
    case ExprNode::Kind::constant: return n.value;
    case ExprNode::Kind::variable: return lookup(n);
    case ExprNode::Kind::unary: return apply_func(n.func, eval_node(*n.lhs, lookup));
    case ExprNode::Kind::binary:
      return apply_binary(n.op, eval_node(*n.lhs, lookup), eval_node(*n.rhs, lookup));
  }
  return 0.0;
}

void collect_vars(const ExprNode& n, std::set<std::string>& out) {
  if (n.kind == ExprNode::Kind::variable) out.insert(n.name);
  if (n.lhs) collect_vars(*n.lhs, out);
  if (n.rhs) collect_vars(*n.rhs, out);
}

void print(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::constant: out += format_double(n.value); break;
    case ExprNode::Kind::variable: out += n.name; break;
    case ExprNode::Kind::unary:
      if (n.func == Func::neg) {
        out += "(-";
        print(*n.lhs, out);
        out += ')';
      } else {
        out += func_name(n.func);
        out += '(';
        print(*n.lhs, out);
        out += ')';
      }
      break;
    case ExprNode::Kind::binary:
      out += '(';
      print(*n.lhs, out);
      out += n.op;
      print(*n.rhs, out);
      out += ')';
      break;
  }
}

std::string_view op_name(char op) {
  switch (op) {
    case '+': return "Add";
    case '-': return "Sub";
    case '*': return "Mul";
    case '/': return "Div";
    default: return "Pow";
  }
}

void dump(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::constant:
      out += "Const ";
      out += format_double(n.value);
      break;
    case ExprNode::Kind::variable:
      out += "Var ";
      out += n.name;
      break;
    case ExprNode::Kind::unary: {
      std::string name(func_name(n.func));
      name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
      out += name;
      out += '(';
      dump(*n.lhs, out);
      out += ')';
      break;
    }
    case ExprNode::Kind::binary:
      out += op_name(n.op);
      out += '(';
      dump(*n.lhs, out);
      out += ", ";
      dump(*n.rhs, out);
      out += ')';
      break;
  }
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprNode::Kind::constant:
      return std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
    case ExprNode::Kind::variable: return a.name == b.name;
    case ExprNode::Kind::unary: return a.func == b.func && equal_nodes(*a.lhs, *b.lhs);
    case ExprNode::Kind::binary:
      return a.op == b.op && equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  }
  return false;
}

NodePtr resolve_slots(const NodePtr& n, std::span<const std::string> vars) {
  auto copy = std::make_shared<ExprNode>(*n);
  if (n->kind == ExprNode::Kind::variable) {
    auto it = std::find(vars.begin(), vars.end(), n->name);
    if (it == vars.end()) throw DomainError("unbound variable '" + n->name + "'");
    copy->slot = static_cast<int>(it - vars.begin());
  }
  if (n->lhs) copy->lhs = resolve_slots(n->lhs, vars);
  if (n->rhs) copy->rhs = resolve_slots(n->rhs, vars);
  return copy;
}

NodePtr substitute_node(const NodePtr& n, const Bindings& values) {
  if (n->kind == ExprNode::Kind::variable) {
    auto it = values.find(n->name);
    return it == values.end() ? n : make_const(it->second);
  }
  if (n->kind == ExprNode::Kind::constant) return n;
  auto copy = std::make_shared<ExprNode>(*n);
  copy->lhs = substitute_node(n->lhs, values);
  if (n->rhs) copy->rhs = substitute_node(n->rhs, values);
  return copy;
}

}  // namespace

std::string_view func_name(Func f) {
  for (const auto& [name, func] : kFuncs)
    if (func == f) return name;
  return "?";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr run() {
    auto root = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return Expr(std::move(root));
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, pos_); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary('+', lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary('-', lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    auto lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary('*', lhs, parse_factor());
      } else if (accept('/')) {
        lhs = make_binary('/', lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_factor() {
    if (accept('-')) return make_unary(Func::neg, parse_power());
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_atom();
    if (accept('^')) return make_binary('^', base, parse_power());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail("malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail("malformed exponent");
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc{} || ptr != src_.data() + pos_ || !std::isfinite(value)) {
      pos_ = start;
      fail("number out of range");
    }
    return make_const(value);
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      auto it = std::find_if(kFuncs.begin(), kFuncs.end(),
                             [&](const auto& entry) { return entry.first == name; });
      if (it == kFuncs.end()) {
        pos_ = start;
        fail("unknown function '" + name + "'");
      }
      ++pos_;
      auto arg = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return make_unary(it->second, std::move(arg));
    }
    return make_var(std::move(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(std::string_view source) { return Parser(source).run(); }

Expr Expr::constant(double value) { return Expr(make_const(value)); }

Expr Expr::variable(std::string name) { return Expr(make_var(std::move(name))); }

double Expr::eval(const Bindings& bindings) const {
  return eval_node(*root_, [&](const ExprNode& n) {
    auto it = bindings.find(n.name);
    if (it == bindings.end()) throw DomainError("unbound variable '" + n.name + "'");
    return it->second;
  });
}

std::vector<std::string> Expr::free_vars() const {
  std::set<std::string> names;
  collect_vars(*root_, names);
  std::vector<std::string> out;
  if (names.erase("x")) out.emplace_back("x");
  out.insert(out.end(), names.begin(), names.end());
  return out;
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

std::string Expr::tree() const {
  std::string out;
  dump(*root_, out);
  return out;
}

Expr Expr::substitute(const Bindings& values) const { return Expr(substitute_node(root_, values)); }

bool Expr::structurally_equal(const Expr& other) const { return equal_nodes(*root_, *other.root_); }

CompiledExpr::CompiledExpr(const Expr& expr, std::span<const std::string> variables)
    : root_(resolve_slots(expr.root_, variables)), arity_(variables.size()) {}

double CompiledExpr::operator()(std::span<const double> values) const {
  if (values.size() != arity_) throw ShapeError("compiled expression arity mismatch");
  return eval_node(*root_, [&](const ExprNode& n) { return values[static_cast<std::size_t>(n.slot)]; });
}

}  // namespace dnni
