#include "mrseq/constants.hpp"
#include "mrseq/expr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>

namespace mrseq::expr {

VariableScope::VariableScope() { reserved_.insert("gamma"); }

void VariableScope::define(std::string name, Expression value)
{
  if (!is_valid_name(name)) { throw ScopeError(fmt::format("invalid variable name '{}'", name)); }
  if (is_reserved(name)) { throw ScopeError(fmt::format("variable '{}' shadows a reserved name", name)); }
  if (find(name)) { throw ScopeError(fmt::format("duplicate variable '{}'", name)); }
  entries_.emplace_back(std::move(name), std::move(value));
}

void VariableScope::set(std::string const &name, Expression value)
{
  for (auto &[n, e] : entries_) {
    if (n == name) {
      e = std::move(value);
      return;
    }
  }
  throw ScopeError(fmt::format("no variable '{}'", name));
}

void VariableScope::reserve(std::string name)
{
  if (find(name)) { throw ScopeError(fmt::format("variable '{}' shadows a reserved name", name)); }
  reserved_.insert(std::move(name));
}

bool VariableScope::is_reserved(std::string_view name) const { return reserved_.contains(std::string(name)); }

Expression const *VariableScope::find(std::string_view name) const
{
  for (auto const &[n, e] : entries_) {
    if (n == name) { return &e; }
  }
  return nullptr;
}

struct Evaluator::Frame
{
  Bindings const                             &bindings;
  std::vector<std::string>                    visiting;
  std::vector<std::pair<std::string, double>> local_memo;
};

namespace {

double checked(double v, char const *what)
{
  if (std::isnan(v)) { throw DomainError(fmt::format("{} is undefined", what)); }
  if (!std::isfinite(v)) { throw NonFinite(fmt::format("{} is not finite", what)); }
  return v;
}

double const *lookup(std::vector<std::pair<std::string, double>> const &memo, std::string const &name)
{
  for (auto const &[n, v] : memo) {
    if (n == name) { return &v; }
  }
  return nullptr;
}

double apply_call(std::string const &f, std::vector<double> const &a)
{
  if (f == "sin") { return checked(std::sin(a[0]), "sin"); }
  if (f == "cos") { return checked(std::cos(a[0]), "cos"); }
  if (f == "tan") { return checked(std::tan(a[0]), "tan"); }
  if (f == "sqrt") {
    if (a[0] < 0) { throw DomainError(fmt::format("sqrt of negative value {}", a[0])); }
    return std::sqrt(a[0]);
  }
  if (f == "exp") { return checked(std::exp(a[0]), "exp"); }
  if (f == "log") {
    if (a[0] <= 0) { throw DomainError(fmt::format("log of non-positive value {}", a[0])); }
    return std::log(a[0]);
  }
  if (f == "abs") { return std::abs(a[0]); }
  if (f == "floor") { return std::floor(a[0]); }
  if (f == "ceil") { return std::ceil(a[0]); }
  if (f == "min") { return std::min(a[0], a[1]); }
  if (f == "max") { return std::max(a[0], a[1]); }
  throw EvalError(fmt::format("unknown function '{}'", f));
}

} // namespace

Evaluator::Evaluator(VariableScope const &scope)
  : scope_(&scope)
{
}

double Evaluator::evaluate(Expression const &e, Bindings const &bindings)
{
  Frame frame{bindings, {}, {}};
  bool  uses = false;
  return eval_node(e.ast(), frame, uses);
}

double Evaluator::variable(std::string const &name, Bindings const &bindings)
{
  Frame frame{bindings, {}, {}};
  bool  uses = false;
  return eval_variable(name, frame, uses);
}

double Evaluator::eval_variable(std::string const &name, Frame &frame, bool &uses_binding)
{
  for (auto const &b : frame.bindings) {
    if (b.name == name) {
      uses_binding = true;
      return b.value;
    }
  }
  if (name == "gamma") { return kGammaBar; }
  if (double const *v = lookup(memo_, name)) { return *v; }
  if (double const *v = lookup(frame.local_memo, name)) {
    uses_binding = true;
    return *v;
  }
  Expression const *def = scope_->find(name);
  if (!def) { throw UnknownIdentifier(name); }

  auto it = std::find(frame.visiting.begin(), frame.visiting.end(), name);
  if (it != frame.visiting.end()) { throw CyclicDependency(std::vector<std::string>(it, frame.visiting.end())); }
  frame.visiting.push_back(name);
  bool         inner_uses = false;
  double const value = eval_node(def->ast(), frame, inner_uses);
  frame.visiting.pop_back();

  if (inner_uses) {
    frame.local_memo.emplace_back(name, value);
    uses_binding = true;
  } else {
    memo_.emplace_back(name, value);
  }
  return value;
}

double Evaluator::eval_node(Node const &n, Frame &frame, bool &uses_binding)
{
  return std::visit(
    [&](auto const &x) -> double {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, Number>) {
        return x.value;
      } else if constexpr (std::is_same_v<T, Identifier>) {
        return eval_variable(x.name, frame, uses_binding);
      } else if constexpr (std::is_same_v<T, Negate>) {
        return -eval_node(*x.operand, frame, uses_binding);
      } else if constexpr (std::is_same_v<T, Binary>) {
        double const a = eval_node(*x.lhs, frame, uses_binding);
        double const b = eval_node(*x.rhs, frame, uses_binding);
        switch (x.op) {
        case BinaryOp::add: return checked(a + b, "sum");
        case BinaryOp::sub: return checked(a - b, "difference");
        case BinaryOp::mul: return checked(a * b, "product");
        case BinaryOp::div:
          if (b == 0.0) { throw DomainError("division by zero"); }
          return checked(a / b, "quotient");
        case BinaryOp::pow:
          if (a == 0.0 && b < 0.0) { throw DomainError("zero raised to a negative power"); }
          return checked(std::pow(a, b), "power");
        }
        throw EvalError("bad operator");
      } else {
        std::vector<double> args;
        args.reserve(x.args.size());
        for (auto const &a : x.args) { args.push_back(eval_node(*a, frame, uses_binding)); }
        return apply_call(x.function, args);
      }
    },
    n.value);
}

void Evaluator::check_acyclic() const
{
  // Three-colour DFS over the variable graph.
  std::map<std::string, int> colour;
  std::vector<std::string>   stack;

  std::function<void(std::string const &)> visit = [&](std::string const &name) {
    colour[name] = 1;
    stack.push_back(name);
    for (auto const &dep : free_identifiers(*scope_->find(name))) {
      if (!scope_->find(dep)) { continue; }
      int const c = colour[dep];
      if (c == 1) {
        auto it = std::find(stack.begin(), stack.end(), dep);
        throw CyclicDependency(std::vector<std::string>(it, stack.end()));
      }
      if (c == 0) { visit(dep); }
    }
    stack.pop_back();
    colour[name] = 2;
  };
  for (auto const &[name, e] : scope_->entries()) {
    if (colour[name] == 0) { visit(name); }
  }
}

double evaluate(Expression const &e, VariableScope const &scope, Bindings const &bindings)
{
  Evaluator ev(scope);
  return ev.evaluate(e, bindings);
}

std::set<std::string> transitive_identifiers(Expression const &e, VariableScope const &scope)
{
  std::set<std::string>    seen;
  std::vector<std::string> pending;
  for (auto const &n : free_identifiers(e)) { pending.push_back(n); }
  while (!pending.empty()) {
    std::string name = std::move(pending.back());
    pending.pop_back();
    if (!seen.insert(name).second) { continue; }
    if (auto const *def = scope.find(name)) {
      for (auto const &n : free_identifiers(*def)) { pending.push_back(n); }
    }
  }
  return seen;
}

} // namespace mrseq::expr
