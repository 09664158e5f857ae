#pragma once

// Arithmetic expressions used for global sequence variables and block
// parameters.
//
// Grammar, lowest to highest precedence:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// So "-2^2" is -(2^2), "2^3^2" is 2^(3^2) and "a-b-c" is (a-b)-c.

#include "mrseq/error.hpp"

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mrseq::expr {

enum class BinaryOp { add, sub, mul, div, pow };

struct Node;
using NodePtr = std::shared_ptr<Node const>;

// Parsed literals are never negative; a leading '-' becomes a Negate node.
struct Number
{
  double value = 0.0;
};
struct Identifier
{
  std::string name;
};
struct Negate
{
  NodePtr operand;
};
struct Binary
{
  BinaryOp op;
  NodePtr  lhs;
  NodePtr  rhs;
};
struct Call
{
  std::string          function;
  std::vector<NodePtr> args;
};

struct Node
{
  std::variant<Number, Identifier, Negate, Binary, Call> value;
};

NodePtr make_number(double v);
NodePtr make_identifier(std::string name);
NodePtr make_negate(NodePtr operand);
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
NodePtr make_call(std::string function, std::vector<NodePtr> args);

// Structural equality; literal values compare bit-for-bit.
bool equal(Node const &a, Node const &b);

class SyntaxError : public Error
{
public:
  SyntaxError(std::size_t offset, std::string expected, std::string_view source);

  std::size_t        offset() const noexcept { return offset_; }
  std::string const &expected() const noexcept { return expected_; }

private:
  std::size_t offset_;
  std::string expected_;
};

class EvalError : public Error
{
public:
  using Error::Error;
};

class UnknownIdentifier : public EvalError
{
public:
  explicit UnknownIdentifier(std::string name);
  std::string const &name() const noexcept { return name_; }

private:
  std::string name_;
};

class CyclicDependency : public EvalError
{
public:
  explicit CyclicDependency(std::vector<std::string> cycle);
  // Names along the cycle in dependency order, first name not repeated.
  std::vector<std::string> const &cycle() const noexcept { return cycle_; }

private:
  std::vector<std::string> cycle_;
};

class DomainError : public EvalError
{
public:
  using EvalError::EvalError;
};

class NonFinite : public EvalError
{
public:
  using EvalError::EvalError;
};

class Expression
{
public:
  Expression();  // the literal "0"
  explicit Expression(std::string_view source);  // throws SyntaxError
  Expression(std::string source, NodePtr root);

  std::string const &source() const noexcept { return source_; }
  Node const        &ast() const noexcept { return *root_; }
  NodePtr const     &root() const noexcept { return root_; }

  // Compares syntax trees, not source text.
  friend bool operator==(Expression const &a, Expression const &b) { return equal(a.ast(), b.ast()); }

private:
  std::string source_;
  NodePtr     root_;
};

Expression parse(std::string_view source);

// Canonical text with the minimum parentheses needed to re-parse to the same tree.
std::string print(Node const &node);

// Shortest text that parses back to exactly `v` (v must be finite, >= 0).
std::string format_number(double v);

// Identifiers referenced by the expression, excluding called function names.
std::set<std::string> free_identifiers(Node const &node);
inline std::set<std::string> free_identifiers(Expression const &e) { return free_identifiers(e.ast()); }

bool is_valid_name(std::string_view name);
bool is_function_name(std::string_view name);

class ScopeError : public Error
{
public:
  using Error::Error;
};

// Ordered user variables plus the set of reserved names they may not shadow.
class VariableScope
{
public:
  VariableScope();

  void define(std::string name, Expression value);
  // Replaces the definition of an existing variable.
  void set(std::string const &name, Expression value);
  void reserve(std::string name);

  bool              is_reserved(std::string_view name) const;
  Expression const *find(std::string_view name) const;

  std::vector<std::pair<std::string, Expression>> const &entries() const noexcept { return entries_; }
  std::set<std::string> const                           &reserved() const noexcept { return reserved_; }

  friend bool operator==(VariableScope const &, VariableScope const &) = default;

private:
  std::vector<std::pair<std::string, Expression>> entries_;
  std::set<std::string>                           reserved_;
};

// Values for reserved names other than `gamma` (loop counters).
struct Binding
{
  std::string name;
  double      value;
};
using Bindings = std::vector<Binding>;

// Evaluates expressions against a scope. Variables that do not touch any
// binding are memoized for the lifetime of the evaluator; the rest are
// memoized per call. Not thread-safe; the free `evaluate` is.
class Evaluator
{
public:
  explicit Evaluator(VariableScope const &scope);

  double evaluate(Expression const &e, Bindings const &bindings = {});
  double variable(std::string const &name, Bindings const &bindings = {});

  // Throws CyclicDependency if any variables of the scope form a cycle.
  void check_acyclic() const;

private:
  struct Frame;
  double eval_node(Node const &n, Frame &frame, bool &uses_binding);
  double eval_variable(std::string const &name, Frame &frame, bool &uses_binding);

  VariableScope const                  *scope_;
  std::vector<std::pair<std::string, double>> memo_;
};

double evaluate(Expression const &e, VariableScope const &scope, Bindings const &bindings = {});

// Every scope variable and unresolved identifier reachable from `e`
// through variable definitions. Stops at cycles without throwing.
std::set<std::string> transitive_identifiers(Expression const &e, VariableScope const &scope);

} // namespace mrseq::expr
