#include "mrseq/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace mrseq::expr {

namespace {

// Binding strength of the construct at the root of a node.
enum Level { sum = 1, product = 2, unary = 3, power = 4, atom = 5 };

int level(Node const &n)
{
  if (auto const *b = std::get_if<Binary>(&n.value)) {
    switch (b->op) {
    case BinaryOp::add:
    case BinaryOp::sub: return sum;
    case BinaryOp::mul:
    case BinaryOp::div: return product;
    case BinaryOp::pow: return power;
    }
  }
  if (std::holds_alternative<Negate>(n.value)) { return unary; }
  return atom;
}

char op_char(BinaryOp op)
{
  switch (op) {
  case BinaryOp::add: return '+';
  case BinaryOp::sub: return '-';
  case BinaryOp::mul: return '*';
  case BinaryOp::div: return '/';
  case BinaryOp::pow: return '^';
  }
  return '?';
}

void emit(Node const &n, std::string &out);

void emit_wrapped(Node const &n, bool parens, std::string &out)
{
  if (parens) { out += '('; }
  emit(n, out);
  if (parens) { out += ')'; }
}

void emit(Node const &n, std::string &out)
{
  std::visit(
    [&](auto const &x) {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, Number>) {
        out += format_number(x.value);
      } else if constexpr (std::is_same_v<T, Identifier>) {
        out += x.name;
      } else if constexpr (std::is_same_v<T, Negate>) {
        out += '-';
        emit_wrapped(*x.operand, level(*x.operand) < unary, out);
      } else if constexpr (std::is_same_v<T, Binary>) {
        int const self = level(n);
        if (x.op == BinaryOp::pow) {
          emit_wrapped(*x.lhs, level(*x.lhs) <= power, out);
          out += '^';
          emit_wrapped(*x.rhs, level(*x.rhs) < unary, out);
        } else {
          emit_wrapped(*x.lhs, level(*x.lhs) < self, out);
          out += op_char(x.op);
          emit_wrapped(*x.rhs, level(*x.rhs) <= self, out);
        }
      } else {
        out += x.function;
        out += '(';
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          if (i) { out += ','; }
          emit(*x.args[i], out);
        }
        out += ')';
      }
    },
    n.value);
}

void collect(Node const &n, std::set<std::string> &names)
{
  std::visit(
    [&](auto const &x) {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, Identifier>) {
        names.insert(x.name);
      } else if constexpr (std::is_same_v<T, Negate>) {
        collect(*x.operand, names);
      } else if constexpr (std::is_same_v<T, Binary>) {
        collect(*x.lhs, names);
        collect(*x.rhs, names);
      } else if constexpr (std::is_same_v<T, Call>) {
        for (auto const &a : x.args) { collect(*a, names); }
      }
    },
    n.value);
}

} // namespace

std::string format_number(double v)
{
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) { throw Error("cannot format number"); }
  return std::string(buf.data(), ptr);
}

std::string print(Node const &node)
{
  std::string out;
  emit(node, out);
  return out;
}

std::set<std::string> free_identifiers(Node const &node)
{
  std::set<std::string> names;
  collect(node, names);
  return names;
}

} // namespace mrseq::expr
