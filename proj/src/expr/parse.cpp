#include "mrseq/expr.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

namespace mrseq::expr {

namespace {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token
{
  Tok         kind;
  std::size_t offset;
  std::size_t length = 0;
  double      number = 0.0;
};

int function_arity(std::string_view name)
{
  static constexpr std::pair<std::string_view, int> table[] = {
    {"sin", 1}, {"cos", 1}, {"tan", 1},   {"sqrt", 1}, {"exp", 1}, {"log", 1},
    {"abs", 1}, {"floor", 1}, {"ceil", 1}, {"min", 2}, {"max", 2},
  };
  for (auto const &[n, a] : table) {
    if (n == name) { return a; }
  }
  return -1;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Parser
{
public:
  explicit Parser(std::string_view src)
    : src_(src)
  {
    advance();
  }

  NodePtr parse_all()
  {
    NodePtr n = parse_expr();
    if (tok_.kind != Tok::end) { fail("operator or end of input"); }
    return n;
  }

private:
  [[noreturn]] void fail(std::string expected, std::size_t at) const { throw SyntaxError(at, std::move(expected), src_); }
  [[noreturn]] void fail(std::string expected) const { fail(std::move(expected), tok_.offset); }

  void lex_number(std::size_t start)
  {
    std::size_t i = start;
    while (i < src_.size() && digit(src_[i])) { ++i; }
    if (i < src_.size() && src_[i] == '.') {
      ++i;
      while (i < src_.size() && digit(src_[i])) { ++i; }
    }
    if (i == start + 1 && src_[start] == '.') { fail("digit", i); }
    if (i < src_.size() && (src_[i] == 'e' || src_[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) { ++j; }
      if (j >= src_.size() || !digit(src_[j])) { fail("exponent digits", j); }
      while (j < src_.size() && digit(src_[j])) { ++j; }
      i = j;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + i, v);
    if (ec != std::errc{} || ptr != src_.data() + i || !std::isfinite(v)) { fail("number in range", start); }
    tok_ = Token{Tok::number, start, i - start, v};
    pos_ = i;
  }

  void advance()
  {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) { ++pos_; }
    if (pos_ >= src_.size()) {
      tok_ = Token{Tok::end, src_.size()};
      return;
    }
    char const        c = src_[pos_];
    std::size_t const start = pos_;
    if (digit(c) || c == '.') {
      lex_number(start);
      return;
    }
    if (ident_start(c)) {
      std::size_t i = start + 1;
      while (i < src_.size() && ident_char(src_[i])) { ++i; }
      tok_ = Token{Tok::ident, start, i - start};
      pos_ = i;
      return;
    }
    Tok k;
    switch (c) {
    case '+': k = Tok::plus; break;
    case '-': k = Tok::minus; break;
    case '*': k = Tok::star; break;
    case '/': k = Tok::slash; break;
    case '^': k = Tok::caret; break;
    case '(': k = Tok::lparen; break;
    case ')': k = Tok::rparen; break;
    case ',': k = Tok::comma; break;
    default: fail("operator, number or identifier", start);
    }
    tok_ = Token{k, start, 1};
    pos_ = start + 1;
  }

  NodePtr parse_expr()
  {
    NodePtr lhs = parse_term();
    while (tok_.kind == Tok::plus || tok_.kind == Tok::minus) {
      BinaryOp op = tok_.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub;
      advance();
      lhs = make_binary(op, lhs, parse_term());
    }
    return lhs;
  }

  NodePtr parse_term()
  {
    NodePtr lhs = parse_unary();
    while (tok_.kind == Tok::star || tok_.kind == Tok::slash) {
      BinaryOp op = tok_.kind == Tok::star ? BinaryOp::mul : BinaryOp::div;
      advance();
      lhs = make_binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  NodePtr parse_unary()
  {
    if (tok_.kind == Tok::minus) {
      advance();
      return make_negate(parse_unary());
    }
    if (tok_.kind == Tok::plus) {
      advance();
      return parse_unary();
    }
    return parse_power();
  }

  NodePtr parse_power()
  {
    NodePtr base = parse_primary();
    if (tok_.kind == Tok::caret) {
      advance();
      return make_binary(BinaryOp::pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary()
  {
    switch (tok_.kind) {
    case Tok::number: {
      double v = tok_.number;
      advance();
      return make_number(v);
    }
    case Tok::ident: {
      std::string name(src_.substr(tok_.offset, tok_.length));
      std::size_t name_at = tok_.offset;
      advance();
      if (tok_.kind != Tok::lparen) { return make_identifier(std::move(name)); }
      int const arity = function_arity(name);
      if (arity < 0) { fail("known function name", name_at); }
      std::size_t const open_at = tok_.offset;
      advance();
      std::vector<NodePtr> args;
      args.push_back(parse_expr());
      while (tok_.kind == Tok::comma) {
        advance();
        args.push_back(parse_expr());
      }
      if (tok_.kind != Tok::rparen) { fail("',' or ')'"); }
      if (static_cast<int>(args.size()) != arity) {
        fail(fmt::format("{} argument{} for {}", arity, arity == 1 ? "" : "s", name), open_at);
      }
      advance();
      return make_call(std::move(name), std::move(args));
    }
    case Tok::lparen: {
      advance();
      NodePtr inner = parse_expr();
      if (tok_.kind != Tok::rparen) { fail("')'"); }
      advance();
      return inner;
    }
    default: fail("expression");
    }
  }

  std::string_view src_;
  std::size_t      pos_ = 0;
  Token            tok_{Tok::end, 0};
};

} // namespace

SyntaxError::SyntaxError(std::size_t offset, std::string expected, std::string_view source)
  : Error(fmt::format("syntax error at offset {} in \"{}\": expected {}", offset, source, expected))
  , offset_(offset)
  , expected_(std::move(expected))
{
}

UnknownIdentifier::UnknownIdentifier(std::string name)
  : EvalError(fmt::format("unknown identifier '{}'", name))
  , name_(std::move(name))
{
}

CyclicDependency::CyclicDependency(std::vector<std::string> cycle)
  : EvalError(fmt::format("cyclic variable dependency: {} -> {}", fmt::join(cycle, " -> "), cycle.empty() ? "" : cycle.front()))
  , cycle_(std::move(cycle))
{
}

NodePtr make_number(double v) { return std::make_shared<Node const>(Node{Number{v}}); }
NodePtr make_identifier(std::string name) { return std::make_shared<Node const>(Node{Identifier{std::move(name)}}); }
NodePtr make_negate(NodePtr operand) { return std::make_shared<Node const>(Node{Negate{std::move(operand)}}); }
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs)
{
  return std::make_shared<Node const>(Node{Binary{op, std::move(lhs), std::move(rhs)}});
}
NodePtr make_call(std::string function, std::vector<NodePtr> args)
{
  return std::make_shared<Node const>(Node{Call{std::move(function), std::move(args)}});
}

bool equal(Node const &a, Node const &b)
{
  if (a.value.index() != b.value.index()) { return false; }
  return std::visit(
    [&](auto const &x) -> bool {
      using T = std::decay_t<decltype(x)>;
      auto const &y = std::get<T>(b.value);
      if constexpr (std::is_same_v<T, Number>) {
        return std::bit_cast<std::uint64_t>(x.value) == std::bit_cast<std::uint64_t>(y.value);
      } else if constexpr (std::is_same_v<T, Identifier>) {
        return x.name == y.name;
      } else if constexpr (std::is_same_v<T, Negate>) {
        return equal(*x.operand, *y.operand);
      } else if constexpr (std::is_same_v<T, Binary>) {
        return x.op == y.op && equal(*x.lhs, *y.lhs) && equal(*x.rhs, *y.rhs);
      } else {
        if (x.function != y.function || x.args.size() != y.args.size()) { return false; }
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          if (!equal(*x.args[i], *y.args[i])) { return false; }
        }
        return true;
      }
    },
    a.value);
}

Expression parse(std::string_view source) { return Expression(source); }

Expression::Expression()
  : source_("0")
  , root_(make_number(0.0))
{
}

Expression::Expression(std::string_view source)
  : source_(source)
  , root_(Parser(source_).parse_all())
{
}

Expression::Expression(std::string source, NodePtr root)
  : source_(std::move(source))
  , root_(std::move(root))
{
}

bool is_valid_name(std::string_view name)
{
  if (name.empty() || !ident_start(name.front())) { return false; }
  for (char c : name) {
    if (!ident_char(c)) { return false; }
  }
  return true;
}

bool is_function_name(std::string_view name) { return function_arity(name) >= 0; }

} // namespace mrseq::expr
