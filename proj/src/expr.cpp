#include "cpd/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "cpd/error.hpp"

namespace cpd {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::size_t position, std::vector<std::string> expected, const std::string& detail)
    : Error(Errc::ParseError, "at position " + std::to_string(position) + ": " + detail +
                                  (expected.empty() ? std::string{} : " (expected " + join(expected) + ")")),
      position_(position),
      expected_(std::move(expected)) {}

class ExpressionParser {
 public:
  ExpressionParser(std::string_view src, int dimension, Expression& out)
      : src_(src), dimension_(dimension), out_(out) {}

  void run() {
    parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail({"operator", "end of input"}, "unexpected trailing input");
    if (out_.code_.empty()) fail({"expression"}, "empty expression");
  }

 private:
  using Op = Expression::Op;

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

  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& detail) const {
    throw ParseError(pos_, std::move(expected), detail);
  }

  void emit(Op op, double value = 0.0, int slot = 0, int stack_delta = 0) {
    out_.code_.push_back({op, value, slot});
    depth_ += stack_delta;
    out_.max_stack_ = std::max(out_.max_stack_, depth_);
  }

  void parse_expr() {
    parse_term();
    for (;;) {
      if (accept('+')) {
        parse_term();
        emit(Op::Add, 0, 0, -1);
      } else if (accept('-')) {
        parse_term();
        emit(Op::Sub, 0, 0, -1);
      } else {
        return;
      }
    }
  }

  void parse_term() {
    parse_unary();
    for (;;) {
      if (accept('*')) {
        parse_unary();
        emit(Op::Mul, 0, 0, -1);
      } else if (accept('/')) {
        parse_unary();
        emit(Op::Div, 0, 0, -1);
      } else {
        return;
      }
    }
  }

  void parse_unary() {
    if (accept('-')) {
      parse_unary();
      emit(Op::Neg);
    } else if (accept('+')) {
      parse_unary();
    } else {
      parse_power();
    }
  }

  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_unary();
      emit(Op::Pow, 0, 0, -1);
    }
  }

  void parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail({"number", "identifier", "function", "'('"}, "unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_expr();
      if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      parse_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      parse_identifier();
      return;
    }
    fail({"number", "identifier", "function", "'('"}, std::string("unexpected character '") + c + "'");
  }

  void parse_number() {
    const std::size_t start = pos_;
    double value = 0.0;
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr == first) fail({"number"}, "malformed number");
    pos_ = start + static_cast<std::size_t>(ptr - first);
    emit(Op::Const, value, 0, +1);
  }

  void parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name == "t") {
      emit(Op::Var, 0, dimension_ - 1, +1);
      return;
    }
    if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec == std::errc{} && ptr == name.data() + name.size() && index >= 1 && index <= dimension_ - 1) {
        emit(Op::Var, 0, index - 1, +1);
        return;
      }
      pos_ = start;
      fail({"x1 ... x" + std::to_string(dimension_ - 1), "t"}, "unknown coordinate '" + std::string(name) + "'");
    }

    Op op;
    if (name == "sin") op = Op::Sin;
    else if (name == "cos") op = Op::Cos;
    else if (name == "exp") op = Op::Exp;
    else if (name == "log") op = Op::Log;
    else if (name == "sqrt") op = Op::Sqrt;
    else if (name == "pow") op = Op::Pow;
    else {
      pos_ = start;
      fail({"coordinate", "sin", "cos", "exp", "log", "sqrt", "pow"}, "unknown identifier '" + std::string(name) + "'");
    }

    if (!accept('(')) fail({"'('"}, "function call requires parentheses");
    parse_expr();
    if (op == Op::Pow) {
      if (!accept(',')) fail({"','"}, "pow takes two arguments");
      parse_expr();
      if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
      emit(Op::Pow, 0, 0, -1);
      return;
    }
    if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
    emit(op);
  }

  std::string_view src_;
  int dimension_;
  Expression& out_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

Expression Expression::parse(std::string_view source, int dimension) {
  Expression e;
  e.source_ = std::string(source);
  ExpressionParser(source, dimension, e).run();
  return e;
}

double Expression::evaluate(std::span<const double> x) const {
  double stack[64];
  double* sp = stack;
  if (max_stack_ > 64) throw Error(Errc::InvalidArgument, "expression nesting too deep");
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: *sp++ = in.value; break;
      case Op::Var: *sp++ = x[static_cast<std::size_t>(in.slot)]; break;
      case Op::Add: --sp; sp[-1] += sp[0]; break;
      case Op::Sub: --sp; sp[-1] -= sp[0]; break;
      case Op::Mul: --sp; sp[-1] *= sp[0]; break;
      case Op::Div: --sp; sp[-1] /= sp[0]; break;
      case Op::Pow: --sp; sp[-1] = std::pow(sp[-1], sp[0]); break;
      case Op::Neg: sp[-1] = -sp[-1]; break;
      case Op::Sin: sp[-1] = std::sin(sp[-1]); break;
      case Op::Cos: sp[-1] = std::cos(sp[-1]); break;
      case Op::Exp: sp[-1] = std::exp(sp[-1]); break;
      case Op::Log: sp[-1] = std::log(sp[-1]); break;
      case Op::Sqrt: sp[-1] = std::sqrt(sp[-1]); break;
    }
  }
  return sp[-1];
}

}  // namespace cpd
