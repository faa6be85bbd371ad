#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpd {

// A real-valued expression over chart coordinates, compiled to postfix form.
//
// Grammar (whitespace-insensitive):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          right-associative, binds tighter than unary minus
//   primary := number | identifier | func '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt
//
// Identifiers are x1 ... x{n-1} and t, bound to coordinate slots 0 ... n-1.
class Expression {
 public:
  static Expression parse(std::string_view source, int dimension);

  double evaluate(std::span<const double> coordinates) const;

  const std::string& source() const { return source_; }

 private:
  enum class Op : unsigned char { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };
  struct Instr {
    Op op;
    double value = 0.0;
    int slot = 0;
  };

  friend class ExpressionParser;

  std::string source_;
  std::vector<Instr> code_;
  int max_stack_ = 0;
};

}  // namespace cpd
