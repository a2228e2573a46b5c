#pragma once

// Scalar expressions in x, y, z for problem files, e.g.
//   "exp(0.5*(x^2 + y^2)) * sqrt(1 + x^2 + y^2)"
// Grammar: + - * / ^ (right associative), unary minus, parentheses,
// numbers, pi, and exp log sqrt sin cos tan abs.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "fne/errors.hpp"
#include "fne/geometry_field.hpp"

namespace fne {

class Expression {
 public:
  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.text_ = text;
    e.root_ = p.sum();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    return e;
  }

  double operator()(const Point& x) const { return eval(*root_, x); }
  const std::string& text() const noexcept { return text_; }

 private:
  enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Fn };
  enum class Fn { Exp, Log, Sqrt, Sin, Cos, Tan, Abs };

  struct Node {
    Op op = Op::Num;
    double value = 0.0;
    int var = 0;
    Fn fn = Fn::Exp;
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw ParseError("expression \"" + s + "\" at column " + std::to_string(pos + 1) + ": " + what);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr sum() {
      NodePtr l = product();
      for (;;) {
        if (eat('+')) l = make(Op::Add, l, product());
        else if (eat('-')) l = make(Op::Sub, l, product());
        else return l;
      }
    }
    NodePtr product() {
      NodePtr l = unary();
      for (;;) {
        if (eat('*')) l = make(Op::Mul, l, unary());
        else if (eat('/')) l = make(Op::Div, l, unary());
        else return l;
      }
    }
    NodePtr unary() {
      if (eat('-')) return make(Op::Neg, unary());
      if (eat('+')) return unary();
      return power();
    }
    NodePtr power() {
      NodePtr base = atom();
      if (eat('^')) return make(Op::Pow, base, unary());
      return base;
    }
    NodePtr atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      if (eat('(')) {
        NodePtr e = sum();
        if (!eat(')')) fail("expected ')'");
        return e;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string id = s.substr(start, pos - start);
        if (id == "x" || id == "y" || id == "z") {
          auto n = std::make_shared<Node>();
          n->op = Op::Var;
          n->var = id[0] - 'x';
          return n;
        }
        if (id == "pi") {
          auto n = std::make_shared<Node>();
          n->value = std::numbers::pi;
          return n;
        }
        static const std::vector<std::pair<std::string, Fn>> fns{
            {"exp", Fn::Exp}, {"log", Fn::Log}, {"sqrt", Fn::Sqrt}, {"sin", Fn::Sin},
            {"cos", Fn::Cos}, {"tan", Fn::Tan}, {"abs", Fn::Abs}};
        for (const auto& [name, fn] : fns) {
          if (name != id) continue;
          if (!eat('(')) fail("expected '(' after " + id);
          auto n = std::make_shared<Node>();
          n->op = Op::Fn;
          n->fn = fn;
          n->a = sum();
          if (!eat(')')) fail("expected ')'");
          return n;
        }
        pos = start;
        fail("unknown identifier '" + id + "'");
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
  };

  static double eval(const Node& n, const Point& x) {
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var: return x[static_cast<std::size_t>(n.var)];
      case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
      case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
      case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
      case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
      case Op::Pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
      case Op::Neg: return -eval(*n.a, x);
      case Op::Fn: {
        const double v = eval(*n.a, x);
        switch (n.fn) {
          case Fn::Exp: return std::exp(v);
          case Fn::Log: return std::log(v);
          case Fn::Sqrt: return std::sqrt(v);
          case Fn::Sin: return std::sin(v);
          case Fn::Cos: return std::cos(v);
          case Fn::Tan: return std::tan(v);
          case Fn::Abs: return std::fabs(v);
        }
      }
    }
    return 0.0;
  }

  std::string text_;
  NodePtr root_;
};

}  // namespace fne
