#include "slowfast/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "slowfast/errors.hpp"

namespace slowfast {

struct Expression::Node {
  enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call1, Call2 };
  Op op = Op::Const;
  double value = 0.0;
  int var = 0;
  double (*f1)(double) = nullptr;
  double (*f2)(double, double) = nullptr;
  std::shared_ptr<const Node> a, b;

  double eval(const Eigen::Vector3d& x) const {
    switch (op) {
      case Op::Const: return value;
      case Op::Var: return x[var];
      case Op::Neg: return -a->eval(x);
      case Op::Add: return a->eval(x) + b->eval(x);
      case Op::Sub: return a->eval(x) - b->eval(x);
      case Op::Mul: return a->eval(x) * b->eval(x);
      case Op::Div: return a->eval(x) / b->eval(x);
      case Op::Pow: {
        const double base = a->eval(x);
        if (b->op == Op::Const && b->value == std::round(b->value) && std::abs(b->value) <= 16) {
          int n = static_cast<int>(b->value);
          double r = 1.0, p = base;
          for (int m = std::abs(n); m > 0; m >>= 1) {
            if (m & 1) r *= p;
            p *= p;
          }
          return n < 0 ? 1.0 / r : r;
        }
        return std::pow(base, b->eval(x));
      }
      case Op::Call1: return f1(a->eval(x));
      case Op::Call2: return f2(a->eval(x), b->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

double f_sin(double v) { return std::sin(v); }
double f_cos(double v) { return std::cos(v); }
double f_tan(double v) { return std::tan(v); }
double f_exp(double v) { return std::exp(v); }
double f_log(double v) { return std::log(v); }
double f_sqrt(double v) { return std::sqrt(v); }
double f_abs(double v) { return std::abs(v); }
double f_tanh(double v) { return std::tanh(v); }
double f_atan(double v) { return std::atan(v); }
double f_atan2(double y, double x) { return std::atan2(y, x); }
double f_pow(double a, double b) { return std::pow(a, b); }
double f_min(double a, double b) { return std::min(a, b); }
double f_max(double a, double b) { return std::max(a, b); }

class Parser {
 public:
  Parser(const std::string& s, const std::map<std::string, double>& params)
      : s_(s), params_(params) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  const std::map<std::string, double>& params_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Config,
                "expression '" + s_ + "' at column " + std::to_string(pos_) + ": " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Node::Op op, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  static NodePtr constant(double v) {
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Node::Op::Add, lhs, term());
      else if (accept('-')) lhs = make(Node::Op::Sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Node::Op::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Node::Op::Div, lhs, unary());
      else return lhs;
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Node::Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Node::Op::Pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      skip();
      if (pos_ < s_.size() && s_[pos_] == '(') return call(name);
      if (name == "x1" || name == "x") return var(0);
      if (name == "x2" || name == "y") return var(1);
      if (name == "x3") return var(2);
      if (name == "pi") return constant(std::numbers::pi);
      if (name == "e") return constant(std::numbers::e);
      auto it = params_.find(name);
      if (it == params_.end()) fail("unknown identifier '" + name + "'");
      return constant(it->second);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  static NodePtr var(int i) {
    auto n = std::make_shared<Node>();
    n->op = Node::Op::Var;
    n->var = i;
    return n;
  }
  NodePtr call(const std::string& name) {
    static const std::map<std::string, double (*)(double)> one = {
        {"sin", f_sin},   {"cos", f_cos},   {"tan", f_tan},   {"exp", f_exp},
        {"log", f_log},   {"sqrt", f_sqrt}, {"abs", f_abs},   {"tanh", f_tanh},
        {"atan", f_atan}};
    static const std::map<std::string, double (*)(double, double)> two = {
        {"atan2", f_atan2}, {"pow", f_pow}, {"min", f_min}, {"max", f_max}};
    accept('(');
    std::vector<NodePtr> args;
    if (!accept(')')) {
      do {
        args.push_back(expr());
      } while (accept(','));
      if (!accept(')')) fail("expected ')' after arguments");
    }
    auto n = std::make_shared<Node>();
    if (auto it = one.find(name); it != one.end()) {
      if (args.size() != 1) fail(name + " takes one argument");
      n->op = Node::Op::Call1;
      n->f1 = it->second;
      n->a = args[0];
      return n;
    }
    if (auto it = two.find(name); it != two.end()) {
      if (args.size() != 2) fail(name + " takes two arguments");
      n->op = Node::Op::Call2;
      n->f2 = it->second;
      n->a = args[0];
      n->b = args[1];
      return n;
    }
    fail("unknown function '" + name + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& text,
                             const std::map<std::string, double>& parameters) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, parameters).parse();
  return e;
}

double Expression::operator()(const Eigen::Vector3d& x) const {
  if (!root_) throw Error(ErrorKind::Config, "empty expression");
  return root_->eval(x);
}

}  // namespace slowfast
