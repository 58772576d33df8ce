#pragma once

#include <map>
#include <memory>
#include <string>

#include <Eigen/Dense>

namespace slowfast {

// Compiled scalar expression in the variables x1, x2, x3.
// Grammar: + - * / ^, unary minus, parentheses, numeric literals, named
// constants (pi, e and user parameters) and the functions
// sin cos tan exp log sqrt abs tanh atan atan2 pow min max.
class Expression {
 public:
  struct Node;

  Expression() = default;
  static Expression parse(const std::string& text,
                          const std::map<std::string, double>& parameters = {});

  double operator()(const Eigen::Vector3d& x) const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace slowfast
