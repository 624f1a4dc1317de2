#pragma once

#include "randbc/grid.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace randbc {

/// Arithmetic expression in the node coordinates, e.g. "1 + 0.5*exp(-50*((x-0.5)^2 + (y-0.5)^2))".
///
/// Variables: x, y (aliases x1, x2). Constants: pi, e. Operators: + - * / ^ and
/// unary minus; ^ is right-associative. Functions: exp log sqrt sin cos tan
/// tanh abs.
class Expression {
public:
    explicit Expression(std::string_view text);
    ~Expression();
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;

    double operator()(const Point& p) const;
    const std::string& text() const noexcept { return text_; }

    struct Node;

private:
    std::string text_;
    std::unique_ptr<Node> root_;
};

} // namespace randbc
