#include "randbc/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace randbc {

struct Expression::Node {
    enum class Op { constant, x, y, neg, add, sub, mul, div, pow, call } op = Op::constant;
    double value = 0;
    double (*fn)(double) = nullptr;
    std::unique_ptr<Node> lhs, rhs;

    double eval(const Point& p) const {
        switch (op) {
        case Op::constant: return value;
        case Op::x: return p.x();
        case Op::y: return p.y();
        case Op::neg: return -lhs->eval(p);
        case Op::add: return lhs->eval(p) + rhs->eval(p);
        case Op::sub: return lhs->eval(p) - rhs->eval(p);
        case Op::mul: return lhs->eval(p) * rhs->eval(p);
        case Op::div: return lhs->eval(p) / rhs->eval(p);
        case Op::pow: return std::pow(lhs->eval(p), rhs->eval(p));
        case Op::call: return fn(lhs->eval(p));
        }
        return 0;
    }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::unique_ptr<Node>;

NodePtr make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto node = std::make_unique<Node>();
    node->op = op;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary)*
// unary  := '-' unary | power
// power  := atom ('^' unary)?
// atom   := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr root = expr();
        skip();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression '" + std::string(text_) + "': " + what + " at position " +
                                    std::to_string(pos_));
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Node::Op::add, std::move(lhs), term());
            else if (accept('-')) lhs = make(Node::Op::sub, std::move(lhs), term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Node::Op::mul, std::move(lhs), unary());
            else if (accept('/')) lhs = make(Node::Op::div, std::move(lhs), unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Node::Op::neg, unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) return make(Node::Op::pow, std::move(base), unary());
        return base;
    }

    NodePtr atom() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (accept('(')) {
            NodePtr inner = expr();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        double v = 0;
        const char* first = text_.data() + pos_;
        const auto [end, ec] = std::from_chars(first, text_.data() + text_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - first);
        auto node = make(Node::Op::constant);
        node->value = v;
        return node;
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
        const std::string id(text_.substr(start, pos_ - start));
        if (id == "x" || id == "x1") return make(Node::Op::x);
        if (id == "y" || id == "x2") return make(Node::Op::y);
        if (id == "pi" || id == "e") {
            auto node = make(Node::Op::constant);
            node->value = id == "pi" ? std::numbers::pi : std::numbers::e;
            return node;
        }
        static const std::pair<const char*, double (*)(double)> functions[] = {
            {"exp", [](double v) { return std::exp(v); }},   {"log", [](double v) { return std::log(v); }},
            {"sqrt", [](double v) { return std::sqrt(v); }}, {"sin", [](double v) { return std::sin(v); }},
            {"cos", [](double v) { return std::cos(v); }},   {"tan", [](double v) { return std::tan(v); }},
            {"tanh", [](double v) { return std::tanh(v); }}, {"abs", [](double v) { return std::abs(v); }},
        };
        for (const auto& [fname, fn] : functions) {
            if (id == fname) {
                if (!accept('(')) fail("expected '(' after " + id);
                auto node = make(Node::Op::call, expr());
                node->fn = fn;
                if (!accept(')')) fail("expected ')'");
                return node;
            }
        }
        pos_ = start;
        fail("unknown name '" + id + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

Expression::Expression(std::string_view text) : text_(text), root_(Parser(text).parse()) {}
Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::operator()(const Point& p) const { return root_->eval(p); }

} // namespace randbc
