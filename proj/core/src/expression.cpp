#include "plaplab/expression.hpp"

#include "plaplab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>

namespace plaplab {

namespace {

enum class Op {
    Const, Var, Add, Sub, Mul, Div, Pow, Neg,
    Exp, Expm1, Log, Log1p, Sqrt, Abs, Min, Max,
};

} // namespace

struct Expression::Node {
    Op op = Op::Const;
    double value = 0.0;   // Op::Const
    std::size_t var = 0;  // Op::Var
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

struct Parser {
    const std::string& src;
    const std::vector<std::string>& vars;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DomainError("expression \"" + src + "\": " + what + " at position " + std::to_string(pos));
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        while (true) {
            if (eat('+')) lhs = make_node(Op::Add, lhs, parse_term());
            else if (eat('-')) lhs = make_node(Op::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        while (true) {
            if (eat('*')) lhs = make_node(Op::Mul, lhs, parse_unary());
            else if (eat('/')) lhs = make_node(Op::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make_node(Op::Neg, parse_unary());
        eat('+');
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) return make_node(Op::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end of input");
        char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (eat('(')) {
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("invalid number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Const;
        n->value = v;
        return n;
    }

    NodePtr parse_ident() {
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        std::string name = src.substr(start, pos - start);

        if (peek() == '(') {
            eat('(');
            std::vector<NodePtr> args;
            if (peek() != ')') {
                args.push_back(parse_expr());
                while (eat(',')) args.push_back(parse_expr());
            }
            if (!eat(')')) fail("expected ')' after arguments of " + name);
            return make_call(name, args);
        }

        auto it = std::find(vars.begin(), vars.end(), name);
        if (it == vars.end()) fail("unknown variable '" + name + "'");
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Var;
        n->var = static_cast<std::size_t>(it - vars.begin());
        return n;
    }

    NodePtr make_call(const std::string& name, std::vector<NodePtr>& args) {
        auto unary = [&](Op op) {
            if (args.size() != 1) fail(name + " takes one argument");
            return make_node(op, args[0]);
        };
        auto binary = [&](Op op) {
            if (args.size() != 2) fail(name + " takes two arguments");
            return make_node(op, args[0], args[1]);
        };
        if (name == "exp") return unary(Op::Exp);
        if (name == "expm1") return unary(Op::Expm1);
        if (name == "log") return unary(Op::Log);
        if (name == "log1p") return unary(Op::Log1p);
        if (name == "sqrt") return unary(Op::Sqrt);
        if (name == "abs") return unary(Op::Abs);
        if (name == "pow") return binary(Op::Pow);
        if (name == "min") return binary(Op::Min);
        if (name == "max") return binary(Op::Max);
        fail("unknown function '" + name + "'");
    }
};

double eval_node(const Expression::Node& n, std::span<const double> v) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return v[n.var];
        case Op::Add: return eval_node(*n.a, v) + eval_node(*n.b, v);
        case Op::Sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
        case Op::Mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
        case Op::Div: return eval_node(*n.a, v) / eval_node(*n.b, v);
        case Op::Pow: return std::pow(eval_node(*n.a, v), eval_node(*n.b, v));
        case Op::Neg: return -eval_node(*n.a, v);
        case Op::Exp: return std::exp(eval_node(*n.a, v));
        case Op::Expm1: return std::expm1(eval_node(*n.a, v));
        case Op::Log: return std::log(eval_node(*n.a, v));
        case Op::Log1p: return std::log1p(eval_node(*n.a, v));
        case Op::Sqrt: return std::sqrt(eval_node(*n.a, v));
        case Op::Abs: return std::abs(eval_node(*n.a, v));
        case Op::Min: return std::min(eval_node(*n.a, v), eval_node(*n.b, v));
        case Op::Max: return std::max(eval_node(*n.a, v), eval_node(*n.b, v));
    }
    return 0.0;
}

} // namespace

Expression Expression::parse(const std::string& source, const std::vector<std::string>& variables) {
    Parser p{source, variables};
    NodePtr root = p.parse_expr();
    p.skip_ws();
    if (p.pos != source.size()) p.fail("trailing input");
    Expression e;
    e.root_ = std::move(root);
    e.source_ = source;
    e.n_vars_ = variables.size();
    return e;
}

double Expression::eval(std::span<const double> values) const {
    if (!root_) throw DomainError("evaluating an empty expression");
    if (values.size() < n_vars_)
        throw DomainError("expression \"" + source_ + "\": expected " + std::to_string(n_vars_) +
                          " variable values, got " + std::to_string(values.size()));
    return eval_node(*root_, values);
}

} // namespace plaplab
