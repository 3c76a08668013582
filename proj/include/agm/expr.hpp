#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agm {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable scalar expression over coordinates x1..xn: constants, +, -, *, /,
/// integer powers, sin, cos, exp and negation. Closed under differentiation.
class Expr {
  public:
    enum class Op : int { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp };

    Expr() { n_ = zero_node(); }

    static Expr constant(double v) {
        Expr e;
        e.n_ = std::make_shared<Node>(Node{Op::Const, v, 0, 0, nullptr, nullptr});
        return e;
    }

    static Expr var(int k) { // 0-based coordinate index
        Expr e;
        e.n_ = std::make_shared<Node>(Node{Op::Var, 0.0, k, 0, nullptr, nullptr});
        return e;
    }

    Op op() const { return n_->op; }
    bool is_const() const { return n_->op == Op::Const; }
    bool is_const(double v) const { return n_->op == Op::Const && n_->cval == v; }
    double const_value() const { return n_->cval; }

    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.is_const(0.0)) return b;
        if (b.is_const(0.0)) return a;
        if (a.is_const() && b.is_const()) return constant(a.n_->cval + b.n_->cval);
        return make(Op::Add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (b.is_const(0.0)) return a;
        if (a.is_const() && b.is_const()) return constant(a.n_->cval - b.n_->cval);
        if (a.is_const(0.0)) return -b;
        return make(Op::Sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
        if (a.is_const(1.0)) return b;
        if (b.is_const(1.0)) return a;
        if (a.is_const() && b.is_const()) return constant(a.n_->cval * b.n_->cval);
        return make(Op::Mul, a, b);
    }
    friend Expr operator/(const Expr& a, const Expr& b) {
        if (a.is_const(0.0)) return constant(0.0);
        if (b.is_const(1.0)) return a;
        return make(Op::Div, a, b);
    }
    friend Expr operator-(const Expr& a) {
        if (a.is_const()) return constant(-a.n_->cval);
        return make(Op::Neg, a, Expr{});
    }

    static Expr pow(const Expr& a, int k) {
        if (k == 0) return constant(1.0);
        if (k == 1) return a;
        Expr e;
        e.n_ = std::make_shared<Node>(Node{Op::Pow, 0.0, 0, k, a.n_, nullptr});
        return e;
    }
    static Expr sin(const Expr& a) { return make(Op::Sin, a, Expr{}); }
    static Expr cos(const Expr& a) { return make(Op::Cos, a, Expr{}); }
    static Expr exp(const Expr& a) { return make(Op::Exp, a, Expr{}); }

    double eval(std::span<const double> x) const { return n_->eval(x); }

    /// Analytic partial derivative with respect to coordinate k (0-based).
    Expr diff(int k) const {
        const Node& n = *n_;
        switch (n.op) {
            case Op::Const: return constant(0.0);
            case Op::Var: return constant(n.var == k ? 1.0 : 0.0);
            case Op::Add: return wrap(n.a).diff(k) + wrap(n.b).diff(k);
            case Op::Sub: return wrap(n.a).diff(k) - wrap(n.b).diff(k);
            case Op::Mul: return wrap(n.a).diff(k) * wrap(n.b) + wrap(n.a) * wrap(n.b).diff(k);
            case Op::Div:
                return (wrap(n.a).diff(k) * wrap(n.b) - wrap(n.a) * wrap(n.b).diff(k)) /
                       (wrap(n.b) * wrap(n.b));
            case Op::Neg: return -wrap(n.a).diff(k);
            case Op::Pow:
                return constant(static_cast<double>(n.ipow)) * pow(wrap(n.a), n.ipow - 1) *
                       wrap(n.a).diff(k);
            case Op::Sin: return cos(wrap(n.a)) * wrap(n.a).diff(k);
            case Op::Cos: return -(sin(wrap(n.a)) * wrap(n.a).diff(k));
            case Op::Exp: return exp(wrap(n.a)) * wrap(n.a).diff(k);
        }
        throw std::logic_error("diff: unknown node");
    }

    /// Serializes with coordinates rendered as x1..xn (or supplied names).
    std::string str(std::span<const std::string> names = {}) const { return n_->str(names, 0); }

    bool same(const Expr& o) const { return Node::same(*n_, *o.n_); }

  private:
    struct Node {
        Op op;
        double cval;
        int var;
        int ipow;
        std::shared_ptr<const Node> a, b;

        double eval(std::span<const double> x) const {
            switch (op) {
                case Op::Const: return cval;
                case Op::Var: return x[static_cast<std::size_t>(var)];
                case Op::Add: return a->eval(x) + b->eval(x);
                case Op::Sub: return a->eval(x) - b->eval(x);
                case Op::Mul: return a->eval(x) * b->eval(x);
                case Op::Div: {
                    double den = b->eval(x);
                    if (den == 0.0)
                        throw EvalError("division by zero in subexpression '" + str({}, 0) + "'");
                    return a->eval(x) / den;
                }
                case Op::Neg: return -a->eval(x);
                case Op::Pow: {
                    double base = a->eval(x);
                    if (ipow < 0 && base == 0.0)
                        throw EvalError("division by zero in subexpression '" + str({}, 0) + "'");
                    return std::pow(base, ipow);
                }
                case Op::Sin: return std::sin(a->eval(x));
                case Op::Cos: return std::cos(a->eval(x));
                case Op::Exp: return std::exp(a->eval(x));
            }
            throw std::logic_error("eval: unknown node");
        }

        // parent precedence: 0 add, 1 mul, 2 unary, 3 power/primary
        std::string str(std::span<const std::string> names, int parent) const {
            auto paren = [&](const std::string& s, int mine) {
                return mine < parent ? "(" + s + ")" : s;
            };
            switch (op) {
                case Op::Const: {
                    char buf[40];
                    std::snprintf(buf, sizeof buf, "%.17g", cval);
                    std::string s(buf);
                    return (cval < 0.0) ? paren(s, 2) : s;
                }
                case Op::Var:
                    if (static_cast<std::size_t>(var) < names.size()) return names[static_cast<std::size_t>(var)];
                    return "x" + std::to_string(var + 1);
                case Op::Add: return paren(a->str(names, 0) + " + " + b->str(names, 0), 0);
                case Op::Sub: return paren(a->str(names, 0) + " - " + b->str(names, 1), 0);
                case Op::Mul: return paren(a->str(names, 1) + "*" + b->str(names, 2), 1);
                case Op::Div: return paren(a->str(names, 1) + "/" + b->str(names, 3), 1);
                case Op::Neg: return paren("-" + a->str(names, 3), 2);
                case Op::Pow: return paren(a->str(names, 4) + "^" + std::to_string(ipow), 3);
                case Op::Sin: return "sin(" + a->str(names, 0) + ")";
                case Op::Cos: return "cos(" + a->str(names, 0) + ")";
                case Op::Exp: return "exp(" + a->str(names, 0) + ")";
            }
            throw std::logic_error("str: unknown node");
        }

        static bool same(const Node& x, const Node& y) {
            if (x.op != y.op) return false;
            switch (x.op) {
                case Op::Const: return x.cval == y.cval;
                case Op::Var: return x.var == y.var;
                case Op::Pow: return x.ipow == y.ipow && same(*x.a, *y.a);
                case Op::Neg:
                case Op::Sin:
                case Op::Cos:
                case Op::Exp: return same(*x.a, *y.a);
                default: return same(*x.a, *y.a) && same(*x.b, *y.b);
            }
        }
    };

    static const std::shared_ptr<const Node>& zero_node() {
        static const std::shared_ptr<const Node> z =
            std::make_shared<Node>(Node{Op::Const, 0.0, 0, 0, nullptr, nullptr});
        return z;
    }

    static Expr wrap(std::shared_ptr<const Node> n) {
        Expr e;
        e.n_ = std::move(n);
        return e;
    }

    static Expr make(Op op, const Expr& a, const Expr& b) {
        Expr e;
        e.n_ = std::make_shared<Node>(Node{op, 0.0, 0, 0, a.n_, b.n_});
        return e;
    }

    std::shared_ptr<const Node> n_;
};

namespace detail {

class ExprParser {
  public:
    ExprParser(std::string_view src, std::span<const std::string> names, int dim)
        : src_(src), names_(names), dim_(dim) {}

    Expr parse() {
        Expr e = sum();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

  private:
    std::string_view src_;
    std::span<const std::string> names_;
    int dim_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression parse error at position " + std::to_string(pos_ + 1) + " in '" +
                         std::string(src_) + "': " + msg);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    Expr sum() {
        Expr e = term();
        while (true) {
            if (eat('+'))
                e = e + term();
            else if (eat('-'))
                e = e - term();
            else
                return e;
        }
    }

    Expr term() {
        Expr e = unary();
        while (true) {
            if (eat('*'))
                e = e * unary();
            else if (eat('/'))
                e = e / unary();
            else
                return e;
        }
    }

    Expr unary() {
        if (eat('-')) return -unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (eat('^')) {
            skip_ws();
            bool neg = eat('-');
            skip_ws();
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                fail("exponent must be an integer literal");
            long k = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                k = k * 10 + (src_[pos_++] - '0');
            return Expr::pow(base, static_cast<int>(neg ? -k : k));
        }
        return base;
    }

    Expr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        if (eat('(')) {
            Expr e = sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
            ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        try {
            return Expr::constant(std::stod(std::string(src_.substr(start, pos_ - start))));
        } catch (const std::exception&) {
            pos_ = start;
            fail("malformed number");
        }
    }

    Expr ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!eat('(')) fail("expected '(' after function name '" + name + "'");
            Expr arg = sum();
            if (!eat(')')) fail("expected ')'");
            if (name == "sin") return Expr::sin(arg);
            if (name == "cos") return Expr::cos(arg);
            return Expr::exp(arg);
        }
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return Expr::var(static_cast<int>(i));
        // fallback aliases x1..xn
        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                int k = std::stoi(name.substr(1));
                if (k >= 1 && k <= dim_) return Expr::var(k - 1);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace detail

inline Expr parse_expr(std::string_view src, std::span<const std::string> names = {}, int dim = 6) {
    return detail::ExprParser(src, names, dim).parse();
}

} // namespace agm
