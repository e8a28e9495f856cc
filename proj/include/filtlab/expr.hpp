#pragma once

// Scalar expressions in one variable with forward-mode derivatives up to third order.
//
// Grammar (standard precedence, '^' right associative and binding tighter than unary minus):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'pi' | 'e' | variable | func '(' expr ')' | '(' expr ')'
//   func    := exp | log | sqrt | sin | cos | abs

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "filtlab/error.hpp"

namespace filtlab {

/// Value and first three derivatives with respect to the expression variable.
struct DerivativeBundle {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
};

namespace detail {

// Third-order jet arithmetic (derivatives, not Taylor coefficients).
struct Jet {
    double v = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

inline Jet constant_jet(double c) { return {c, 0.0, 0.0, 0.0}; }

inline Jet operator+(const Jet& a, const Jet& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3};
}
inline Jet operator-(const Jet& a, const Jet& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d3 - b.d3};
}
inline Jet operator-(const Jet& a) { return {-a.v, -a.d1, -a.d2, -a.d3}; }
inline Jet operator*(const Jet& a, const Jet& b) {
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2,
            a.d3 * b.v + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.v * b.d3};
}

// Faa di Bruno: outer function F with derivatives (F, F', F'', F''') at a.v.
inline Jet compose(const Jet& a, double F0, double F1, double F2, double F3) {
    return {F0, F1 * a.d1, F2 * a.d1 * a.d1 + F1 * a.d2,
            F3 * a.d1 * a.d1 * a.d1 + 3.0 * F2 * a.d1 * a.d2 + F1 * a.d3};
}

}  // namespace detail

/// Immutable expression tree. Copies share the node storage.
class Expression {
public:
    enum class Kind { Var, Const, Neg, Add, Sub, Mul, Div, Pow, Func };
    enum class Func { Exp, Log, Sqrt, Sin, Cos, Abs };

    struct Node {
        Kind kind = Kind::Const;
        Func func = Func::Exp;
        double value = 0.0;
        int lhs = -1;
        int rhs = -1;
        bool integer_exponent = false;
        int exponent = 0;
        Span span;
    };

    Expression() = default;

    /// Parses `text`; any name in `variables` denotes the single free variable.
    static Expression parse(std::string_view text,
                            std::initializer_list<std::string_view> variables = {"u"});
    static Expression parse_with(std::string_view text, const std::vector<std::string>& variables);

    static Expression constant(double c);

    bool empty() const { return !impl_; }
    const std::string& source() const { return impl_->source; }
    const std::string& variable() const { return impl_->variable; }

    double operator()(double s) const;

    /// Exact derivatives by forward propagation of third-order jets. `order` in 0..3 controls
    /// which derivatives must exist (sqrt at 0 is fine for order 0 only).
    DerivativeBundle eval(double s, int order = 3) const;

    /// Fully parenthesised text that re-parses to a structurally equal tree.
    std::string print() const;

    /// Structural equality ignoring source spans.
    bool structurally_equal(const Expression& other) const;

    const std::vector<Node>& nodes() const { return impl_->nodes; }
    int root() const { return impl_->root; }

private:
    struct Impl {
        std::string source;
        std::string variable = "u";
        std::vector<Node> nodes;
        int root = -1;
    };
    std::shared_ptr<const Impl> impl_;

    class Parser;

    double eval_value(int idx, double s) const;
    detail::Jet eval_jet(int idx, double s, int order) const;
    void print_node(int idx, std::string& out) const;
    bool equal_nodes(int a, const Expression& other, int b) const;
};

inline std::string_view function_name(Expression::Func f) {
    switch (f) {
        case Expression::Func::Exp: return "exp";
        case Expression::Func::Log: return "log";
        case Expression::Func::Sqrt: return "sqrt";
        case Expression::Func::Sin: return "sin";
        case Expression::Func::Cos: return "cos";
        case Expression::Func::Abs: return "abs";
    }
    return "?";
}

class Expression::Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

    Impl run() {
        Impl impl;
        impl.source = std::string(text_);
        impl.variable = vars_.empty() ? std::string("u") : vars_.front();
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", 1);
        int root = parse_expr();
        skip_ws();
        if (pos_ < text_.size())
            throw ParseError(std::string("unexpected '") + text_[pos_] + "'", col());
        impl.nodes = std::move(nodes_);
        impl.root = root;
        return impl;
    }

private:
    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
    std::vector<Node> nodes_;

    int col() const { return static_cast<int>(pos_) + 1; }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(Kind k, int l, int r) {
        Node n;
        n.kind = k;
        n.lhs = l;
        n.rhs = r;
        n.span = {nodes_[l].span.begin, nodes_[r].span.end};
        return add(n);
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = binary(Kind::Add, lhs, parse_term());
            else if (accept('-'))
                lhs = binary(Kind::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Kind::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(Kind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    int parse_unary() {
        skip_ws();
        int start = col();
        if (accept('-')) {
            Node n;
            n.kind = Kind::Neg;
            n.lhs = parse_unary();
            n.span = {start, nodes_[n.lhs].span.end};
            return add(n);
        }
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (!accept('^')) return base;
        int exponent = parse_unary();
        int idx = binary(Kind::Pow, base, exponent);
        // Integer constant exponents (possibly negated) use the exact integer power rule.
        const Node& e = nodes_[exponent];
        double c = 0.0;
        bool is_const = false;
        if (e.kind == Kind::Const) {
            c = e.value;
            is_const = true;
        } else if (e.kind == Kind::Neg && nodes_[e.lhs].kind == Kind::Const) {
            c = -nodes_[e.lhs].value;
            is_const = true;
        }
        if (is_const && std::nearbyint(c) == c && std::fabs(c) < 1e6) {
            nodes_[idx].integer_exponent = true;
            nodes_[idx].exponent = static_cast<int>(c);
        }
        return idx;
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", col());
        const int start = col();
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_expr();
            if (!accept(')')) throw ParseError("expected ')'", col());
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t b = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string name(text_.substr(b, pos_ - b));
            const int end = col() - 1;
            for (const auto& v : vars_) {
                if (name == v) {
                    Node n;
                    n.kind = Kind::Var;
                    n.span = {start, end};
                    return add(n);
                }
            }
            if (name == "pi" || name == "e") {
                Node n;
                n.kind = Kind::Const;
                n.value = name == "pi" ? std::numbers::pi : std::numbers::e;
                n.span = {start, end};
                return add(n);
            }
            static constexpr Func funcs[] = {Func::Exp, Func::Log, Func::Sqrt,
                                             Func::Sin, Func::Cos, Func::Abs};
            for (Func f : funcs) {
                if (name == function_name(f)) {
                    if (!accept('(')) throw ParseError("expected '(' after " + name, col());
                    Node n;
                    n.kind = Kind::Func;
                    n.func = f;
                    n.lhs = parse_expr();
                    if (!accept(')')) throw ParseError("expected ')'", col());
                    n.span = {start, col() - 1};
                    return add(n);
                }
            }
            throw ParseError("unknown identifier '" + name + "'", start);
        }
        throw ParseError(std::string("unexpected '") + c + "'", start);
    }

    int parse_number() {
        const int start = col();
        std::size_t b = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                digits();
            else
                pos_ = save;
        }
        std::string lit(text_.substr(b, pos_ - b));
        if (lit == ".") throw ParseError("malformed number", start);
        Node n;
        n.kind = Kind::Const;
        n.value = std::strtod(lit.c_str(), nullptr);
        n.span = {start, col() - 1};
        return add(n);
    }
};

inline Expression Expression::parse_with(std::string_view text,
                                         const std::vector<std::string>& variables) {
    Expression e;
    e.impl_ = std::make_shared<const Impl>(Parser(text, variables).run());
    return e;
}

inline Expression Expression::parse(std::string_view text,
                                    std::initializer_list<std::string_view> variables) {
    std::vector<std::string> vars(variables.begin(), variables.end());
    return parse_with(text, vars);
}

inline Expression Expression::constant(double c) {
    Impl impl;
    Node n;
    n.kind = Kind::Const;
    n.value = c;
    impl.nodes.push_back(n);
    impl.root = 0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", c);
    impl.source = buf;
    Expression e;
    e.impl_ = std::make_shared<const Impl>(std::move(impl));
    return e;
}

inline double Expression::operator()(double s) const { return eval_value(impl_->root, s); }

inline DerivativeBundle Expression::eval(double s, int order) const {
    if (order == 0) return {eval_value(impl_->root, s), 0.0, 0.0, 0.0};
    detail::Jet j = eval_jet(impl_->root, s, order);
    return {j.v, j.d1, j.d2, j.d3};
}

inline double Expression::eval_value(int idx, double s) const {
    const Node& n = impl_->nodes[idx];
    switch (n.kind) {
        case Kind::Var: return s;
        case Kind::Const: return n.value;
        case Kind::Neg: return -eval_value(n.lhs, s);
        case Kind::Add: return eval_value(n.lhs, s) + eval_value(n.rhs, s);
        case Kind::Sub: return eval_value(n.lhs, s) - eval_value(n.rhs, s);
        case Kind::Mul: return eval_value(n.lhs, s) * eval_value(n.rhs, s);
        case Kind::Div: {
            double d = eval_value(n.rhs, s);
            if (d == 0.0) throw DomainError("division by zero", n.span);
            return eval_value(n.lhs, s) / d;
        }
        case Kind::Pow: {
            double a = eval_value(n.lhs, s);
            if (n.integer_exponent) {
                if (a == 0.0 && n.exponent < 0) throw DomainError("zero to a negative power", n.span);
                return std::pow(a, n.exponent);
            }
            if (a <= 0.0) throw DomainError("non-integer power of a nonpositive base", n.span);
            return std::pow(a, eval_value(n.rhs, s));
        }
        case Kind::Func: {
            double a = eval_value(n.lhs, s);
            switch (n.func) {
                case Func::Exp: return std::exp(a);
                case Func::Log:
                    if (a <= 0.0) throw DomainError("log of a nonpositive argument", n.span);
                    return std::log(a);
                case Func::Sqrt:
                    if (a < 0.0) throw DomainError("sqrt of a negative argument", n.span);
                    return std::sqrt(a);
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Abs: return std::fabs(a);
            }
        }
    }
    return 0.0;
}

inline detail::Jet Expression::eval_jet(int idx, double s, int order) const {
    using detail::Jet;
    const Node& n = impl_->nodes[idx];
    switch (n.kind) {
        case Kind::Var: return {s, 1.0, 0.0, 0.0};
        case Kind::Const: return detail::constant_jet(n.value);
        case Kind::Neg: return -eval_jet(n.lhs, s, order);
        case Kind::Add: return eval_jet(n.lhs, s, order) + eval_jet(n.rhs, s, order);
        case Kind::Sub: return eval_jet(n.lhs, s, order) - eval_jet(n.rhs, s, order);
        case Kind::Mul: return eval_jet(n.lhs, s, order) * eval_jet(n.rhs, s, order);
        case Kind::Div: {
            Jet d = eval_jet(n.rhs, s, order);
            if (d.v == 0.0) throw DomainError("division by zero", n.span);
            double r = 1.0 / d.v;
            Jet inv = detail::compose(d, r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r);
            return eval_jet(n.lhs, s, order) * inv;
        }
        case Kind::Pow: {
            Jet a = eval_jet(n.lhs, s, order);
            if (n.integer_exponent) {
                const int p = n.exponent;
                if (p == 0) return detail::constant_jet(1.0);
                if (a.v == 0.0 && p < 0) throw DomainError("zero to a negative power", n.span);
                auto term = [&](int k) {
                    // p (p-1) ... (p-k+1) a^(p-k), exactly zero once the falling factorial vanishes.
                    double coef = 1.0;
                    for (int i = 0; i < k; ++i) coef *= static_cast<double>(p - i);
                    if (coef == 0.0) return 0.0;
                    return coef * std::pow(a.v, p - k);
                };
                return detail::compose(a, term(0), term(1), term(2), term(3));
            }
            if (a.v <= 0.0) throw DomainError("non-integer power of a nonpositive base", n.span);
            Jet b = eval_jet(n.rhs, s, order);
            double la = std::log(a.v);
            Jet log_a = detail::compose(a, la, 1.0 / a.v, -1.0 / (a.v * a.v),
                                        2.0 / (a.v * a.v * a.v));
            Jet prod = b * log_a;
            double ev = std::exp(prod.v);
            return detail::compose(prod, ev, ev, ev, ev);
        }
        case Kind::Func: {
            Jet a = eval_jet(n.lhs, s, order);
            const double x = a.v;
            switch (n.func) {
                case Func::Exp: {
                    double ev = std::exp(x);
                    return detail::compose(a, ev, ev, ev, ev);
                }
                case Func::Log:
                    if (x <= 0.0) throw DomainError("log of a nonpositive argument", n.span);
                    return detail::compose(a, std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
                case Func::Sqrt: {
                    if (x < 0.0 || (x == 0.0 && order > 0))
                        throw DomainError("sqrt outside its differentiable domain", n.span);
                    double r = std::sqrt(x);
                    if (x == 0.0) return detail::constant_jet(0.0);
                    return detail::compose(a, r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x));
                }
                case Func::Sin: {
                    double sn = std::sin(x), cs = std::cos(x);
                    return detail::compose(a, sn, cs, -sn, -cs);
                }
                case Func::Cos: {
                    double sn = std::sin(x), cs = std::cos(x);
                    return detail::compose(a, cs, -sn, -cs, sn);
                }
                case Func::Abs: {
                    double sg = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                    return detail::compose(a, std::fabs(x), sg, 0.0, 0.0);
                }
            }
        }
    }
    return {};
}

inline void Expression::print_node(int idx, std::string& out) const {
    const Node& n = impl_->nodes[idx];
    switch (n.kind) {
        case Kind::Var: out += impl_->variable; return;
        case Kind::Const: {
            char buf[40];
            if (n.value < 0.0)
                std::snprintf(buf, sizeof buf, "(-%.17g)", -n.value);
            else
                std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case Kind::Neg:
            out += "(-";
            print_node(n.lhs, out);
            out += ")";
            return;
        case Kind::Func:
            out += function_name(n.func);
            out += "(";
            print_node(n.lhs, out);
            out += ")";
            return;
        default: break;
    }
    const char* op = n.kind == Kind::Add ? " + "
                     : n.kind == Kind::Sub ? " - "
                     : n.kind == Kind::Mul ? " * "
                     : n.kind == Kind::Div ? " / "
                                           : " ^ ";
    out += "(";
    print_node(n.lhs, out);
    out += op;
    print_node(n.rhs, out);
    out += ")";
}

inline std::string Expression::print() const {
    std::string out;
    print_node(impl_->root, out);
    return out;
}

inline bool Expression::equal_nodes(int a, const Expression& other, int b) const {
    const Node& x = impl_->nodes[a];
    const Node& y = other.impl_->nodes[b];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case Kind::Var: return true;
        case Kind::Const: return x.value == y.value;
        case Kind::Neg: return equal_nodes(x.lhs, other, y.lhs);
        case Kind::Func: return x.func == y.func && equal_nodes(x.lhs, other, y.lhs);
        default:
            return x.integer_exponent == y.integer_exponent && x.exponent == y.exponent &&
                   equal_nodes(x.lhs, other, y.lhs) && equal_nodes(x.rhs, other, y.rhs);
    }
}

inline bool Expression::structurally_equal(const Expression& other) const {
    if (empty() || other.empty()) return empty() == other.empty();
    return equal_nodes(impl_->root, other, other.impl_->root);
}

}  // namespace filtlab
