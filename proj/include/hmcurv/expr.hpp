#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <map>
#include <tuple>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hmcurv/errors.hpp"

namespace hmcurv {

enum class Var { Rho, Theta, Phi };

struct Bindings {
    double rho = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

enum class Func { Sinh, Cosh, Tanh, Coth, Sin, Cos, Tan, Cot, Exp, Log, Sqrt };

/// Immutable scalar expression tree over rho, theta and phi.
///
/// Grammar (infix, '^' binds tighter than unary minus and is right-associative):
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' unary)?
///   atom  := number | 'pi' | rho | theta | phi | name '(' expr [',' expr] ')' | '(' expr ')'
/// Functions: sinh cosh tanh coth sin cos tan cot exp log sqrt, and pow(a, b).
/// Derivatives are taken symbolically, with constant folding on construction.
class Expression {
public:
    Expression() : Expression(constant(0.0)) {}

    static Expression constant(double value)
    {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Const;
        n->value = value;
        return Expression(std::move(n));
    }

    static Expression variable(Var v)
    {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Variable;
        n->var = v;
        return Expression(std::move(n));
    }

    static Expression parse(std::string_view text)
    {
        Parser p{text};
        Expression e = p.parse_expr();
        p.skip_space();
        if (p.pos != text.size())
            p.fail("unexpected trailing input");
        return e;
    }

    double evaluate(const Bindings& b) const { return eval(*node_, b); }
    double operator()(const Bindings& b) const { return evaluate(b); }

    bool is_constant() const noexcept { return node_->kind == Kind::Const; }
    double constant_value() const noexcept { return node_->value; }

    bool depends_on(Var v) const
    {
        std::unordered_map<const Node*, bool> memo;
        return depends(*node_, v, memo);
    }

    /// Symbolic derivative; shared subexpressions are differentiated once.
    Expression derivative(Var v) const
    {
        std::unordered_map<const Node*, Expression> memo;
        return diff(node_, v, memo);
    }

    /// Number of distinct nodes in the expression graph.
    std::size_t node_count() const
    {
        std::unordered_map<const Node*, bool> seen;
        count(*node_, seen);
        return seen.size();
    }

    /// Re-parseable text form.
    std::string to_string() const { return print(*node_); }

    friend Expression operator+(const Expression& a, const Expression& b)
    {
        if (a.is_constant() && b.is_constant())
            return constant(a.constant_value() + b.constant_value());
        if (a.is_zero())
            return b;
        if (b.is_zero())
            return a;
        return binary(Kind::Add, a, b);
    }

    friend Expression operator-(const Expression& a, const Expression& b)
    {
        if (a.is_constant() && b.is_constant())
            return constant(a.constant_value() - b.constant_value());
        if (b.is_zero())
            return a;
        if (a.is_zero())
            return -b;
        return binary(Kind::Sub, a, b);
    }

    friend Expression operator*(const Expression& a, const Expression& b)
    {
        if (a.is_constant() && b.is_constant())
            return constant(a.constant_value() * b.constant_value());
        if (a.is_zero() || b.is_zero())
            return constant(0.0);
        if (a.is_one())
            return b;
        if (b.is_one())
            return a;
        return binary(Kind::Mul, a, b);
    }

    friend Expression operator/(const Expression& a, const Expression& b)
    {
        if (a.is_constant() && b.is_constant())
            return constant(a.constant_value() / b.constant_value());
        if (a.is_zero())
            return constant(0.0);
        if (b.is_one())
            return a;
        return binary(Kind::Div, a, b);
    }

    friend Expression operator-(const Expression& a)
    {
        if (a.is_constant())
            return constant(-a.constant_value());
        if (a.node_->kind == Kind::Neg)
            return Expression(a.node_->lhs);
        auto n = std::make_shared<Node>();
        n->kind = Kind::Neg;
        n->lhs = a.node_;
        return Expression(std::move(n));
    }

    friend Expression pow(const Expression& a, const Expression& b)
    {
        if (a.is_constant() && b.is_constant())
            return constant(std::pow(a.constant_value(), b.constant_value()));
        if (b.is_constant() && b.constant_value() == 0.0)
            return constant(1.0);
        if (b.is_one())
            return a;
        return binary(Kind::Pow, a, b);
    }

    friend Expression apply(Func f, const Expression& a)
    {
        if (a.is_constant())
            return constant(call(f, a.constant_value()));
        auto n = std::make_shared<Node>();
        n->kind = Kind::Call;
        n->func = f;
        n->lhs = a.node_;
        return Expression(std::move(n));
    }

private:
    friend class CompiledExpression;

    enum class Kind { Const, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

    struct Node {
        Kind kind = Kind::Const;
        double value = 0.0;
        Var var = Var::Rho;
        Func func = Func::Exp;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };
    using NodePtr = std::shared_ptr<const Node>;

    explicit Expression(NodePtr n) : node_(std::move(n)) {}

    bool is_zero() const noexcept { return is_constant() && node_->value == 0.0; }
    bool is_one() const noexcept { return is_constant() && node_->value == 1.0; }

    static Expression binary(Kind k, const Expression& a, const Expression& b)
    {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->lhs = a.node_;
        n->rhs = b.node_;
        return Expression(std::move(n));
    }

    static double call(Func f, double x)
    {
        switch (f) {
        case Func::Sinh: return std::sinh(x);
        case Func::Cosh: return std::cosh(x);
        case Func::Tanh: return std::tanh(x);
        case Func::Coth: return 1.0 / std::tanh(x);
        case Func::Sin: return std::sin(x);
        case Func::Cos: return std::cos(x);
        case Func::Tan: return std::tan(x);
        case Func::Cot: return 1.0 / std::tan(x);
        case Func::Exp: return std::exp(x);
        case Func::Log: return std::log(x);
        case Func::Sqrt: return std::sqrt(x);
        }
        return 0.0;
    }

    static const char* name(Func f)
    {
        switch (f) {
        case Func::Sinh: return "sinh";
        case Func::Cosh: return "cosh";
        case Func::Tanh: return "tanh";
        case Func::Coth: return "coth";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Cot: return "cot";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        }
        return "?";
    }

    static void count(const Node& n, std::unordered_map<const Node*, bool>& seen)
    {
        if (!seen.emplace(&n, true).second)
            return;
        if (n.lhs)
            count(*n.lhs, seen);
        if (n.rhs)
            count(*n.rhs, seen);
    }

    static double eval(const Node& n, const Bindings& b)
    {
        switch (n.kind) {
        case Kind::Const: return n.value;
        case Kind::Variable:
            return n.var == Var::Rho ? b.rho : n.var == Var::Theta ? b.theta : b.phi;
        case Kind::Neg: return -eval(*n.lhs, b);
        case Kind::Add: return eval(*n.lhs, b) + eval(*n.rhs, b);
        case Kind::Sub: return eval(*n.lhs, b) - eval(*n.rhs, b);
        case Kind::Mul: return eval(*n.lhs, b) * eval(*n.rhs, b);
        case Kind::Div: return eval(*n.lhs, b) / eval(*n.rhs, b);
        case Kind::Pow: return std::pow(eval(*n.lhs, b), eval(*n.rhs, b));
        case Kind::Call: return call(n.func, eval(*n.lhs, b));
        }
        return 0.0;
    }

    static bool depends(const Node& n, Var v, std::unordered_map<const Node*, bool>& memo)
    {
        if (auto it = memo.find(&n); it != memo.end())
            return it->second;
        bool out = false;
        switch (n.kind) {
        case Kind::Const: break;
        case Kind::Variable: out = n.var == v; break;
        case Kind::Neg:
        case Kind::Call: out = depends(*n.lhs, v, memo); break;
        default: out = depends(*n.lhs, v, memo) || depends(*n.rhs, v, memo); break;
        }
        memo.emplace(&n, out);
        return out;
    }

    static Expression diff(const NodePtr& np, Var v, std::unordered_map<const Node*, Expression>& memo)
    {
        if (auto it = memo.find(np.get()); it != memo.end())
            return it->second;
        Expression out = diff_node(np, v, memo);
        memo.emplace(np.get(), out);
        return out;
    }

    static Expression diff_node(const NodePtr& np, Var v, std::unordered_map<const Node*, Expression>& memo)
    {
        const Node& n = *np;
        switch (n.kind) {
        case Kind::Const: return constant(0.0);
        case Kind::Variable: return constant(n.var == v ? 1.0 : 0.0);
        default: break;
        }
        const Expression a(n.lhs);
        const Expression da = diff(n.lhs, v, memo);
        switch (n.kind) {
        case Kind::Neg: return -da;
        case Kind::Call: return da * call_derivative(n.func, a);
        default: break;
        }
        const Expression b(n.rhs);
        const Expression db = diff(n.rhs, v, memo);
        switch (n.kind) {
        case Kind::Add: return da + db;
        case Kind::Sub: return da - db;
        case Kind::Mul: return da * b + a * db;
        case Kind::Div: return (da * b - a * db) / pow(b, constant(2.0));
        case Kind::Pow:
            if (b.is_constant())
                return b * pow(a, constant(b.constant_value() - 1.0)) * da;
            return pow(a, b) * (db * apply(Func::Log, a) + b * da / a);
        default: break;
        }
        return constant(0.0);
    }

    static Expression call_derivative(Func f, const Expression& a)
    {
        const Expression two = constant(2.0);
        switch (f) {
        case Func::Sinh: return apply(Func::Cosh, a);
        case Func::Cosh: return apply(Func::Sinh, a);
        case Func::Tanh: return constant(1.0) / pow(apply(Func::Cosh, a), two);
        case Func::Coth: return -(constant(1.0) / pow(apply(Func::Sinh, a), two));
        case Func::Sin: return apply(Func::Cos, a);
        case Func::Cos: return -apply(Func::Sin, a);
        case Func::Tan: return constant(1.0) / pow(apply(Func::Cos, a), two);
        case Func::Cot: return -(constant(1.0) / pow(apply(Func::Sin, a), two));
        case Func::Exp: return apply(Func::Exp, a);
        case Func::Log: return constant(1.0) / a;
        case Func::Sqrt: return constant(0.5) / apply(Func::Sqrt, a);
        }
        return constant(0.0);
    }

    static std::string print(const Node& n)
    {
        switch (n.kind) {
        case Kind::Const: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            std::string s = buf;
            return n.value < 0 ? "(" + s + ")" : s;
        }
        case Kind::Variable: return n.var == Var::Rho ? "rho" : n.var == Var::Theta ? "theta" : "phi";
        case Kind::Neg: return "(-" + print(*n.lhs) + ")";
        case Kind::Add: return "(" + print(*n.lhs) + " + " + print(*n.rhs) + ")";
        case Kind::Sub: return "(" + print(*n.lhs) + " - " + print(*n.rhs) + ")";
        case Kind::Mul: return "(" + print(*n.lhs) + " * " + print(*n.rhs) + ")";
        case Kind::Div: return "(" + print(*n.lhs) + " / " + print(*n.rhs) + ")";
        case Kind::Pow: return "pow(" + print(*n.lhs) + ", " + print(*n.rhs) + ")";
        case Kind::Call: return std::string(name(n.func)) + "(" + print(*n.lhs) + ")";
        }
        return "";
    }

    struct Parser {
        std::string_view text;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& msg) const
        {
            throw Error(ErrorCode::ParseError, msg + " at offset " + std::to_string(pos) + " in '" +
                                                   std::string(text) + "'");
        }

        void skip_space()
        {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
        }

        bool accept(char c)
        {
            skip_space();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        void expect(char c)
        {
            if (!accept(c))
                fail(std::string("expected '") + c + "'");
        }

        Expression parse_expr()
        {
            Expression e = parse_term();
            for (;;) {
                if (accept('+'))
                    e = e + parse_term();
                else if (accept('-'))
                    e = e - parse_term();
                else
                    return e;
            }
        }

        Expression parse_term()
        {
            Expression e = parse_unary();
            for (;;) {
                if (accept('*'))
                    e = e * parse_unary();
                else if (accept('/'))
                    e = e / parse_unary();
                else
                    return e;
            }
        }

        Expression parse_unary()
        {
            if (accept('-'))
                return -parse_unary();
            if (accept('+'))
                return parse_unary();
            return parse_power();
        }

        Expression parse_power()
        {
            Expression base = parse_atom();
            if (accept('^'))
                return pow(base, parse_unary());
            return base;
        }

        Expression parse_atom()
        {
            skip_space();
            if (pos >= text.size())
                fail("unexpected end of input");
            const char ch = text[pos];
            if (accept('(')) {
                Expression e = parse_expr();
                expect(')');
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.')
                return parse_number();
            if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_')
                return parse_identifier();
            fail(std::string("unexpected character '") + ch + "'");
        }

        Expression parse_number()
        {
            const std::string rest(text.substr(pos));
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(rest, &used);
            } catch (const std::exception&) {
                fail("malformed number");
            }
            pos += used;
            return constant(value);
        }

        Expression parse_identifier()
        {
            const std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            const std::string id(text.substr(start, pos - start));
            if (id == "rho")
                return variable(Var::Rho);
            if (id == "theta")
                return variable(Var::Theta);
            if (id == "phi")
                return variable(Var::Phi);
            if (id == "pi")
                return constant(std::numbers::pi);
            expect('(');
            Expression arg = parse_expr();
            if (id == "pow") {
                expect(',');
                Expression exponent = parse_expr();
                expect(')');
                return pow(arg, exponent);
            }
            expect(')');
            static constexpr std::pair<const char*, Func> table[] = {
                {"sinh", Func::Sinh}, {"cosh", Func::Cosh}, {"tanh", Func::Tanh}, {"coth", Func::Coth},
                {"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},   {"cot", Func::Cot},
                {"exp", Func::Exp},   {"log", Func::Log},   {"sqrt", Func::Sqrt},
            };
            for (const auto& [n, f] : table)
                if (id == n)
                    return apply(f, arg);
            pos = start;
            fail("unknown function '" + id + "'");
        }
    };

    NodePtr node_;
};

/// Expression flattened into a straight-line program. Structurally identical
/// subexpressions are merged, so evaluation cost is the number of distinct operations.
class CompiledExpression {
public:
    CompiledExpression() : CompiledExpression(Expression::constant(0.0)) {}

    explicit CompiledExpression(const Expression& e)
    {
        std::unordered_map<const Node*, int> by_node;
        std::map<Key, int> by_key;
        result_ = emit(*e.node_, by_node, by_key);
    }

    std::size_t size() const noexcept { return ops_.size(); }

    double operator()(const Bindings& b) const
    {
        thread_local std::vector<double> reg;
        reg.resize(ops_.size());
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            const Op& op = ops_[i];
            double r = 0.0;
            switch (op.kind) {
            case Kind::Const: r = op.value; break;
            case Kind::Variable: r = op.var == Var::Rho ? b.rho : op.var == Var::Theta ? b.theta : b.phi; break;
            case Kind::Neg: r = -reg[op.lhs]; break;
            case Kind::Add: r = reg[op.lhs] + reg[op.rhs]; break;
            case Kind::Sub: r = reg[op.lhs] - reg[op.rhs]; break;
            case Kind::Mul: r = reg[op.lhs] * reg[op.rhs]; break;
            case Kind::Div: r = reg[op.lhs] / reg[op.rhs]; break;
            case Kind::Pow: r = std::pow(reg[op.lhs], reg[op.rhs]); break;
            case Kind::Call: r = Expression::call(op.func, reg[op.lhs]); break;
            }
            reg[i] = r;
        }
        return reg[result_];
    }

private:
    using Kind = Expression::Kind;
    using Node = Expression::Node;

    struct Op {
        Kind kind;
        double value;
        Var var;
        Func func;
        int lhs;
        int rhs;
    };
    using Key = std::tuple<int, std::uint64_t, int, int, int, int>;

    int emit(const Node& n, std::unordered_map<const Node*, int>& by_node, std::map<Key, int>& by_key)
    {
        if (auto it = by_node.find(&n); it != by_node.end())
            return it->second;
        const int lhs = n.lhs ? emit(*n.lhs, by_node, by_key) : -1;
        const int rhs = n.rhs ? emit(*n.rhs, by_node, by_key) : -1;
        const bool leaf = n.kind == Kind::Const || n.kind == Kind::Variable;
        const Key key{static_cast<int>(n.kind), n.kind == Kind::Const ? std::bit_cast<std::uint64_t>(n.value) : 0,
                      leaf ? static_cast<int>(n.var) : 0, n.kind == Kind::Call ? static_cast<int>(n.func) : 0, lhs, rhs};
        int id;
        if (auto it = by_key.find(key); it != by_key.end()) {
            id = it->second;
        } else {
            id = static_cast<int>(ops_.size());
            ops_.push_back({n.kind, n.value, n.var, n.func, lhs, rhs});
            by_key.emplace(key, id);
        }
        by_node.emplace(&n, id);
        return id;
    }

    std::vector<Op> ops_;
    int result_ = 0;
};

} // namespace hmcurv
