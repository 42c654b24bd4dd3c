#include "rigidlab/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace rigidlab {

namespace {

constexpr std::size_t kMaxParseDepth = 200;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Builder {
    std::vector<Expression::Node> nodes;
    std::size_t depth = 0;      // current value-stack depth
    std::size_t max_depth = 0;
    bool uses_x = false;
    bool uses_y = false;

    void push_leaf(Expression::Op op, double v = 0.0) {
        nodes.push_back({op, v});
        depth++;
        if (depth > max_depth) max_depth = depth;
    }
    void push_unary(Expression::Op op) { nodes.push_back({op, 0.0}); }
    void push_binary(Expression::Op op) {
        nodes.push_back({op, 0.0});
        depth--;
    }
};

class Parser {
public:
    Parser(std::string_view src, Builder& out) : src_(src), out_(out) {}

    void run() {
        skip_ws();
        if (pos_ >= src_.size())
            throw ParseError(pos_, "expression", "parse error at offset 0: empty input");
        parse_expr(0);
        skip_ws();
        if (pos_ < src_.size()) fail("end of input");
    }

private:
    std::string_view src_;
    Builder& out_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) {
        std::string got = pos_ < src_.size() ? std::string(1, src_[pos_]) : "end of input";
        throw ParseError(pos_, expected,
                         "parse error at offset " + std::to_string(pos_) + ": expected " +
                             expected + ", got '" + got + "'");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) pos_++;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            pos_++;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("'") + c + "'");
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    // expr := term (('+'|'-') term)*
    void parse_expr(std::size_t depth) {
        parse_term(depth);
        for (;;) {
            if (accept('+')) {
                parse_term(depth);
                out_.push_binary(Expression::Op::Add);
            } else if (accept('-')) {
                parse_term(depth);
                out_.push_binary(Expression::Op::Sub);
            } else {
                return;
            }
        }
    }

    // term := unary (('*'|'/') unary)*
    void parse_term(std::size_t depth) {
        parse_unary(depth);
        for (;;) {
            if (accept('*')) {
                parse_unary(depth);
                out_.push_binary(Expression::Op::Mul);
            } else if (accept('/')) {
                parse_unary(depth);
                out_.push_binary(Expression::Op::Div);
            } else {
                return;
            }
        }
    }

    // unary := '-' unary | power
    void parse_unary(std::size_t depth) {
        if (depth > kMaxParseDepth) fail("shallower expression");
        if (accept('-')) {
            parse_unary(depth + 1);
            out_.push_unary(Expression::Op::Neg);
            return;
        }
        parse_power(depth);
    }

    // power := primary ('^' unary)?   (right associative)
    void parse_power(std::size_t depth) {
        parse_primary(depth);
        if (accept('^')) {
            parse_unary(depth + 1);
            out_.push_binary(Expression::Op::Pow);
        }
    }

    // primary := number | 'x' | 'y' | func '(' expr [',' expr] ')' | '(' expr ')'
    void parse_primary(std::size_t depth) {
        skip_ws();
        if (pos_ >= src_.size()) fail("value");
        char c = src_[pos_];
        if (c == '(') {
            pos_++;
            parse_expr(depth + 1);
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number();
            return;
        }
        if (is_ident_start(c)) {
            parse_identifier(depth);
            return;
        }
        fail("value");
    }

    void parse_number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        errno = 0;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("number");
        if (errno == ERANGE || !std::isfinite(v)) {
            throw ParseError(pos_, "representable number",
                             "parse error at offset " + std::to_string(pos_) +
                                 ": number out of range");
        }
        pos_ += static_cast<std::size_t>(end - begin);
        out_.push_leaf(Expression::Op::Num, v);
    }

    void parse_identifier(std::size_t depth) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) pos_++;
        std::string name(src_.substr(start, pos_ - start));

        if (peek() != '(') {
            if (name == "x") {
                out_.push_leaf(Expression::Op::VarX);
                out_.uses_x = true;
                return;
            }
            if (name == "y") {
                out_.push_leaf(Expression::Op::VarY);
                out_.uses_y = true;
                return;
            }
            throw UnknownIdentifier(start, name,
                                    "unknown identifier '" + name + "' at offset " +
                                        std::to_string(start));
        }

        Expression::Op op;
        if (name == "exp") op = Expression::Op::Exp;
        else if (name == "ln") op = Expression::Op::Ln;
        else if (name == "abs") op = Expression::Op::Abs;
        else if (name == "sqrt") op = Expression::Op::Sqrt;
        else if (name == "sin") op = Expression::Op::Sin;
        else if (name == "cos") op = Expression::Op::Cos;
        else if (name == "arctan" || name == "atan") op = Expression::Op::Arctan;
        else if (name == "pow") op = Expression::Op::Pow;
        else
            throw UnknownIdentifier(start, name,
                                    "unknown function '" + name + "' at offset " +
                                        std::to_string(start));

        expect('(');
        parse_expr(depth + 1);
        if (op == Expression::Op::Pow) {
            expect(',');
            parse_expr(depth + 1);
            expect(')');
            out_.push_binary(op);
            return;
        }
        expect(')');
        out_.push_unary(op);
    }
};

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
    return v;
}

double eval_pow(double base, double exponent) {
    if (base < 0.0) {
        // Only integer exponents keep a negative base real.
        if (exponent != std::floor(exponent))
            throw DomainError("non-integer power of a negative base");
    }
    if (base == 0.0 && exponent < 0.0) throw DomainError("zero raised to a negative power");
    return checked(std::pow(base, exponent), "pow");
}

std::string format_number(double v) {
    std::array<char, 40> buf;
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return std::string(buf.data());
}

}  // namespace

Expression parse(std::string_view source) {
    if (source.empty())
        throw ParseError(0, "expression", "parse error at offset 0: empty input");
    Builder b;
    Parser(source, b).run();
    Expression e;
    e.nodes_ = std::move(b.nodes);
    e.stack_depth_ = b.max_depth;
    e.uses_x_ = b.uses_x;
    e.uses_y_ = b.uses_y;
    return e;
}

double Expression::eval(double x, double y) const {
    std::array<double, 64> fixed;
    fixed[0] = 0.0;
    std::vector<double> spill;
    double* stack = fixed.data();
    if (stack_depth_ > fixed.size()) {
        spill.resize(stack_depth_);
        stack = spill.data();
    }
    std::size_t top = 0;

    for (const Node& n : nodes_) {
        switch (n.op) {
            case Op::Num: stack[top++] = n.value; break;
            case Op::VarX: stack[top++] = x; break;
            case Op::VarY: stack[top++] = y; break;
            case Op::Add: {
                double b = stack[--top];
                stack[top - 1] = checked(stack[top - 1] + b, "+");
                break;
            }
            case Op::Sub: {
                double b = stack[--top];
                stack[top - 1] = checked(stack[top - 1] - b, "-");
                break;
            }
            case Op::Mul: {
                double b = stack[--top];
                stack[top - 1] = checked(stack[top - 1] * b, "*");
                break;
            }
            case Op::Div: {
                double b = stack[--top];
                if (b == 0.0) throw DomainError("division by zero");
                stack[top - 1] = checked(stack[top - 1] / b, "/");
                break;
            }
            case Op::Pow: {
                double b = stack[--top];
                stack[top - 1] = eval_pow(stack[top - 1], b);
                break;
            }
            case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
            case Op::Exp: stack[top - 1] = checked(std::exp(stack[top - 1]), "exp"); break;
            case Op::Ln: {
                double a = stack[top - 1];
                if (a <= 0.0) throw DomainError("ln of a non-positive value");
                stack[top - 1] = checked(std::log(a), "ln");
                break;
            }
            case Op::Abs: stack[top - 1] = std::fabs(stack[top - 1]); break;
            case Op::Sqrt: {
                double a = stack[top - 1];
                if (a < 0.0) throw DomainError("sqrt of a negative value");
                stack[top - 1] = std::sqrt(a);
                break;
            }
            case Op::Sin: stack[top - 1] = checked(std::sin(stack[top - 1]), "sin"); break;
            case Op::Cos: stack[top - 1] = checked(std::cos(stack[top - 1]), "cos"); break;
            case Op::Arctan: stack[top - 1] = std::atan(stack[top - 1]); break;
        }
    }
    return stack[0];
}

std::string Expression::to_string() const {
    struct Frag {
        std::string text;
        int prec;
    };
    std::vector<Frag> st;

    auto wrap = [](const Frag& f, int min_prec) {
        return f.prec < min_prec ? "(" + f.text + ")" : f.text;
    };
    auto binary = [&](const char* sym, int prec, int left_min, int right_min) {
        Frag rhs = std::move(st.back());
        st.pop_back();
        Frag lhs = std::move(st.back());
        st.pop_back();
        st.push_back({wrap(lhs, left_min) + sym + wrap(rhs, right_min), prec});
    };
    auto call = [&](const char* name) {
        Frag a = std::move(st.back());
        st.pop_back();
        st.push_back({std::string(name) + "(" + a.text + ")", 5});
    };

    for (const Node& n : nodes_) {
        switch (n.op) {
            case Op::Num: st.push_back({format_number(n.value), 5}); break;
            case Op::VarX: st.push_back({"x", 5}); break;
            case Op::VarY: st.push_back({"y", 5}); break;
            case Op::Add: binary("+", 1, 1, 2); break;
            case Op::Sub: binary("-", 1, 1, 2); break;
            case Op::Mul: binary("*", 2, 2, 3); break;
            case Op::Div: binary("/", 2, 2, 3); break;
            // compound operands are parenthesized so the printed tree
            // re-parses to the exact same shape
            case Op::Pow: binary("^", 4, 5, 5); break;
            case Op::Neg: {
                Frag a = std::move(st.back());
                st.pop_back();
                st.push_back({"-" + wrap(a, 5), 3});
                break;
            }
            case Op::Exp: call("exp"); break;
            case Op::Ln: call("ln"); break;
            case Op::Abs: call("abs"); break;
            case Op::Sqrt: call("sqrt"); break;
            case Op::Sin: call("sin"); break;
            case Op::Cos: call("cos"); break;
            case Op::Arctan: call("arctan"); break;
        }
    }
    return st.front().text;
}

Expression substitute_y(const Expression& e, double value) {
    Expression out = e;
    for (auto& n : out.nodes_)
        if (n.op == Expression::Op::VarY) n = {Expression::Op::Num, value};
    out.uses_y_ = false;
    return out;
}

Expression negate(const Expression& e) {
    Expression out = e;
    out.nodes_.push_back({Expression::Op::Neg, 0.0});
    return out;
}

ScalarField::ScalarField(Expression expr, int arity, std::string source)
    : expr_(std::move(expr)), arity_(arity), source_(std::move(source)) {
    if (arity_ != 1 && arity_ != 2)
        throw ConfigError("scalar field arity must be 1 or 2");
    if (arity_ == 1 && expr_.uses_y())
        throw UnknownIdentifier(0, "y", "arity-1 field must not reference y: " + source_);
}

ScalarField make_field(std::string_view source, int arity) {
    return ScalarField(parse(source), arity, std::string(source));
}

double evaluate(const ScalarField& field, double x, double y) {
    return field(x, y);
}

}  // namespace rigidlab
