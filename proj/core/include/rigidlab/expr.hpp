#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rigidlab/errors.hpp"

namespace rigidlab {

// Closed-form expression over the variables x, y. Immutable after parse;
// evaluation is pure and reentrant. Stored in postorder, which doubles as
// the evaluation program.
class Expression {
public:
    enum class Op : std::uint8_t {
        Num,
        VarX,
        VarY,
        Add,
        Sub,
        Mul,
        Div,
        Pow,
        Neg,
        Exp,
        Ln,
        Abs,
        Sqrt,
        Sin,
        Cos,
        Arctan,
    };

    struct Node {
        Op op;
        double value = 0.0;  // payload for Num
    };

    // Evaluates at (x, y). Throws DomainError whenever a sub-expression
    // leaves its domain or any intermediate value is non-finite.
    double eval(double x, double y) const;

    // Structure-preserving infix form: parse(to_string()) rebuilds an
    // identical tree, so re-evaluation performs the same operations.
    std::string to_string() const;

    bool uses_x() const { return uses_x_; }
    bool uses_y() const { return uses_y_; }

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    friend Expression parse(std::string_view source);
    friend Expression substitute_y(const Expression& e, double value);
    friend Expression negate(const Expression& e);

    std::vector<Node> nodes_;  // postorder
    std::size_t stack_depth_ = 0;
    bool uses_x_ = false;
    bool uses_y_ = false;
};

// Recursive-descent parser for the grammar in docs/grammar.ebnf.
// Precedence: ^ (right-assoc) > unary - > * / > + - (left-assoc).
// Throws ParseError / UnknownIdentifier on malformed input.
Expression parse(std::string_view source);

// Leaf substitution y := value; the result no longer references y.
Expression substitute_y(const Expression& e, double value);

// Wraps the expression in a negation.
Expression negate(const Expression& e);

// An evaluable function f: R^2 -> R (arity 2) or g: R -> R (arity 1),
// backed by a parsed expression. Arity-1 fields may not reference y.
class ScalarField {
public:
    ScalarField(Expression expr, int arity, std::string source);

    double operator()(double x, double y = 0.0) const { return expr_.eval(x, y); }

    int arity() const { return arity_; }
    const std::string& source() const { return source_; }
    const Expression& expression() const { return expr_; }

private:
    Expression expr_;
    int arity_;
    std::string source_;
};

ScalarField make_field(std::string_view source, int arity);

// Finite real value or DomainError; arity-1 fields ignore the y coordinate.
double evaluate(const ScalarField& field, double x, double y = 0.0);

}  // namespace rigidlab
