#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace plaplab {

/// A compiled arithmetic expression over a fixed set of named variables.
///
/// Supported grammar: numbers, variables, + - * / ^ (right-associative power),
/// parentheses, and the functions exp, expm1, log, log1p, sqrt, abs, pow,
/// min, max. Evaluation is a pure function of the variable vector.
class Expression {
public:
    Expression() = default;

    /// Compiles `source` against the given variable names. Throws DomainError
    /// on syntax errors or unknown identifiers, naming the offending token.
    static Expression parse(const std::string& source, const std::vector<std::string>& variables);

    double eval(std::span<const double> values) const;

    const std::string& source() const { return source_; }
    bool empty() const { return root_ == nullptr; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string source_;
    std::size_t n_vars_ = 0;
};

} // namespace plaplab
