#pragma once

#include <stdexcept>
#include <string>

namespace hmlnv {

/// Bad model structure, unknown names, invalid parameters.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Spec DSL or data file could not be parsed; carries line/column.
struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " (line " + std::to_string(line_) + ", column " +
                             std::to_string(col_) + ")"),
          line(line_),
          column(col_) {}
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A precondition stated by an operation's contract was violated by the caller.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Evaluation hit a missing assignment or an unbound value.
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exact enumeration asked to run past its configured cap, or a solver limit.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hmlnv
