#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oodn {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. Line and column are 1-based.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Runtime failure while evaluating an expression; `node` is the printed
/// offending subexpression.
class EvalError : public Error {
public:
    EvalError(const std::string& message, std::string node)
        : Error(message + " in `" + node + "`"), node_(std::move(node)) {}

    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

/// A structural invariant of a domain value was broken.
class ModelError : public Error {
public:
    using Error::Error;
};

/// A modifier could not be applied to its target.
class ModifierError : public Error {
public:
    using Error::Error;
};

/// Network-level failures: duplicate names, dangling references, disabled
/// exploiters.
class NetworkError : public Error {
public:
    using Error::Error;
};

/// Document load failure. `path` points into the document, JSON-pointer style.
class LoadError : public Error {
public:
    LoadError(std::string path, const std::string& message)
        : Error((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace oodn
