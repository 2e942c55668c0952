#ifndef ATTRSCOPE_ERROR_HPP
#define ATTRSCOPE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace attrscope {

enum class ErrorKind {
    Parse,
    Schema,
    Io,
    Argument,
    DegenerateInput,
    NotFound,
    Conflict,
    Cancelled,
};

std::string_view to_string(ErrorKind kind);

/**
 * Base of every exception thrown by the library. The kind lets callers
 * (notably the HTTP layer and the CLI) map failures onto status codes
 * without a ladder of catch clauses.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed JSON or otherwise unreadable document structure.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

/// Well-formed input that violates a data-model invariant.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorKind::Schema, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& what) : Error(ErrorKind::DegenerateInput, what) {}
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& what) : Error(ErrorKind::NotFound, what) {}
};

class Conflict : public Error {
public:
    explicit Conflict(const std::string& what) : Error(ErrorKind::Conflict, what) {}
};

class Cancelled : public Error {
public:
    explicit Cancelled(const std::string& what) : Error(ErrorKind::Cancelled, what) {}
};

/// Rethrows `e` as the same concrete kind with `prefix` prepended to the message.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view prefix);

} // namespace attrscope

#endif
