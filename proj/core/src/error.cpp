#include "attrscope/error.hpp"

namespace attrscope {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Argument: return "ArgumentError";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::Conflict: return "Conflict";
    case ErrorKind::Cancelled: return "Cancelled";
    }
    return "Error";
}

void rethrow_with_context(const Error& e, std::string_view prefix) {
    std::string msg(prefix);
    msg += ": ";
    msg += e.what();
    switch (e.kind()) {
    case ErrorKind::Parse: throw ParseError(msg);
    case ErrorKind::Schema: throw SchemaError(msg);
    case ErrorKind::Io: throw IoError(msg);
    case ErrorKind::Argument: throw ArgumentError(msg);
    case ErrorKind::DegenerateInput: throw DegenerateInput(msg);
    case ErrorKind::NotFound: throw NotFound(msg);
    case ErrorKind::Conflict: throw Conflict(msg);
    case ErrorKind::Cancelled: throw Cancelled(msg);
    }
    throw Error(e.kind(), msg);
}

} // namespace attrscope
