#pragma once

#include <stdexcept>
#include <string>

namespace bml {

enum class ErrorCode {
    invalid_argument = 1,
    dimension_mismatch,
    parse_error,
    io_error,
    cap_exceeded,
    not_bipartite,
    non_finite,
};

// Every failure raised by the core carries one of the codes above so the C
// layer can map it onto a status value without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace bml
