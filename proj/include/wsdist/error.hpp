#pragma once

#include <stdexcept>
#include <string>

namespace wsdist {

enum class ErrorCode {
    invalid_argument = 1,
    shape_mismatch,
    parse,
    io,
    unsupported,
    numeric,
    precondition,
};

// All library failures are reported with this exception type. The C API
// translates the code one-to-one into wsdist_status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace wsdist
