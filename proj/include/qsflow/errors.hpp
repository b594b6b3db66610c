#pragma once

#include <stdexcept>
#include <string>

namespace qsflow {

// Error categories. Numeric values are part of the C ABI (see qsflow.h) and
// of the CLI exit-code convention: 0 success, 1 verification failure,
// 2 mathematical-domain failure, 64 configuration error.
enum class ErrorCode : int {
    ok = 0,
    verify_failed = 1,
    domain_failure = 2,
    invalid_argument = 3,
    io_failure = 4,
    numerical_failure = 5,
    config_error = 64,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace qsflow
