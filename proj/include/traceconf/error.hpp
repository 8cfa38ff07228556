#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace traceconf {

enum class ErrorCode {
    parse,
    schema,
    input,
    config,
    io,
    state,
    degenerate_labels,
    insufficient_data,
    stratification,
    remote_provider,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the core carries one of the codes above; the C API
/// maps them onto status values and the CLI onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace traceconf
