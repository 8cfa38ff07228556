#include "traceconf/error.hpp"

namespace traceconf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse: return "parse";
        case ErrorCode::schema: return "schema";
        case ErrorCode::input: return "input";
        case ErrorCode::config: return "config";
        case ErrorCode::io: return "io";
        case ErrorCode::state: return "state";
        case ErrorCode::degenerate_labels: return "degenerate_labels";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::stratification: return "stratification";
        case ErrorCode::remote_provider: return "remote_provider";
    }
    return "unknown";
}

}  // namespace traceconf
