#pragma once

#include <stdexcept>
#include <string>

namespace pads {

enum class ErrorCode {
    invalid_input,
    ordering,
    invalid_source,
    invalid_step,
    infeasible,
    degenerate,
    under_trained,
    no_information,
    undefined_rate,
    config,
    data,
    unsupported,
    numerical,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_input: return "invalid input";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::invalid_source: return "invalid source";
    case ErrorCode::invalid_step: return "invalid step";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::under_trained: return "under-trained";
    case ErrorCode::no_information: return "no information";
    case ErrorCode::undefined_rate: return "undefined rate";
    case ErrorCode::config: return "config";
    case ErrorCode::data: return "data";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::numerical: return "numerical";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace pads
