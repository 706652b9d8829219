#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vta {

enum class ErrorCode {
    MalformedRecord,
    EmptyField,
    DanglingEdge,
    DuplicateConcept,
    DuplicateEdge,
    SelfLoop,
    UnknownConcept,
    AdapterUnavailable,
    UnknownItem,
    AlreadyAnswered,
    DuplicateSnippetId,
    UnknownSnippet,
    RemoteUnavailable,
    EmptyStore,
    UnknownSession,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code);

// Every failure the engine reports carries one of the codes above so that
// the service layer can map it to exactly one HTTP status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace vta
