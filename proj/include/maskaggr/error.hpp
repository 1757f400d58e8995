#pragma once

#include <stdexcept>
#include <string>

namespace maskaggr {

enum class ErrorKind {
    InvalidArgument,
    OutOfBounds,
    ShapeMismatch,
    WindowMismatch,
    UnsupportedScale,
    ValueOutOfRange,
    FileNotFound,
    MalformedHeader,
    LengthMismatch,
    UnsupportedDtype,
    EmptyGraph,
    NoSeeds,
    Config,
};

const char* to_string(ErrorKind kind);

// Process exit codes used by the command line tool.
enum class ExitCode : int {
    Success = 0,
    ConfigError = 2,
    IoError = 3,
    ComputationError = 4,
};

ExitCode exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace maskaggr
