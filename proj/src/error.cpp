#include "maskaggr/error.hpp"

namespace maskaggr {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::OutOfBounds: return "out_of_bounds";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::WindowMismatch: return "window_mismatch";
    case ErrorKind::UnsupportedScale: return "unsupported_scale";
    case ErrorKind::ValueOutOfRange: return "value_out_of_range";
    case ErrorKind::FileNotFound: return "file_not_found";
    case ErrorKind::MalformedHeader: return "malformed_header";
    case ErrorKind::LengthMismatch: return "length_mismatch";
    case ErrorKind::UnsupportedDtype: return "unsupported_dtype";
    case ErrorKind::EmptyGraph: return "empty_graph";
    case ErrorKind::NoSeeds: return "no_seeds";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

ExitCode exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::WindowMismatch:
    case ErrorKind::UnsupportedScale:
        return ExitCode::ConfigError;
    case ErrorKind::FileNotFound:
    case ErrorKind::MalformedHeader:
    case ErrorKind::LengthMismatch:
    case ErrorKind::UnsupportedDtype:
        return ExitCode::IoError;
    default:
        return ExitCode::ComputationError;
    }
}

}  // namespace maskaggr
