#pragma once

#include <stdexcept>
#include <string>

namespace lucgen {

// Error taxonomy. The CLI maps these onto process exit codes:
// ConfigError -> 1, IngestError -> 2, NumericError -> 3.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or a diverged optimization.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing/malformed input files or unusable data.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad run configuration or CLI usage.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lucgen
