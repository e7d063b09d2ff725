#pragma once

#include <stdexcept>
#include <string>

namespace cam {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad knob values, missing API key, malformed config file.
struct ConfigError : Error {
    using Error::Error;
};

// Upstream embedding/LLM call failed after retries; batch must be rejected.
struct ProviderError : Error {
    explicit ProviderError(const std::string& msg, int status = 0)
        : Error(msg), status(status) {}
    int status;
};

// Snapshot bytes do not match their recorded digest (or file is truncated).
struct IntegrityError : Error {
    using Error::Error;
};

// Snapshot written by an unknown format version.
struct VersionError : Error {
    using Error::Error;
};

// Internal structural invariant broken (bug, or snapshot tampered with).
struct ConsistencyError : Error {
    using Error::Error;
};

// Retrieval against a hierarchy with no nodes.
struct EmptyMemoryError : Error {
    using Error::Error;
};

}  // namespace cam
