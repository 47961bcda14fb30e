#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace g5 {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or unusable concealment key material.
struct ConcealmentError : Error {
    using Error::Error;
};

// Authentication-tag or MAC mismatch; never reported as wrong data silently.
struct IntegrityError : Error {
    using Error::Error;
};

struct NegotiationError : Error {
    using Error::Error;
};

struct AllocationError : Error {
    using Error::Error;
};

// Structured-text / config decoding failure. `where` is a line number for
// traces and a field path for profile files.
struct ParseError : Error {
    ParseError(const std::string& where, const std::string& what)
        : Error(where + ": " + what), where(where) {}
    std::string where;
};

// Neither endpoint can make progress and the UE is not in a terminal state.
struct StallError : Error {
    explicit StallError(const std::string& phase)
        : Error("protocol stall, last UE phase: " + phase), phase(phase) {}
    std::string phase;
};

// An adversary hook was installed beyond the declared capability set.
struct CapabilityError : Error {
    using Error::Error;
};

}  // namespace g5
