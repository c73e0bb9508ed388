#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace crookmap {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (preconditions, malformed parameters).
struct ParamError : Error {
    explicit ParamError(const std::string& msg) : Error(msg) {}
};

// A point or value outside the domain of an operation.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Deterministic resource guard: the operation would exceed an explicit
// budget. `required` carries the exact size the operation would need
// (0 when unknown), so failures are diagnosable rather than silent.
struct BudgetError : Error {
    std::string required;  // decimal string; may exceed 64 bits
    std::uint64_t limit;
    BudgetError(const std::string& msg, std::string required_, std::uint64_t limit_)
        : Error(msg), required(std::move(required_)), limit(limit_) {}
};

// Two points in different arc components (backs the INFINITE map-distance
// convention).
struct NoPathError : Error {
    explicit NoPathError(const std::string& msg) : Error(msg) {}
};

// The model lacks a capability required by the operation (e.g. no
// embedding).
struct CapabilityError : Error {
    explicit CapabilityError(const std::string& msg) : Error(msg) {}
};

// A map image left the model's fiber set (only reachable on invalid input).
struct RoutingError : Error {
    explicit RoutingError(const std::string& msg) : Error(msg) {}
};

// Malformed serialized input.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

}  // namespace crookmap
