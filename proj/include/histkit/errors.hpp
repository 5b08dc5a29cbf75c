#pragma once

#include <stdexcept>
#include <string>

namespace histkit {

// Caller passed structurally invalid input (dimension mismatch, empty
// decomposition, bad mask length, malformed time grid, ...).
struct ContractViolation : std::invalid_argument {
    explicit ContractViolation(const std::string& msg) : std::invalid_argument(msg) {}
};

// Input data failed a numerical validation gate (non-unitary matrix where a
// unitary is required, decomposition residual above threshold, ...).  The
// message always names the offending residual and the threshold it broke.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A logical operation was requested between events whose projectors do not
// commute; no Boolean combination exists for them.
struct IncommensurableError : std::runtime_error {
    explicit IncommensurableError(const std::string& msg) : std::runtime_error(msg) {}
};

// An inference mixed histories from incompatible families: one of the
// operands cannot be expressed as a coarse graining of the target family.
struct SingleFamilyViolation : std::runtime_error {
    explicit SingleFamilyViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// An enumeration (fine histories, algebra closure, exhaustive search) would
// exceed its size cap.
struct EnumerationOverflow : std::runtime_error {
    explicit EnumerationOverflow(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace histkit
