#pragma once

#include <stdexcept>
#include <string>

namespace semibin {

// Base for every error the library raises on purpose. The CLI maps
// InputError to exit status 2 and everything else to 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

// Malformed data, configuration or file contents.
class InputError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "input_error"; }
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "contract_violation"; }
};

// Every component density of some observation is exactly zero.
class DegenerateLikelihood : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "degenerate_likelihood"; }
};

// A mixture component has lost all of its responsibility.
class DegenerateComponent : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "degenerate_component"; }
};

class OptimizerFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "optimizer_failure"; }
};

}  // namespace semibin
