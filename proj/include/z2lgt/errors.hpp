#pragma once

#include <stdexcept>
#include <string>

namespace z2lgt {

/** Malformed input: unknown IDs, missing fields, inconsistent constraints. */
class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/** Parameters outside the physical domain of a formula or model. */
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/** Numerical procedure failed to reach its tolerance. */
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace z2lgt
