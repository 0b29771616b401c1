#pragma once

#include <stdexcept>
#include <string>

namespace drfn {

/// Shape or dimension disagreement between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Violated call contract (non-scalar loss, bad configuration, ...).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed or inconsistent input data. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf produced during computation or training. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace drfn
