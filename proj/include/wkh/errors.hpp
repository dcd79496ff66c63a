#pragma once

#include <stdexcept>
#include <string>

namespace wkh {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: non-finite values, wrong lengths, non-positive parameters.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// The requested operation is not defined for these parameters
// (e.g. the potential of a heterogeneous market).
class UnsupportedCase : public Error {
public:
    using Error::Error;
};

// A documented precondition does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Adaptive step size collapsed below the floor.
class StiffnessError : public Error {
public:
    using Error::Error;
};

// Enumeration would produce more points than the library will materialize.
class CombinatorialExplosion : public Error {
public:
    using Error::Error;
};

}  // namespace wkh
