#pragma once

#include <stdexcept>
#include <string>

namespace effstab
{

// Base of all library errors, so callers can catch the family in one place.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands with mismatched variable count, order or dimension.
struct ShapeError : Error {
    using Error::Error;
};

// Constant term outside the domain of an intrinsic (log of a negative, 1/0, ...).
struct DomainError : Error {
    using Error::Error;
};

// A distance to a primary fell below the collision floor.
struct SingularityError : Error {
    using Error::Error;
};

// The integrator could not make progress or a crossing was not transversal.
struct IntegrationError : Error {
    using Error::Error;
};

struct NewtonError : Error {
    using Error::Error;
};

// The linearised map is not elliptic (eigenvalues off the unit circle or real).
struct SpectrumError : Error {
    using Error::Error;
};

struct NormalizationError : Error {
    using Error::Error;
};

struct EstimateError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace effstab
