#pragma once

#include <stdexcept>
#include <string>

namespace dualfield {

/// Base of every precondition failure raised by the library.
///
/// Callers that only need to distinguish "bad numerical input" from other
/// failures catch this; the subclasses exist so tests and the scenario
/// runner can tell the specific cases apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

/// Asymmetrizing angle requested for a pair with zero charge norm.
class ZeroChargeNorm : public Error {
public:
    using Error::Error;
};

class SingularPoint : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class InvalidGrid : public Error {
public:
    using Error::Error;
};

class SourceOutsideBox : public Error {
public:
    using Error::Error;
};

/// Gaussian smearing narrower than the grid can represent.
class UnresolvedSmearing : public Error {
public:
    using Error::Error;
};

class CflViolation : public Error {
public:
    using Error::Error;
};

class MixedChargeRatio : public Error {
public:
    using Error::Error;
};

class CoincidentSources : public Error {
public:
    using Error::Error;
};

class DegeneratePlane : public Error {
public:
    using Error::Error;
};

/// A field that must be divergence-free (or a transverse split that does
/// not match its full field) failed the projector check.
class NotTransverse : public Error {
public:
    using Error::Error;
};

class Aliasing : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dualfield
